#include "wam/core/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include "wam/core/error.hpp"

namespace wam {

std::uint64_t fnv1a64(const std::string& text) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= static_cast<std::uint64_t>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

namespace {

constexpr char kMagic[8] = {'W', 'A', 'M', 'C', 'K', 'P', 'T', '\0'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::ostream& os, std::uint32_t v) { os.write(reinterpret_cast<char*>(&v), 4); }
void put_u64(std::ostream& os, std::uint64_t v) { os.write(reinterpret_cast<char*>(&v), 8); }
void put_i64(std::ostream& os, std::int64_t v) { os.write(reinterpret_cast<char*>(&v), 8); }
void put_str(std::ostream& os, const std::string& s) {
    put_u32(os, static_cast<std::uint32_t>(s.size()));
    os.write(s.data(), static_cast<std::streamsize>(s.size()));
}
template <typename Vec>
void put_floats(std::ostream& os, const Vec& v) {
    put_u64(os, v.size());
    os.write(reinterpret_cast<const char*>(v.data()),
             static_cast<std::streamsize>(v.size() * sizeof(float)));
}

std::uint32_t get_u32(std::istream& is) {
    std::uint32_t v = 0;
    is.read(reinterpret_cast<char*>(&v), 4);
    return v;
}
std::uint64_t get_u64(std::istream& is) {
    std::uint64_t v = 0;
    is.read(reinterpret_cast<char*>(&v), 8);
    return v;
}
std::int64_t get_i64(std::istream& is) {
    std::int64_t v = 0;
    is.read(reinterpret_cast<char*>(&v), 8);
    return v;
}
std::string get_str(std::istream& is) {
    std::uint32_t n = get_u32(is);
    std::string s(n, '\0');
    is.read(s.data(), n);
    return s;
}
template <typename Vec = std::vector<float>>
Vec get_floats(std::istream& is) {
    std::uint64_t n = get_u64(is);
    Vec v(n);
    is.read(reinterpret_cast<char*>(v.data()),
            static_cast<std::streamsize>(n * sizeof(float)));
    return v;
}

}  // namespace

void Checkpoint::save(const std::string& path) const {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw Error("checkpoint: cannot open for writing: " + path);
    os.write(kMagic, 8);
    put_u32(os, kVersion);
    put_u64(os, fingerprint);
    put_u64(os, rng_seed);
    put_str(os, config_text);
    put_str(os, norm_stats_text);
    put_u32(os, static_cast<std::uint32_t>(params.size()));
    for (const ParamEntry& p : params) {
        put_str(os, p.name);
        put_u32(os, static_cast<std::uint32_t>(p.shape.rank()));
        for (int i = 0; i < p.shape.rank(); ++i) put_u32(os, static_cast<std::uint32_t>(p.shape[i]));
        put_i64(os, p.step_count);
        put_floats(os, p.value);
        put_floats(os, p.m);
        put_floats(os, p.v);
    }
    put_u32(os, static_cast<std::uint32_t>(bn_stats.size()));
    for (const BnEntry& b : bn_stats) {
        put_str(os, b.name);
        put_u32(os, b.initialized ? 1u : 0u);
        put_floats(os, b.running_mean);
        put_floats(os, b.running_var);
    }
    if (!os) throw Error("checkpoint: write failed: " + path);
}

Checkpoint Checkpoint::load(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw Error("checkpoint: cannot open: " + path);
    char magic[8];
    is.read(magic, 8);
    if (!is || std::memcmp(magic, kMagic, 8) != 0)
        throw Error("checkpoint: bad magic in " + path);
    std::uint32_t version = get_u32(is);
    if (version != kVersion)
        throw Error("checkpoint: unsupported version " + std::to_string(version) + " in " + path);
    Checkpoint ck;
    ck.fingerprint = get_u64(is);
    ck.rng_seed = get_u64(is);
    ck.config_text = get_str(is);
    ck.norm_stats_text = get_str(is);
    std::uint32_t np = get_u32(is);
    ck.params.resize(np);
    for (ParamEntry& p : ck.params) {
        p.name = get_str(is);
        std::uint32_t rank = get_u32(is);
        if (rank < 1 || rank > 4) throw Error("checkpoint: corrupt shape in " + path);
        int dims[4] = {1, 1, 1, 1};
        for (std::uint32_t i = 0; i < rank; ++i) dims[i] = static_cast<int>(get_u32(is));
        switch (rank) {
            case 1: p.shape = Shape{dims[0]}; break;
            case 2: p.shape = Shape{dims[0], dims[1]}; break;
            case 3: p.shape = Shape{dims[0], dims[1], dims[2]}; break;
            default: p.shape = Shape{dims[0], dims[1], dims[2], dims[3]}; break;
        }
        p.step_count = get_i64(is);
        p.value = get_floats<AVec<float>>(is);
        p.m = get_floats<AVec<float>>(is);
        p.v = get_floats<AVec<float>>(is);
    }
    std::uint32_t ns = get_u32(is);
    ck.bn_stats.resize(ns);
    for (BnEntry& b : ck.bn_stats) {
        b.name = get_str(is);
        b.initialized = get_u32(is) != 0;
        b.running_mean = get_floats<>(is);
        b.running_var = get_floats<>(is);
    }
    if (!is) throw Error("checkpoint: truncated file: " + path);
    return ck;
}

}  // namespace wam
