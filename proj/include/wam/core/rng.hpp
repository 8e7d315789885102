#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

namespace wam {

// Deterministic 64-bit generator (splitmix64 core). Distributions are
// implemented here rather than with <random> so that streams are pinned to
// the seed alone, independent of the standard library version.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed), have_spare_(false), spare_(0.0) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // uniform in [0, 1)
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // [0, n)
    std::uint64_t below(std::uint64_t n) { return next_u64() % n; }

    // standard normal via Box-Muller
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = 0.0;
        do {
            u1 = uniform();
        } while (u1 <= 0.0);
        double u2 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    bool bernoulli(double p) { return uniform() < p; }

    // Deterministic Fisher-Yates (std::shuffle ordering is not pinned).
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

    // Independent child stream, keyed so that parallel consumers (samples,
    // grid cells) never share state.
    Rng fork(std::uint64_t stream) const {
        std::uint64_t h = state_ ^ 0x9e3779b97f4a7c15ULL;
        h ^= stream + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
        h *= 0xff51afd7ed558ccdULL;
        h ^= h >> 33;
        return Rng(h);
    }

private:
    std::uint64_t state_;
    bool have_spare_;
    double spare_;
};

}  // namespace wam
