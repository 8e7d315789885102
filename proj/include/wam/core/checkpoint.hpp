#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "wam/core/aligned.hpp"
#include "wam/core/tensor.hpp"

namespace wam {

std::uint64_t fnv1a64(const std::string& text);

// Self-describing binary training snapshot: every parameter with its Adam
// moments, batch-norm running statistics, normalization statistics, RNG seed
// and a fingerprint of the architecture/config. Round trips bit-exactly.
struct Checkpoint {
    struct ParamEntry {
        std::string name;
        Shape shape;
        AVec<float> value;
        AVec<float> m;
        AVec<float> v;
        std::int64_t step_count = 0;
    };
    struct BnEntry {
        std::string name;
        std::vector<float> running_mean;
        std::vector<float> running_var;
        bool initialized = false;
    };

    std::uint64_t fingerprint = 0;
    std::string config_text;       // canonical config the fingerprint hashes
    std::uint64_t rng_seed = 0;
    std::string norm_stats_text;   // serialized normalization statistics
    std::vector<ParamEntry> params;
    std::vector<BnEntry> bn_stats;

    void save(const std::string& path) const;
    static Checkpoint load(const std::string& path);
};

}  // namespace wam
