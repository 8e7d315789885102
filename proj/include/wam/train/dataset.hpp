#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "wam/core/rng.hpp"
#include "wam/core/tensor.hpp"
#include "wam/geo/fuse.hpp"

namespace wam::train {

// Unlabelled fused tensors at random valid centers and dates.
std::vector<Tensorf> build_pretrain_set(const geo::SampleStore& store,
                                        const geo::NormalizationStats& stats, int count,
                                        int window, Rng& rng);

struct LabelledSet {
    std::vector<Tensorf> x;
    std::vector<std::array<double, geo::kNumLabels>> y;  // natural units
};

LabelledSet build_labelled_set(const geo::SampleStore& store,
                               const geo::NormalizationStats& stats,
                               const std::vector<geo::WildfireRecord>& records, int window);

// Deterministic shuffled split; first ceil(fraction * n) indices are train.
struct Split {
    std::vector<int> train;
    std::vector<int> test;
};
Split split_random(int n, double train_fraction, Rng& rng);

}  // namespace wam::train
