#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "wam/core/rng.hpp"
#include "wam/core/tensor.hpp"
#include "wam/geo/normalize.hpp"

namespace wam::mim {

// Uniform quantization of patch-channel means into `bins` equal-width
// intervals over a per-channel range; values outside the range clamp to the
// end bins.
struct BinningScheme {
    int bins = 64;
    std::array<std::pair<double, double>, geo::kNumChannels> range{};

    // post-normalization range [-4, 4] on every channel
    static BinningScheme standard(int bins);

    int quantize(double mean, int channel) const;
    std::string describe() const;
};

// Per-sample masking and binning artifacts. The patch grid is
// (spatial extent / patch) per side; masking zeroes all channels of a patch.
struct PatchTask {
    int grid = 0;   // patches per side
    int patch = 0;  // patch extent in cells
    std::vector<std::uint8_t> mask;  // grid*grid, 1 = masked
    std::vector<int> targets;        // grid*grid*channels bin indices
    Tensorf masked_input;            // (h, w, channels) with masked patches zeroed
};

// i.i.d. patch masking with probability p, redrawn until at least one patch
// is masked. p = 0 is rejected; p = 1 masks everything.
PatchTask partition_and_mask(const Tensorf& x, double p, int patch, const BinningScheme& scheme,
                             Rng& rng);

// Quantized per-patch per-channel means, row-major (gy, gx, channel).
std::vector<int> patch_bin_targets(const Tensorf& x, int patch, const BinningScheme& scheme);

// Fraction of (masked patch, channel) positions where argmax(logits) equals
// the target; argmax ties resolve to the lowest class index. logits are
// row-major (patch position, channel, class).
double masked_accuracy(const float* logits, std::size_t logit_count,
                       const std::vector<int>& targets,
                       const std::vector<std::uint8_t>& patch_mask, int channels, int bins);

// patch mask replicated across channels (supervision rows for the loss)
std::vector<std::uint8_t> expand_patch_mask(const std::vector<std::uint8_t>& patch_mask,
                                            int channels);

}  // namespace wam::mim
