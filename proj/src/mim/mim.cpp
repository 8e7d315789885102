#include "wam/mim/mim.hpp"

#include <cmath>
#include <string>

#include "wam/core/error.hpp"

namespace wam::mim {

BinningScheme BinningScheme::standard(int bins) {
    if (bins < 2) throw Error("binning: need at least 2 bins, got " + std::to_string(bins));
    BinningScheme s;
    s.bins = bins;
    for (auto& r : s.range) r = {-4.0, 4.0};
    return s;
}

int BinningScheme::quantize(double mean, int channel) const {
    const auto [lo, hi] = range[channel];
    if (hi <= lo) throw Error("binning: empty range on channel " + std::to_string(channel));
    const double t = (mean - lo) / (hi - lo) * static_cast<double>(bins);
    const int bin = static_cast<int>(std::floor(t));
    return bin < 0 ? 0 : (bin >= bins ? bins - 1 : bin);
}

std::string BinningScheme::describe() const {
    std::string s = "bins=" + std::to_string(bins);
    for (const auto& [lo, hi] : range)
        s += ";" + std::to_string(lo) + ".." + std::to_string(hi);
    return s;
}

std::vector<int> patch_bin_targets(const Tensorf& x, int patch, const BinningScheme& scheme) {
    if (x.shape.rank() != 3)
        throw Error("patch_bin_targets: need rank-3 sample, got " + x.shape.str());
    const int h = x.shape[0], w = x.shape[1], c = x.shape[2];
    if (patch < 1 || h % patch != 0 || w % patch != 0)
        throw Error("patch_bin_targets: extents " + x.shape.str() + " not divisible by patch " +
                    std::to_string(patch));
    const int gh = h / patch, gw = w / patch;
    std::vector<int> out(static_cast<std::size_t>(gh) * gw * c);
    const double inv = 1.0 / static_cast<double>(patch * patch);
    for (int gy = 0; gy < gh; ++gy)
        for (int gx = 0; gx < gw; ++gx)
            for (int ch = 0; ch < c; ++ch) {
                double sum = 0.0;
                for (int dy = 0; dy < patch; ++dy)
                    for (int dx = 0; dx < patch; ++dx)
                        sum += x.data[(static_cast<std::size_t>(gy * patch + dy) * w +
                                       (gx * patch + dx)) *
                                          c +
                                      ch];
                out[(static_cast<std::size_t>(gy) * gw + gx) * c + ch] =
                    scheme.quantize(sum * inv, ch);
            }
    return out;
}

PatchTask partition_and_mask(const Tensorf& x, double p, int patch, const BinningScheme& scheme,
                             Rng& rng) {
    if (x.shape.rank() != 3)
        throw Error("partition_and_mask: need rank-3 sample, got " + x.shape.str());
    if (p <= 0.0 || p > 1.0)
        throw Error("partition_and_mask: mask probability must be in (0,1], got " +
                    std::to_string(p));
    const int h = x.shape[0], w = x.shape[1], c = x.shape[2];
    if (patch < 1 || h % patch != 0 || w % patch != 0)
        throw Error("partition_and_mask: extents " + x.shape.str() + " not divisible by patch " +
                    std::to_string(patch));

    PatchTask task;
    task.grid = h / patch;
    task.patch = patch;
    const int gh = h / patch, gw = w / patch;

    task.mask.assign(static_cast<std::size_t>(gh) * gw, 0);
    bool any = false;
    while (!any) {  // redraw rather than emit an unsupervised task
        for (auto& m : task.mask) {
            m = rng.bernoulli(p) ? 1 : 0;
            any = any || m;
        }
    }

    task.targets = patch_bin_targets(x, patch, scheme);
    task.masked_input = x;
    for (int gy = 0; gy < gh; ++gy)
        for (int gx = 0; gx < gw; ++gx) {
            if (!task.mask[static_cast<std::size_t>(gy) * gw + gx]) continue;
            for (int dy = 0; dy < patch; ++dy)
                for (int dx = 0; dx < patch; ++dx) {
                    float* cell =
                        &task.masked_input.data[(static_cast<std::size_t>(gy * patch + dy) * w +
                                                 (gx * patch + dx)) *
                                                c];
                    for (int ch = 0; ch < c; ++ch) cell[ch] = 0.0f;
                }
        }
    return task;
}

std::vector<std::uint8_t> expand_patch_mask(const std::vector<std::uint8_t>& patch_mask,
                                            int channels) {
    std::vector<std::uint8_t> out(patch_mask.size() * static_cast<std::size_t>(channels));
    for (std::size_t p = 0; p < patch_mask.size(); ++p)
        for (int c = 0; c < channels; ++c) out[p * channels + c] = patch_mask[p];
    return out;
}

double masked_accuracy(const float* logits, std::size_t logit_count,
                       const std::vector<int>& targets,
                       const std::vector<std::uint8_t>& patch_mask, int channels, int bins) {
    const std::size_t rows = targets.size();
    if (rows != patch_mask.size() * static_cast<std::size_t>(channels))
        throw Error("masked_accuracy: targets do not cover patches x channels");
    if (logit_count != rows * static_cast<std::size_t>(bins))
        throw Error("masked_accuracy: logits do not cover " + std::to_string(rows) +
                    " positions x " + std::to_string(bins) + " classes");
    std::size_t masked = 0, hits = 0;
    for (std::size_t p = 0; p < patch_mask.size(); ++p) {
        if (!patch_mask[p]) continue;
        for (int c = 0; c < channels; ++c) {
            const std::size_t r = p * channels + c;
            const float* row = logits + r * bins;
            int best = 0;  // ties: lowest class index
            for (int j = 1; j < bins; ++j)
                if (row[j] > row[best]) best = j;
            hits += best == targets[r] ? 1 : 0;
            ++masked;
        }
    }
    if (masked == 0) throw Error("masked_accuracy: no supervised positions");
    return static_cast<double>(hits) / static_cast<double>(masked);
}

}  // namespace wam::mim
