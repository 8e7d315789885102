#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "wam/geo/grid.hpp"

namespace wam::geo {

inline constexpr int kNumChannels = 9;
inline constexpr int kNumLabels = 6;

// Fixed fused-tensor channel order. Any permutation is a contract violation,
// detectable through the fingerprint carried by NormalizationStats and every
// checkpoint.
enum class Channel {
    U10,
    V10,
    Greenness,
    DewpointTrend,
    NetSolarTrend,
    NetThermalTrend,
    ThermalDownTrend,
    SolarDownTrend,
    OzoneTrend,
};

enum class Label {
    BurntAreaM,
    ControlMin,
    ExtinctionMin,
    HumanUnits,
    HeavyUnits,
    AerialUnits,
};

const char* channel_name(Channel c);
const char* label_name(Label l);
std::uint64_t channel_order_fingerprint();

// Per-channel z-score statistics for inputs, per-label min-max for targets.
struct NormalizationStats {
    std::array<double, kNumChannels> channel_mean{};
    std::array<double, kNumChannels> channel_std{};
    std::array<double, kNumLabels> label_min{};
    std::array<double, kNumLabels> label_max{};
    bool has_channels = false;
    bool has_labels = false;
    std::uint64_t fingerprint = 0;

    NormalizationStats();

    std::string serialize() const;
    static NormalizationStats parse(const std::string& text);
    void save(const std::string& path) const;
    static NormalizationStats load(const std::string& path);
};

// channel z-score
void zscore_fit(NormalizationStats& stats, int channel, const std::vector<double>& values);
double zscore_apply(const NormalizationStats& stats, int channel, double value);

// label min-max
void minmax_fit(NormalizationStats& stats,
                const std::vector<std::array<double, kNumLabels>>& labels);
double minmax_apply(const NormalizationStats& stats, int label, double value);
double minmax_invert(const NormalizationStats& stats, int label, double normalized);

}  // namespace wam::geo
