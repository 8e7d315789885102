#include "wam/geo/normalize.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "wam/core/checkpoint.hpp"
#include "wam/core/error.hpp"

namespace wam::geo {

namespace {

const char* kChannelNames[kNumChannels] = {
    "u10",
    "v10",
    "greenness",
    "dewpoint_trend",
    "net_solar_trend",
    "net_thermal_trend",
    "thermal_down_trend",
    "solar_down_trend",
    "ozone_trend",
};

const char* kLabelNames[kNumLabels] = {
    "burnt_area_m", "control_min", "extinction_min",
    "human_units",  "heavy_units", "aerial_units",
};

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

const char* channel_name(Channel c) { return kChannelNames[static_cast<int>(c)]; }
const char* label_name(Label l) { return kLabelNames[static_cast<int>(l)]; }

std::uint64_t channel_order_fingerprint() {
    std::string joined;
    for (const char* n : kChannelNames) {
        joined += n;
        joined += ',';
    }
    return fnv1a64(joined);
}

NormalizationStats::NormalizationStats() : fingerprint(channel_order_fingerprint()) {
    channel_std.fill(1.0);
    label_max.fill(1.0);
}

void zscore_fit(NormalizationStats& stats, int channel, const std::vector<double>& values) {
    if (channel < 0 || channel >= kNumChannels)
        throw Error("zscore_fit: channel index " + std::to_string(channel) + " out of range");
    if (values.empty())
        throw Error(std::string("zscore_fit: no values for channel ") + kChannelNames[channel]);
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= static_cast<double>(values.size());
    double var = 0.0;
    for (double v : values) var += (v - mean) * (v - mean);
    var /= static_cast<double>(values.size());
    const double sd = std::sqrt(var);
    if (sd <= 0.0)
        throw Error(std::string("zscore_fit: zero variance in channel ") + kChannelNames[channel]);
    stats.channel_mean[channel] = mean;
    stats.channel_std[channel] = sd;
    stats.has_channels = true;
}

double zscore_apply(const NormalizationStats& stats, int channel, double value) {
    return (value - stats.channel_mean[channel]) / stats.channel_std[channel];
}

void minmax_fit(NormalizationStats& stats,
                const std::vector<std::array<double, kNumLabels>>& labels) {
    if (labels.empty()) throw Error("minmax_fit: empty label set");
    for (int l = 0; l < kNumLabels; ++l) {
        double lo = labels[0][l], hi = labels[0][l];
        for (const auto& row : labels) {
            lo = std::min(lo, row[l]);
            hi = std::max(hi, row[l]);
        }
        if (hi <= lo)
            throw Error(std::string("minmax_fit: zero range in label ") + kLabelNames[l]);
        stats.label_min[l] = lo;
        stats.label_max[l] = hi;
    }
    stats.has_labels = true;
}

double minmax_apply(const NormalizationStats& stats, int label, double value) {
    return (value - stats.label_min[label]) / (stats.label_max[label] - stats.label_min[label]);
}

double minmax_invert(const NormalizationStats& stats, int label, double normalized) {
    return stats.label_min[label] +
           normalized * (stats.label_max[label] - stats.label_min[label]);
}

std::string NormalizationStats::serialize() const {
    std::ostringstream os;
    os << "WAMSTATS 1\n";
    os << "fingerprint: " << fingerprint << "\n";
    os << "channel_order:";
    for (const char* n : kChannelNames) os << " " << n;
    os << "\n";
    if (has_channels)
        for (int c = 0; c < kNumChannels; ++c)
            os << "channel " << kChannelNames[c] << " mean " << fmt(channel_mean[c]) << " std "
               << fmt(channel_std[c]) << "\n";
    if (has_labels)
        for (int l = 0; l < kNumLabels; ++l)
            os << "label " << kLabelNames[l] << " min " << fmt(label_min[l]) << " max "
               << fmt(label_max[l]) << "\n";
    return os.str();
}

NormalizationStats NormalizationStats::parse(const std::string& text) {
    std::istringstream is(text);
    std::string line;
    if (!std::getline(is, line) || line != "WAMSTATS 1")
        throw Error("stats: bad header");
    NormalizationStats s;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::string kind;
        ss >> kind;
        if (kind == "fingerprint:") {
            ss >> s.fingerprint;
            if (s.fingerprint != channel_order_fingerprint())
                throw Error("stats: channel order fingerprint mismatch (document " +
                            std::to_string(s.fingerprint) + ", build " +
                            std::to_string(channel_order_fingerprint()) + ")");
        } else if (kind == "channel_order:") {
            // informational; fingerprint is the contract
        } else if (kind == "channel") {
            std::string name, mk, sk;
            double mean, sd;
            ss >> name >> mk >> mean >> sk >> sd;
            int idx = -1;
            for (int c = 0; c < kNumChannels; ++c)
                if (name == kChannelNames[c]) idx = c;
            if (idx < 0 || mk != "mean" || sk != "std")
                throw Error("stats: malformed channel line: " + line);
            s.channel_mean[idx] = mean;
            s.channel_std[idx] = sd;
            s.has_channels = true;
        } else if (kind == "label") {
            std::string name, mk, xk;
            double lo, hi;
            ss >> name >> mk >> lo >> xk >> hi;
            int idx = -1;
            for (int l = 0; l < kNumLabels; ++l)
                if (name == kLabelNames[l]) idx = l;
            if (idx < 0 || mk != "min" || xk != "max")
                throw Error("stats: malformed label line: " + line);
            s.label_min[idx] = lo;
            s.label_max[idx] = hi;
            s.has_labels = true;
        } else {
            throw Error("stats: unknown entry: " + line);
        }
    }
    return s;
}

void NormalizationStats::save(const std::string& path) const {
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw Error("stats: cannot open for writing: " + path);
    os << serialize();
    if (!os) throw Error("stats: write failed: " + path);
}

NormalizationStats NormalizationStats::load(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw Error("stats: cannot open: " + path);
    std::ostringstream buf;
    buf << is.rdbuf();
    return parse(buf.str());
}

}  // namespace wam::geo
