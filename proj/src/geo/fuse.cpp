#include "wam/geo/fuse.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "wam/core/error.hpp"
#include "wam/geo/resample.hpp"

namespace wam::geo {

GeoGrid greenness_index(const GeoGrid& red, const GeoGrid& green, const GeoGrid& blue) {
    if (red.lat_axis != green.lat_axis || red.lat_axis != blue.lat_axis ||
        red.lon_axis != green.lon_axis || red.lon_axis != blue.lon_axis)
        throw Error("greenness_index: reflectance grids must share axes");
    if (red.values.size() != green.values.size() || red.values.size() != blue.values.size())
        throw Error("greenness_index: reflectance grids must share extents");
    GeoGrid gi;
    gi.variable = VariableId::Greenness;
    gi.date = green.date;
    gi.units = "1";
    gi.lat_axis = green.lat_axis;
    gi.lon_axis = green.lon_axis;
    gi.values.resize(green.values.size());
    for (std::size_t i = 0; i < gi.values.size(); ++i) {
        const double g = green.values[i], b = blue.values[i], r = red.values[i];
        const double denom = 2.0 * g + b + r;
        gi.values[i] = denom == 0.0 ? std::nan("") : (2.0 * g - b - r) / denom;
    }
    return gi;
}

const GeoGrid& select_daily_reading(const std::map<int, const GeoGrid*>& readings,
                                    VariableId variable, Date date) {
    auto noon = readings.find(12);
    if (noon != readings.end()) return *noon->second;
    auto evening = readings.find(18);
    if (evening != readings.end()) return *evening->second;
    throw Error(std::string("select_daily_reading: no 12:00 or 18:00 reading for ") +
                variable_name(variable) + " on " + date.str());
}

std::vector<double> trend_diff(const std::vector<const GeoGrid*>& series, Date sample_date) {
    const GeoGrid* before = nullptr;
    const GeoGrid* latest = nullptr;
    for (const GeoGrid* g : series) {
        if (g->date > sample_date) break;
        before = latest;
        latest = g;
    }
    if (!latest || !before)
        throw Error("trend_diff: fewer than 2 grids at or before " + sample_date.str());
    if (before->values.size() != latest->values.size())
        throw Error("trend_diff: grids in series have mismatched extents");
    std::vector<double> out(latest->values.size());
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = latest->values[i] - before->values[i];
    return out;
}

void save_records(const std::vector<WildfireRecord>& records, const std::string& path) {
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw Error("records: cannot open for writing: " + path);
    os << "lat,lon,date";
    for (int l = 0; l < kNumLabels; ++l) os << "," << label_name(static_cast<Label>(l));
    os << "\n";
    char buf[32];
    for (const WildfireRecord& r : records) {
        std::snprintf(buf, sizeof buf, "%.17g", r.lat);
        os << buf << ",";
        std::snprintf(buf, sizeof buf, "%.17g", r.lon);
        os << buf << "," << r.date.str();
        for (int l = 0; l < kNumLabels; ++l) {
            std::snprintf(buf, sizeof buf, "%.17g", r.label[l]);
            os << "," << buf;
        }
        os << "\n";
    }
    if (!os) throw Error("records: write failed: " + path);
}

std::vector<WildfireRecord> load_records(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw Error("records: cannot open: " + path);
    std::string line;
    if (!std::getline(is, line) || line.rfind("lat,lon,date", 0) != 0)
        throw Error("records: bad header in " + path);
    std::vector<WildfireRecord> out;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::string field;
        WildfireRecord r;
        std::getline(ss, field, ',');
        r.lat = std::stod(field);
        std::getline(ss, field, ',');
        r.lon = std::stod(field);
        std::getline(ss, field, ',');
        r.date = Date::parse(field);
        for (int l = 0; l < kNumLabels; ++l) {
            if (!std::getline(ss, field, ','))
                throw Error("records: short row in " + path + ": " + line);
            r.label[l] = std::stod(field);
            if (r.label[l] < 0.0)
                throw Error(std::string("records: negative ") +
                            label_name(static_cast<Label>(l)) + " in " + path);
        }
        out.push_back(r);
    }
    if (out.empty()) throw Error("records: no rows in " + path);
    return out;
}

namespace {

// mean-impute NaN cells (undefined greenness pixels)
void impute_missing(std::vector<double>& plane) {
    double sum = 0.0;
    std::size_t count = 0;
    for (double v : plane)
        if (!std::isnan(v)) {
            sum += v;
            ++count;
        }
    if (count == plane.size()) return;
    if (count == 0) throw Error("harmonize: greenness plane has no defined cells");
    const double mean = sum / static_cast<double>(count);
    for (double& v : plane)
        if (std::isnan(v)) v = mean;
}

struct TrendSource {
    Channel channel;
    VariableId variable;
};

constexpr TrendSource kTrendSources[] = {
    {Channel::DewpointTrend, VariableId::Dewpoint2m},
    {Channel::NetSolarTrend, VariableId::NetSolar},
    {Channel::NetThermalTrend, VariableId::NetThermal},
    {Channel::ThermalDownTrend, VariableId::ThermalDown},
    {Channel::SolarDownTrend, VariableId::SolarDown},
    {Channel::OzoneTrend, VariableId::Ozone},
};

}  // namespace

SampleStore SampleStore::harmonize(const GridStore& store, std::vector<Date> sample_dates) {
    std::sort(sample_dates.begin(), sample_dates.end());
    sample_dates.erase(std::unique(sample_dates.begin(), sample_dates.end()),
                       sample_dates.end());
    if (sample_dates.empty()) throw Error("harmonize: no sample dates requested");

    // Greenness from the reflectance triplets; its axes are the common target.
    std::vector<Date> gi_dates = store.dates(VariableId::ReflGreen);
    if (gi_dates.empty()) throw Error("harmonize: no reflectance grids in store");
    std::vector<GeoGrid> gi_grids;
    for (Date d : gi_dates) {
        const GeoGrid* r = store.find(VariableId::ReflRed, d);
        const GeoGrid* g = store.find(VariableId::ReflGreen, d);
        const GeoGrid* b = store.find(VariableId::ReflBlue, d);
        if (!r || !g || !b)
            throw Error("harmonize: incomplete reflectance triplet on " + d.str());
        gi_grids.push_back(greenness_index(*r, *g, *b));
        impute_missing(gi_grids.back().values);
    }
    for (const GeoGrid& g : gi_grids)
        if (g.lat_axis != gi_grids.front().lat_axis || g.lon_axis != gi_grids.front().lon_axis)
            throw Error("harmonize: greenness grids disagree on axes across dates");

    SampleStore out;
    out.lat_axis_ = gi_grids.front().lat_axis;
    out.lon_axis_ = gi_grids.front().lon_axis;

    // date-sorted series per trend variable, at greenness-measurement dates
    std::array<std::vector<const GeoGrid*>, 6> trend_series;
    for (std::size_t t = 0; t < 6; ++t) {
        trend_series[t] = store.series(kTrendSources[t].variable);
        if (trend_series[t].empty())
            throw Error(std::string("harmonize: no grids for ") +
                        variable_name(kTrendSources[t].variable));
    }

    for (Date d : sample_dates) {
        DatePlanes planes;
        planes.date = d;

        // daily group, resampled onto the greenness axes
        for (auto [channel, variable] :
             {std::pair{Channel::U10, VariableId::U10}, {Channel::V10, VariableId::V10}}) {
            const GeoGrid& reading = select_daily_reading(store.readings(variable, d), variable, d);
            planes.planes[static_cast<int>(channel)] =
                resample_bilinear(reading, out.lat_axis_, out.lon_axis_).values;
        }

        // latest greenness at or before the sample date, unmodified
        const GeoGrid* gi = nullptr;
        for (std::size_t k = 0; k < gi_grids.size(); ++k)
            if (gi_dates[k] <= d) gi = &gi_grids[k];
        if (!gi) throw Error("harmonize: no greenness measurement at or before " + d.str());
        planes.planes[static_cast<int>(Channel::Greenness)] = gi->values;

        // discrete differences of the atmospheric trend group
        for (const TrendSource& src : kTrendSources) {
            const std::vector<const GeoGrid*>& series =
                trend_series[&src - kTrendSources];
            std::vector<double> diff = trend_diff(series, d);
            GeoGrid tmp = *series.front();
            tmp.values = std::move(diff);
            planes.planes[static_cast<int>(src.channel)] =
                resample_bilinear(tmp, out.lat_axis_, out.lon_axis_).values;
        }

        out.by_date_.push_back(std::move(planes));
        out.dates_.push_back(d);
    }
    return out;
}

bool SampleStore::has_date(Date d) const {
    for (const DatePlanes& p : by_date_)
        if (p.date == d) return true;
    return false;
}

const SampleStore::DatePlanes& SampleStore::at_date(Date d) const {
    for (const DatePlanes& p : by_date_)
        if (p.date == d) return p;
    throw Error("samples: date " + d.str() + " not harmonized");
}

const std::vector<double>& SampleStore::plane(Date date, Channel channel) const {
    return at_date(date).planes[static_cast<int>(channel)];
}

namespace {
int nearest_index(const std::vector<double>& axis, double x) {
    auto it = std::lower_bound(axis.begin(), axis.end(), x);
    if (it == axis.begin()) return 0;
    if (it == axis.end()) return static_cast<int>(axis.size()) - 1;
    const int hi = static_cast<int>(it - axis.begin());
    return (x - axis[hi - 1] <= axis[hi] - x) ? hi - 1 : hi;
}
}  // namespace

int SampleStore::lat_index(double lat) const { return nearest_index(lat_axis_, lat); }
int SampleStore::lon_index(double lon) const { return nearest_index(lon_axis_, lon); }

FusedSample SampleStore::fuse_at(int i, int j, Date date, int window,
                                 const NormalizationStats& stats) const {
    if (!stats.has_channels) throw Error("fuse: normalization statistics not fitted");
    if (stats.fingerprint != channel_order_fingerprint())
        throw Error("fuse: channel order fingerprint mismatch");
    const DatePlanes& planes = at_date(date);
    const int half = window / 2;
    const int i0 = i - half, j0 = j - half;
    const int nlat = static_cast<int>(lat_axis_.size());
    const int nlon = static_cast<int>(lon_axis_.size());
    if (i0 < 0 || j0 < 0 || i0 + window > nlat || j0 + window > nlon)
        throw Error("fuse: frame violation: window for cell (" + std::to_string(i) + "," +
                    std::to_string(j) + ") on " + date.str() + " extends past coverage");

    FusedSample s;
    s.tensor = Tensorf(Shape{window, window, kNumChannels});
    s.lat = lat_axis_[i];
    s.lon = lon_axis_[j];
    s.date = date;
    for (int c = 0; c < kNumChannels; ++c) {
        const std::vector<double>& plane = planes.planes[c];
        for (int y = 0; y < window; ++y)
            for (int x = 0; x < window; ++x) {
                const double raw = plane[static_cast<std::size_t>(i0 + y) * nlon + (j0 + x)];
                s.tensor.data[(static_cast<std::size_t>(y) * window + x) * kNumChannels + c] =
                    static_cast<float>(zscore_apply(stats, c, raw));
            }
    }
    for (float v : s.tensor.data)
        if (!std::isfinite(v)) throw Error("fuse: non-finite value in fused tensor");
    return s;
}

FusedSample SampleStore::fuse(double lat, double lon, Date date, int window,
                              const NormalizationStats& stats) const {
    FusedSample s = fuse_at(lat_index(lat), lon_index(lon), date, window, stats);
    return s;
}

std::array<std::pair<double, double>, kNumChannels> SampleStore::window_stats(int i, int j,
                                                                              Date date,
                                                                              int window) const {
    const DatePlanes& planes = at_date(date);
    const int half = window / 2;
    const int i0 = i - half, j0 = j - half;
    const int nlat = static_cast<int>(lat_axis_.size());
    const int nlon = static_cast<int>(lon_axis_.size());
    if (i0 < 0 || j0 < 0 || i0 + window > nlat || j0 + window > nlon)
        throw Error("window_stats: frame violation at cell (" + std::to_string(i) + "," +
                    std::to_string(j) + ")");
    std::array<std::pair<double, double>, kNumChannels> out;
    const double count = static_cast<double>(window) * window;
    for (int c = 0; c < kNumChannels; ++c) {
        const std::vector<double>& plane = planes.planes[c];
        double sum = 0.0;
        for (int y = 0; y < window; ++y)
            for (int x = 0; x < window; ++x)
                sum += plane[static_cast<std::size_t>(i0 + y) * nlon + (j0 + x)];
        const double mean = sum / count;
        double var = 0.0;
        for (int y = 0; y < window; ++y)
            for (int x = 0; x < window; ++x) {
                const double d = plane[static_cast<std::size_t>(i0 + y) * nlon + (j0 + x)] - mean;
                var += d * d;
            }
        out[c] = {mean, std::sqrt(var / count)};
    }
    return out;
}

NormalizationStats fit_channel_stats(const SampleStore& store) {
    NormalizationStats stats;
    for (int c = 0; c < kNumChannels; ++c) {
        std::vector<double> values;
        for (Date d : store.dates()) {
            const std::vector<double>& plane = store.plane(d, static_cast<Channel>(c));
            values.insert(values.end(), plane.begin(), plane.end());
        }
        zscore_fit(stats, c, values);
    }
    return stats;
}

}  // namespace wam::geo
