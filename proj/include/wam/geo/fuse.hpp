#pragma once

#include <array>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "wam/core/tensor.hpp"
#include "wam/geo/grid.hpp"
#include "wam/geo/normalize.hpp"

namespace wam::geo {

// Multi-channel normalized window centered on a coordinate, plus the raw
// management labels when the sample comes from a wildfire record.
struct FusedSample {
    Tensorf tensor;  // (window, window, kNumChannels), z-scored
    double lat = 0.0;
    double lon = 0.0;
    Date date;
    bool has_label = false;
    std::array<double, kNumLabels> label{};  // natural units
};

// (2G - B - R) / (2G + B + R); cells with a zero denominator become NaN.
GeoGrid greenness_index(const GeoGrid& red, const GeoGrid& green, const GeoGrid& blue);

// The 12:00 reading when present, else 18:00.
const GeoGrid& select_daily_reading(const std::map<int, const GeoGrid*>& readings,
                                    VariableId variable, Date date);

// Difference between the two most recent grids at or before sample_date.
// series must be date-sorted.
std::vector<double> trend_diff(const std::vector<const GeoGrid*>& series, Date sample_date);

// Wildfire record: where/when plus the six management labels.
struct WildfireRecord {
    double lat = 0.0;
    double lon = 0.0;
    Date date;
    std::array<double, kNumLabels> label{};
};

void save_records(const std::vector<WildfireRecord>& records, const std::string& path);
std::vector<WildfireRecord> load_records(const std::string& path);

// Harmonized repository: the nine channel planes per date, on the shared
// greenness axes. Read-only after harmonize(); fuse() is pure.
class SampleStore {
public:
    // Builds planes for each distinct date in sample_dates. Dates whose
    // ingredients are missing raise the underlying missing-data error.
    static SampleStore harmonize(const GridStore& store, std::vector<Date> sample_dates);

    const std::vector<double>& lat_axis() const { return lat_axis_; }
    const std::vector<double>& lon_axis() const { return lon_axis_; }
    const std::vector<Date>& dates() const { return dates_; }
    bool has_date(Date d) const;

    // raw (pre-normalization) plane of one channel for one date
    const std::vector<double>& plane(Date date, Channel channel) const;

    // nearest cell containing the coordinate
    int lat_index(double lat) const;
    int lon_index(double lon) const;

    // Window anchored so its center cell (window/2, window/2) is cell (i, j).
    // Throws a frame-violation error when the window leaves coverage.
    FusedSample fuse_at(int i, int j, Date date, int window,
                        const NormalizationStats& stats) const;
    FusedSample fuse(double lat, double lon, Date date, int window,
                     const NormalizationStats& stats) const;

    // raw per-channel mean/std over the same window; feeds the label oracle
    std::array<std::pair<double, double>, kNumChannels> window_stats(int i, int j, Date date,
                                                                     int window) const;

private:
    struct DatePlanes {
        Date date;
        std::array<std::vector<double>, kNumChannels> planes;
    };
    const DatePlanes& at_date(Date d) const;

    std::vector<double> lat_axis_;
    std::vector<double> lon_axis_;
    std::vector<Date> dates_;
    std::vector<DatePlanes> by_date_;
};

// Global per-channel z-score fit over every harmonized plane of the store.
NormalizationStats fit_channel_stats(const SampleStore& store);

}  // namespace wam::geo
