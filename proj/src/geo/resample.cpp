#include "wam/geo/resample.hpp"

#include <algorithm>
#include <cmath>

#include "wam/core/error.hpp"

namespace wam::geo {

namespace {

// index i with axis[i] <= x <= axis[i+1], plus the interpolation weight
std::pair<int, double> bracket(const std::vector<double>& axis, double x, const char* what) {
    if (x < axis.front() || x > axis.back())
        throw Error("resample_bilinear: target " + std::string(what) + " " + std::to_string(x) +
                    " outside source coverage [" + std::to_string(axis.front()) + "," +
                    std::to_string(axis.back()) + "]");
    auto it = std::upper_bound(axis.begin(), axis.end(), x);
    int hi = static_cast<int>(it - axis.begin());
    if (hi == 0) hi = 1;
    if (hi == static_cast<int>(axis.size())) hi = static_cast<int>(axis.size()) - 1;
    const int lo = hi - 1;
    const double w = (x - axis[lo]) / (axis[hi] - axis[lo]);
    return {lo, w};
}

}  // namespace

GeoGrid resample_bilinear(const GeoGrid& src, const std::vector<double>& target_lat_axis,
                          const std::vector<double>& target_lon_axis) {
    GeoGrid out;
    out.variable = src.variable;
    out.date = src.date;
    out.hour = src.hour;
    out.units = src.units;
    out.lat_axis = target_lat_axis;
    out.lon_axis = target_lon_axis;
    out.values.resize(target_lat_axis.size() * target_lon_axis.size());

    std::vector<std::pair<int, double>> lon_pos;
    lon_pos.reserve(target_lon_axis.size());
    for (double x : target_lon_axis) lon_pos.push_back(bracket(src.lon_axis, x, "longitude"));

    const int nlon = src.nlon();
    std::size_t o = 0;
    for (double lat : target_lat_axis) {
        const auto [i, wy] = bracket(src.lat_axis, lat, "latitude");
        for (const auto& [j, wx] : lon_pos) {
            const double v00 = src.values[static_cast<std::size_t>(i) * nlon + j];
            const double v01 = src.values[static_cast<std::size_t>(i) * nlon + j + 1];
            const double v10 = src.values[static_cast<std::size_t>(i + 1) * nlon + j];
            const double v11 = src.values[static_cast<std::size_t>(i + 1) * nlon + j + 1];
            out.values[o++] = (1.0 - wy) * ((1.0 - wx) * v00 + wx * v01) +
                              wy * ((1.0 - wx) * v10 + wx * v11);
        }
    }
    return out;
}

}  // namespace wam::geo
