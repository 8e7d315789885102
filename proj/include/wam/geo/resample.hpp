#pragma once

#include <vector>

#include "wam/geo/grid.hpp"

namespace wam::geo {

// Bilinear resampling of src onto the target axes. Targets must lie within
// the source bounding box; there is no extrapolation.
GeoGrid resample_bilinear(const GeoGrid& src, const std::vector<double>& target_lat_axis,
                          const std::vector<double>& target_lon_axis);

}  // namespace wam::geo
