#pragma once

namespace wam::geo {

enum class Hemisphere { North, South };

struct LatLon {
    double lat = 0.0;  // decimal degrees
    double lon = 0.0;
};

// Inverse UTM projection on the WGS-84 ellipsoid (Gauss-Krüger series).
// easting/northing in metres; zone in 1..60.
LatLon utm_to_decimal(double easting, double northing, int zone, Hemisphere hemisphere);

// Forward projection, the round-trip counterpart of utm_to_decimal.
void decimal_to_utm(double lat, double lon, int zone, Hemisphere hemisphere, double& easting,
                    double& northing);

}  // namespace wam::geo
