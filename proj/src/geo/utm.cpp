#include "wam/geo/utm.hpp"

#include <cmath>
#include <string>

#include "wam/core/error.hpp"

namespace wam::geo {

namespace {

// WGS-84
constexpr double kSemiMajor = 6378137.0;
constexpr double kFlattening = 1.0 / 298.257223563;
constexpr double kScale = 0.9996;
constexpr double kFalseEasting = 500000.0;
constexpr double kFalseNorthingSouth = 10000000.0;
constexpr double kDegToRad = 0.017453292519943295;

constexpr double kThirdFlattening = kFlattening / (2.0 - kFlattening);  // n

struct Series {
    double rectifying_radius;  // k0 * A
    double alpha[4];           // forward
    double beta[4];            // inverse
    double delta[4];           // conformal -> geographic latitude
};

// Krüger series to n^4; within a UTM zone the truncation error is far below
// a millimetre.
Series make_series() {
    const double n = kThirdFlattening;
    const double n2 = n * n, n3 = n2 * n, n4 = n3 * n;
    Series s;
    s.rectifying_radius = kScale * kSemiMajor / (1.0 + n) * (1.0 + n2 / 4.0 + n4 / 64.0);
    s.alpha[0] = n / 2.0 - 2.0 * n2 / 3.0 + 5.0 * n3 / 16.0 + 41.0 * n4 / 180.0;
    s.alpha[1] = 13.0 * n2 / 48.0 - 3.0 * n3 / 5.0 + 557.0 * n4 / 1440.0;
    s.alpha[2] = 61.0 * n3 / 240.0 - 103.0 * n4 / 140.0;
    s.alpha[3] = 49561.0 * n4 / 161280.0;
    s.beta[0] = n / 2.0 - 2.0 * n2 / 3.0 + 37.0 * n3 / 96.0 - n4 / 360.0;
    s.beta[1] = n2 / 48.0 + n3 / 15.0 - 437.0 * n4 / 1440.0;
    s.beta[2] = 17.0 * n3 / 480.0 - 37.0 * n4 / 840.0;
    s.beta[3] = 4397.0 * n4 / 161280.0;
    s.delta[0] = 2.0 * n - 2.0 * n2 / 3.0 - 2.0 * n3 + 116.0 * n4 / 45.0;
    s.delta[1] = 7.0 * n2 / 3.0 - 8.0 * n3 / 5.0 - 227.0 * n4 / 45.0;
    s.delta[2] = 56.0 * n3 / 15.0 - 136.0 * n4 / 35.0;
    s.delta[3] = 4279.0 * n4 / 630.0;
    return s;
}

const Series& series() {
    static const Series s = make_series();
    return s;
}

double central_meridian_deg(int zone) { return static_cast<double>(zone) * 6.0 - 183.0; }

void check_zone(int zone) {
    if (zone < 1 || zone > 60)
        throw Error("utm: zone must be in 1..60, got " + std::to_string(zone));
}

}  // namespace

LatLon utm_to_decimal(double easting, double northing, int zone, Hemisphere hemisphere) {
    check_zone(zone);
    if (easting < 100000.0 || easting > 900000.0)
        throw Error("utm: easting " + std::to_string(easting) + " outside 100000..900000 m");
    if (northing < 0.0 || northing > 10000000.0)
        throw Error("utm: northing " + std::to_string(northing) + " outside 0..10000000 m");

    const Series& s = series();
    const double fn = hemisphere == Hemisphere::South ? kFalseNorthingSouth : 0.0;
    const double xi = (northing - fn) / s.rectifying_radius;
    const double eta = (easting - kFalseEasting) / s.rectifying_radius;

    double xi_p = xi, eta_p = eta;
    for (int j = 0; j < 4; ++j) {
        const double w = 2.0 * (j + 1);
        xi_p -= s.beta[j] * std::sin(w * xi) * std::cosh(w * eta);
        eta_p -= s.beta[j] * std::cos(w * xi) * std::sinh(w * eta);
    }

    const double chi = std::asin(std::sin(xi_p) / std::cosh(eta_p));
    double phi = chi;
    for (int j = 0; j < 4; ++j) phi += s.delta[j] * std::sin(2.0 * (j + 1) * chi);

    const double dlam = std::atan2(std::sinh(eta_p), std::cos(xi_p));

    LatLon out;
    out.lat = phi / kDegToRad;
    out.lon = central_meridian_deg(zone) + dlam / kDegToRad;
    return out;
}

void decimal_to_utm(double lat, double lon, int zone, Hemisphere hemisphere, double& easting,
                    double& northing) {
    check_zone(zone);
    if (lat < -90.0 || lat > 90.0)
        throw Error("utm: latitude " + std::to_string(lat) + " outside [-90,90]");

    const Series& s = series();
    const double e = std::sqrt(kFlattening * (2.0 - kFlattening));
    const double phi = lat * kDegToRad;
    const double dlam = (lon - central_meridian_deg(zone)) * kDegToRad;

    const double sphi = std::sin(phi);
    const double t = std::sinh(std::atanh(sphi) - e * std::atanh(e * sphi));
    const double xi_p = std::atan2(t, std::cos(dlam));
    const double eta_p = std::asinh(std::sin(dlam) / std::hypot(t, std::cos(dlam)));

    double xi = xi_p, eta = eta_p;
    for (int j = 0; j < 4; ++j) {
        const double w = 2.0 * (j + 1);
        xi += s.alpha[j] * std::sin(w * xi_p) * std::cosh(w * eta_p);
        eta += s.alpha[j] * std::cos(w * xi_p) * std::sinh(w * eta_p);
    }

    easting = kFalseEasting + s.rectifying_radius * eta;
    northing =
        s.rectifying_radius * xi + (hemisphere == Hemisphere::South ? kFalseNorthingSouth : 0.0);
}

}  // namespace wam::geo
