#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "wam/core/rng.hpp"
#include "wam/geo/date.hpp"
#include "wam/geo/fuse.hpp"
#include "wam/geo/normalize.hpp"

namespace wam::synth {

// Smooth pseudo-random field: white noise convolved with a separable
// Gaussian kernel of sigma = correlation_cells / 2, so the empirical
// autocorrelation at lag = correlation_cells is about e^-1. Unit-noise
// variance shrinks as the correlation length grows.
std::vector<double> random_field(int nlat, int nlon, double correlation_cells, Rng& rng);

// Ground-truth label function over raw window statistics (per-channel mean
// and standard deviation, natural units). Severity is
//   q = sigmoid(0.6*w + 2.0*dry + 0.3*tanh(heat/1e5) - 1.6)
// with w the window-mean wind speed, dry = (1 - mean greenness)/2 and heat
// the mean downward-thermal trend. The six labels are fixed increasing
// functions of q, optionally perturbed by lognormal noise exp(sigma*eps):
//   burnt_area_m   =  800 + 24000 q^2
//   control_min    =   45 +  1400 q
//   extinction_min =   90 +  2600 q + 400 q^2
//   human_units    =    4 +   110 q
//   heavy_units    =    1 +    13 q
//   aerial_units   =  0.4 +   8.5 q
std::array<double, geo::kNumLabels> oracle_labels(
    const std::array<std::pair<double, double>, geo::kNumChannels>& window_stats,
    double noise_sigma, Rng& rng);

double oracle_severity(
    const std::array<std::pair<double, double>, geo::kNumChannels>& window_stats);

// Synthetic region and study period.
struct SynthSpec {
    int fine_n = 72;    // greenness-resolution cells per side (UTM grid)
    int coarse_n = 22;  // atmospheric cells per side (decimal grid)
    double utm_easting0 = 280000.0;
    double utm_northing0 = 4540000.0;
    double utm_spacing = 2000.0;
    int utm_zone = 30;
    geo::Date start = geo::Date(2010, 6, 1);
    int days = 92;
    double smoothness = 6.0;    // correlation length in fine cells
    double label_noise = 0.08;  // lognormal sigma; 0 = deterministic oracle
};

struct SynthOutput {
    std::string manifest_path;
    std::string records_path;
    std::vector<geo::Date> sample_dates;  // dates with complete ingredients
};

// Emits grid files + manifest + wildfire records under out_dir. Record
// centers keep window_margin cells of clearance so full windows always fit.
SynthOutput generate_dataset(const SynthSpec& spec, int n_records, int window_margin,
                             std::uint64_t seed, const std::string& out_dir);

}  // namespace wam::synth
