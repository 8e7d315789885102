#include "wam/synth/synth.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "wam/core/error.hpp"
#include "wam/geo/grid.hpp"
#include "wam/geo/utm.hpp"

namespace fs = std::filesystem;

namespace wam::synth {

using geo::Channel;
using geo::Date;
using geo::GeoGrid;
using geo::VariableId;

std::vector<double> random_field(int nlat, int nlon, double correlation_cells, Rng& rng) {
    if (correlation_cells <= 0.0)
        throw Error("random_field: correlation length must be positive");
    std::vector<double> noise(static_cast<std::size_t>(nlat) * nlon);
    for (double& v : noise) v = rng.normal();

    const double sigma = correlation_cells / 2.0;
    const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
    std::vector<double> kernel(2 * radius + 1);
    double ksum = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        kernel[i + radius] = std::exp(-0.5 * (i / sigma) * (i / sigma));
        ksum += kernel[i + radius];
    }
    for (double& k : kernel) k /= ksum;

    auto reflect = [](int i, int n) {
        while (i < 0 || i >= n) {
            if (i < 0) i = -i - 1;
            if (i >= n) i = 2 * n - i - 1;
        }
        return i;
    };

    // separable convolution, rows then columns
    std::vector<double> tmp(noise.size()), out(noise.size());
    for (int i = 0; i < nlat; ++i)
        for (int j = 0; j < nlon; ++j) {
            double acc = 0.0;
            for (int k = -radius; k <= radius; ++k)
                acc += kernel[k + radius] *
                       noise[static_cast<std::size_t>(i) * nlon + reflect(j + k, nlon)];
            tmp[static_cast<std::size_t>(i) * nlon + j] = acc;
        }
    for (int i = 0; i < nlat; ++i)
        for (int j = 0; j < nlon; ++j) {
            double acc = 0.0;
            for (int k = -radius; k <= radius; ++k)
                acc += kernel[k + radius] *
                       tmp[static_cast<std::size_t>(reflect(i + k, nlat)) * nlon + j];
            out[static_cast<std::size_t>(i) * nlon + j] = acc;
        }
    return out;
}

double oracle_severity(
    const std::array<std::pair<double, double>, geo::kNumChannels>& window_stats) {
    const double u = window_stats[static_cast<int>(Channel::U10)].first;
    const double v = window_stats[static_cast<int>(Channel::V10)].first;
    const double gi = window_stats[static_cast<int>(Channel::Greenness)].first;
    const double heat = window_stats[static_cast<int>(Channel::ThermalDownTrend)].first;
    const double w = std::hypot(u, v);
    const double dry = (1.0 - gi) / 2.0;
    const double z = 0.6 * w + 2.0 * dry + 0.3 * std::tanh(heat / 1e5) - 1.6;
    return 1.0 / (1.0 + std::exp(-z));
}

std::array<double, geo::kNumLabels> oracle_labels(
    const std::array<std::pair<double, double>, geo::kNumChannels>& window_stats,
    double noise_sigma, Rng& rng) {
    const double q = oracle_severity(window_stats);
    std::array<double, geo::kNumLabels> labels = {
        800.0 + 24000.0 * q * q,
        45.0 + 1400.0 * q,
        90.0 + 2600.0 * q + 400.0 * q * q,
        4.0 + 110.0 * q,
        1.0 + 13.0 * q,
        0.4 + 8.5 * q,
    };
    if (noise_sigma > 0.0)
        for (double& l : labels) l *= std::exp(noise_sigma * rng.normal());
    return labels;
}

namespace {

struct FieldSpec {
    VariableId variable;
    const char* units;
    double base;
    double amplitude;  // scale of the smooth noise component
    double drift;      // per-day additive drift times a second smooth field
};

// atmospheric trend-group variables, in plausible natural units
constexpr FieldSpec kTrendFields[] = {
    {VariableId::Dewpoint2m, "K", 285.0, 40.0, 0.9},
    {VariableId::NetSolar, "J m**-2", 1.6e7, 3.5e7, 6.0e5},
    {VariableId::NetThermal, "J m**-2", -3.2e6, 1.4e7, 3.0e5},
    {VariableId::SolarDown, "J m**-2", 2.2e7, 4.5e7, 7.0e5},
    {VariableId::ThermalDown, "J m**-2", 3.1e7, 5.5e7, 9.0e5},
    {VariableId::Ozone, "kg m**-2", 0.0062, 0.012, 2.4e-5},
};

std::string grid_filename(VariableId var, Date date, int hour) {
    std::string name = std::string(geo::variable_name(var)) + "_" + date.str();
    if (hour >= 0) name += "_h" + std::to_string(hour);
    return name + ".grid";
}

}  // namespace

SynthOutput generate_dataset(const SynthSpec& spec, int n_records, int window_margin,
                             std::uint64_t seed, const std::string& out_dir) {
    if (n_records < 0) throw Error("synth: negative record count");
    fs::create_directories(out_dir);
    const fs::path dir(out_dir);
    Rng root(seed);

    // greenness measurement dates: the 1st, 11th and 21st of each month
    std::vector<Date> gi_dates;
    for (int d = 0; d < spec.days; ++d) {
        Date date = spec.start.plus_days(d);
        if (date.day == 1 || date.day == 11 || date.day == 21) gi_dates.push_back(date);
    }
    if (gi_dates.size() < 2) throw Error("synth: study period holds fewer than 2 greenness dates");

    // fine UTM axes (reflectance resolution) and their decimal image
    std::vector<double> northing, easting;
    for (int i = 0; i < spec.fine_n; ++i) {
        northing.push_back(spec.utm_northing0 + spec.utm_spacing * i);
        easting.push_back(spec.utm_easting0 + spec.utm_spacing * i);
    }
    const double mid_e = easting[easting.size() / 2];
    const double mid_n = northing[northing.size() / 2];
    std::vector<double> fine_lat, fine_lon;
    for (double n : northing)
        fine_lat.push_back(geo::utm_to_decimal(mid_e, n, spec.utm_zone, geo::Hemisphere::North).lat);
    for (double e : easting)
        fine_lon.push_back(geo::utm_to_decimal(e, mid_n, spec.utm_zone, geo::Hemisphere::North).lon);

    // coarse decimal axes covering the fine bounding box with margin
    std::vector<double> coarse_lat, coarse_lon;
    {
        const double lat_lo = fine_lat.front(), lat_hi = fine_lat.back();
        const double lon_lo = fine_lon.front(), lon_hi = fine_lon.back();
        const double mlat = 0.05 * (lat_hi - lat_lo), mlon = 0.05 * (lon_hi - lon_lo);
        for (int i = 0; i < spec.coarse_n; ++i) {
            coarse_lat.push_back(lat_lo - mlat +
                                 (lat_hi - lat_lo + 2 * mlat) * i / (spec.coarse_n - 1));
            coarse_lon.push_back(lon_lo - mlon +
                                 (lon_hi - lon_lo + 2 * mlon) * i / (spec.coarse_n - 1));
        }
    }

    std::vector<std::string> manifest;

    // reflectance triplets on the fine UTM grid
    {
        const std::size_t cells = static_cast<std::size_t>(spec.fine_n) * spec.fine_n;
        for (std::size_t k = 0; k < gi_dates.size(); ++k) {
            const Date d = gi_dates[k];
            Rng frng = root.fork(1000 + k);
            std::vector<double> f_red = random_field(spec.fine_n, spec.fine_n, spec.smoothness, frng);
            std::vector<double> f_grn = random_field(spec.fine_n, spec.fine_n, spec.smoothness, frng);
            std::vector<double> f_blu = random_field(spec.fine_n, spec.fine_n, spec.smoothness, frng);
            // slow vegetation green-up over the period
            const double season = 0.06 * static_cast<double>(k);
            std::vector<double> red(cells), green(cells), blue(cells);
            for (std::size_t i = 0; i < cells; ++i) {
                red[i] = std::clamp(0.18 + 0.55 * f_red[i], 0.01, 1.0);
                green[i] = std::clamp(0.34 + season + 0.85 * f_grn[i], 0.01, 1.0);
                blue[i] = std::clamp(0.14 + 0.4 * f_blu[i], 0.01, 1.0);
            }
            struct {
                VariableId var;
                std::vector<double>* values;
            } bands[] = {{VariableId::ReflRed, &red},
                         {VariableId::ReflGreen, &green},
                         {VariableId::ReflBlue, &blue}};
            for (auto& band : bands) {
                const std::string name = grid_filename(band.var, d, -1);
                geo::save_grid_utm(band.var, d, "1", northing, easting, *band.values,
                                   spec.utm_zone, geo::Hemisphere::North, (dir / name).string());
                manifest.push_back(name);
            }
        }
    }

    // atmospheric trend-group variables at the greenness dates
    for (std::size_t t = 0; t < std::size(kTrendFields); ++t) {
        const FieldSpec& f = kTrendFields[t];
        for (std::size_t k = 0; k < gi_dates.size(); ++k) {
            const Date d = gi_dates[k];
            Rng frng = root.fork(2000 + t * 64 + k);
            std::vector<double> noise =
                random_field(spec.coarse_n, spec.coarse_n, spec.smoothness / 3.0, frng);
            Rng drift_rng = root.fork(3000 + t);  // one drift pattern per variable
            std::vector<double> drift =
                random_field(spec.coarse_n, spec.coarse_n, spec.smoothness / 2.0, drift_rng);
            const double age = static_cast<double>(d.serial() - spec.start.serial());
            GeoGrid g;
            g.variable = f.variable;
            g.date = d;
            g.units = f.units;
            g.lat_axis = coarse_lat;
            g.lon_axis = coarse_lon;
            g.values.resize(noise.size());
            for (std::size_t i = 0; i < noise.size(); ++i)
                g.values[i] = f.base + f.amplitude * noise[i] + f.drift * age * (1.0 + drift[i]);
            const std::string name = grid_filename(f.variable, d, -1);
            geo::save_grid(g, (dir / name).string());
            manifest.push_back(name);
        }
    }

    // daily wind components; every seventh day only reports at 18:00
    for (int dd = 0; dd < spec.days; ++dd) {
        const Date d = spec.start.plus_days(dd);
        const int hour = (dd % 7 == 3) ? 18 : 12;
        struct {
            VariableId var;
            double base;
            std::uint64_t salt;
        } winds[] = {{VariableId::U10, 2.2, 50000}, {VariableId::V10, 1.1, 60000}};
        for (auto& wv : winds) {
            Rng frng = root.fork(wv.salt + static_cast<std::uint64_t>(dd));
            std::vector<double> noise =
                random_field(spec.coarse_n, spec.coarse_n, spec.smoothness / 3.0, frng);
            GeoGrid g;
            g.variable = wv.var;
            g.date = d;
            g.hour = hour;
            g.units = "m s**-1";
            g.lat_axis = coarse_lat;
            g.lon_axis = coarse_lon;
            g.values.resize(noise.size());
            for (std::size_t i = 0; i < noise.size(); ++i)
                g.values[i] = wv.base + 9.0 * noise[i];
            const std::string name = grid_filename(wv.var, d, hour);
            geo::save_grid(g, (dir / name).string());
            manifest.push_back(name);
        }
    }

    SynthOutput out;
    out.manifest_path = (dir / "manifest.txt").string();
    geo::save_manifest(manifest, out.manifest_path);

    // valid sample dates: at least two greenness measurements at or before
    for (int dd = 0; dd < spec.days; ++dd) {
        const Date d = spec.start.plus_days(dd);
        if (d >= gi_dates[1]) out.sample_dates.push_back(d);
    }

    // wildfire records with oracle labels from the harmonized raw windows
    out.records_path = (dir / "records.csv").string();
    if (n_records > 0) {
        geo::GridStore store = geo::GridStore::load(out.manifest_path);
        geo::SampleStore samples = geo::SampleStore::harmonize(store, out.sample_dates);
        const int n = static_cast<int>(samples.lat_axis().size());
        const int m = static_cast<int>(samples.lon_axis().size());
        if (n - 2 * window_margin <= 0 || m - 2 * window_margin <= 0)
            throw Error("synth: window margin leaves no valid record centers");
        Rng rec_rng = root.fork(77777);
        std::vector<geo::WildfireRecord> records;
        for (int r = 0; r < n_records; ++r) {
            geo::WildfireRecord rec;
            const int i = window_margin + static_cast<int>(rec_rng.below(
                                              static_cast<std::uint64_t>(n - 2 * window_margin)));
            const int j = window_margin + static_cast<int>(rec_rng.below(
                                              static_cast<std::uint64_t>(m - 2 * window_margin)));
            rec.lat = samples.lat_axis()[i];
            rec.lon = samples.lon_axis()[j];
            rec.date = out.sample_dates[rec_rng.below(out.sample_dates.size())];
            auto stats = samples.window_stats(i, j, rec.date, 2 * window_margin);
            Rng noise_rng = rec_rng.fork(static_cast<std::uint64_t>(r));
            rec.label = oracle_labels(stats, spec.label_noise, noise_rng);
            records.push_back(rec);
        }
        geo::save_records(records, out.records_path);
    }

    // provenance note: everything here is synthetic stand-in data
    {
        std::ofstream meta((dir / "dataset_meta.txt").string(), std::ios::trunc);
        meta << "generator: wam synth-data\n";
        meta << "synthetic: true (no real wildfire or atmospheric records)\n";
        meta << "seed: " << seed << "\n";
        meta << "fine_n: " << spec.fine_n << "\n";
        meta << "coarse_n: " << spec.coarse_n << "\n";
        meta << "utm_zone: " << spec.utm_zone << "\n";
        meta << "start: " << spec.start.str() << "\n";
        meta << "days: " << spec.days << "\n";
        meta << "smoothness_cells: " << spec.smoothness << "\n";
        meta << "label_noise: " << spec.label_noise << "\n";
        meta << "records: " << n_records << "\n";
    }
    return out;
}

}  // namespace wam::synth
