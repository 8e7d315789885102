#include "wam/mapgen/mapgen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include "wam/core/error.hpp"

namespace fs = std::filesystem;

namespace wam::mapgen {

bool AssessmentRaster::defined(int i, int j) const { return !std::isnan(at(i, j)); }

std::vector<std::pair<int, int>> enumerate_windows(int nlat, int nlon, int window) {
    if (nlat < window || nlon < window)
        throw Error("enumerate_windows: region " + std::to_string(nlat) + "x" +
                    std::to_string(nlon) + " smaller than the window " + std::to_string(window));
    const int half = window / 2;
    std::vector<std::pair<int, int>> centers;
    centers.reserve(static_cast<std::size_t>(nlat - window + 1) * (nlon - window + 1));
    for (int i = half; i + window - half <= nlat; ++i)
        for (int j = half; j + window - half <= nlon; ++j) centers.emplace_back(i, j);
    return centers;
}

std::int64_t window_count(int nlat, int nlon, int window) {
    if (nlat < window || nlon < window) return 0;
    return static_cast<std::int64_t>(nlat - window + 1) * (nlon - window + 1);
}

std::array<AssessmentRaster, geo::kNumLabels> predict_raster(
    models::WamModel& model, const geo::SampleStore& store,
    const geo::NormalizationStats& stats, geo::Date date, int window, int stride) {
    if (stride < 1) throw Error("predict_raster: stride must be >= 1");
    if (!stats.has_labels)
        throw Error("predict_raster: label statistics missing (not a trained checkpoint?)");
    const int nlat = static_cast<int>(store.lat_axis().size());
    const int nlon = static_cast<int>(store.lon_axis().size());
    if (nlat < window || nlon < window)
        throw Error("predict_raster: region smaller than the sample window");
    const int half = window / 2;
    const int out_h = nlat - window + 1;
    const int out_w = nlon - window + 1;

    std::array<AssessmentRaster, geo::kNumLabels> rasters;
    for (int l = 0; l < geo::kNumLabels; ++l) {
        AssessmentRaster& r = rasters[l];
        r.label = l;
        r.nlat = out_h;
        r.nlon = out_w;
        r.values.assign(static_cast<std::size_t>(out_h) * out_w,
                        std::numeric_limits<double>::quiet_NaN());
        r.lat_axis.assign(store.lat_axis().begin() + half,
                          store.lat_axis().begin() + half + out_h);
        r.lon_axis.assign(store.lon_axis().begin() + half,
                          store.lon_axis().begin() + half + out_w);
        r.date = date;
        r.frame = half;
    }

    // windows are independent; rows are distributed across threads and each
    // cell writes only its own slot
#pragma omp parallel for schedule(static)
    for (int oi = 0; oi < out_h; oi += stride) {
        for (int oj = 0; oj < out_w; oj += stride) {
            const geo::FusedSample sample =
                store.fuse_at(oi + half, oj + half, date, window, stats);
            const Tensorf pred = model.predict_sample(sample.tensor);
            for (int l = 0; l < geo::kNumLabels; ++l)
                rasters[l].values[static_cast<std::size_t>(oi) * out_w + oj] =
                    geo::minmax_invert(stats, l, pred[l]);
        }
    }
    return rasters;
}

namespace {

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

std::string emit(const AssessmentRaster& raster, RasterFormat format,
                 const std::string& out_dir) {
    fs::create_directories(out_dir);
    const std::string label = geo::label_name(static_cast<geo::Label>(raster.label));
    const std::string stem = label + "_" + raster.date.str();

    std::size_t defined = 0;
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (double v : raster.values)
        if (!std::isnan(v)) {
            ++defined;
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
    if (defined == 0) throw Error("emit: raster has no defined cells");

    if (format == RasterFormat::Csv) {
        const std::string path = (fs::path(out_dir) / (stem + ".csv")).string();
        std::ofstream os(path, std::ios::trunc);
        if (!os) throw Error("emit: cannot open for writing: " + path);
        for (int i = 0; i < raster.nlat; ++i) {
            for (int j = 0; j < raster.nlon; ++j) {
                if (j) os << ",";
                const double v = raster.at(i, j);
                os << (std::isnan(v) ? "nan" : fmt(v));
            }
            os << "\n";
        }
        if (!os) throw Error("emit: write failed: " + path);
        return path;
    }

    // 8-bit graymap with linear scaling over defined cells. A fully defined
    // raster uses pixels 0..255; when undefined cells exist, pixel 0 is
    // reserved as their sentinel and values map to 1..255.
    const bool has_undefined = defined != raster.values.size();
    const int pix_lo = has_undefined ? 1 : 0;
    const double span = hi > lo ? hi - lo : 1.0;
    const std::string path = (fs::path(out_dir) / (stem + ".pgm")).string();
    {
        std::ofstream os(path, std::ios::binary | std::ios::trunc);
        if (!os) throw Error("emit: cannot open for writing: " + path);
        os << "P5\n" << raster.nlon << " " << raster.nlat << "\n255\n";
        for (double v : raster.values) {
            unsigned char pix = 0;
            if (!std::isnan(v)) {
                const double t = (v - lo) / span;
                pix = static_cast<unsigned char>(
                    pix_lo + std::lround(t * (255.0 - pix_lo)));
            }
            os.write(reinterpret_cast<char*>(&pix), 1);
        }
        if (!os) throw Error("emit: write failed: " + path);
    }
    {
        const std::string meta = (fs::path(out_dir) / (stem + ".pgm.meta")).string();
        std::ofstream os(meta, std::ios::trunc);
        os << "label: " << label << "\n";
        os << "date: " << raster.date.str() << "\n";
        os << "frame_cells: " << raster.frame << "\n";
        os << "scale_min: " << fmt(lo) << "\n";
        os << "scale_max: " << fmt(hi) << "\n";
        os << "pixel_range: " << pix_lo << "..255\n";
        os << "undefined_pixel: " << (has_undefined ? "0" : "none") << "\n";
        os << "lat_range: " << fmt(raster.lat_axis.front()) << ".."
           << fmt(raster.lat_axis.back()) << "\n";
        os << "lon_range: " << fmt(raster.lon_axis.front()) << ".."
           << fmt(raster.lon_axis.back()) << "\n";
    }
    return path;
}

std::vector<double> load_raster_csv(const std::string& path, int& nlat, int& nlon) {
    std::ifstream is(path);
    if (!is) throw Error("raster: cannot open: " + path);
    std::vector<double> values;
    std::string line;
    nlat = 0;
    nlon = 0;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::string field;
        int cols = 0;
        while (std::getline(ss, field, ',')) {
            values.push_back(field == "nan" ? std::numeric_limits<double>::quiet_NaN()
                                            : std::stod(field));
            ++cols;
        }
        if (nlat == 0) nlon = cols;
        else if (cols != nlon)
            throw Error("raster: ragged csv row in " + path);
        ++nlat;
    }
    return values;
}

}  // namespace wam::mapgen
