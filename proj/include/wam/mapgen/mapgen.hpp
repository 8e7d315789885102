#pragma once

#include <array>
#include <string>
#include <vector>

#include "wam/geo/fuse.hpp"
#include "wam/models/models.hpp"

namespace wam::mapgen {

// Denormalized predictions of one label over a region for one date. The
// raster covers exactly the cells whose full window fits; its border of
// impossible windows (the frame) is outside the raster, `frame` cells wide.
// Cells skipped by a stride are NaN and flagged undefined.
struct AssessmentRaster {
    int label = 0;  // geo::Label index
    int nlat = 0;
    int nlon = 0;
    std::vector<double> values;    // row-major, NaN = undefined
    std::vector<double> lat_axis;  // prediction center latitudes
    std::vector<double> lon_axis;
    geo::Date date;
    int frame = 0;  // excluded border width in region cells

    double at(int i, int j) const { return values[static_cast<std::size_t>(i) * nlon + j]; }
    bool defined(int i, int j) const;
};

// Centers (i, j) whose full window fits the region; (H - window + 1) x
// (W - window + 1) cells for an H x W region.
std::vector<std::pair<int, int>> enumerate_windows(int nlat, int nlon, int window);
std::int64_t window_count(int nlat, int nlon, int window);

// One raster per label. Every defined cell equals the standalone
// single-sample prediction for that center, bit-exactly. stride > 1
// evaluates every stride-th row/column and leaves the rest undefined.
std::array<AssessmentRaster, geo::kNumLabels> predict_raster(
    models::WamModel& model, const geo::SampleStore& store,
    const geo::NormalizationStats& stats, geo::Date date, int window, int stride = 1);

enum class RasterFormat { Pgm, Csv };

// Writes raster (+ sidecar metadata for the graymap) under out_dir; returns
// the data file path. Graymaps scale defined values linearly onto the pixel
// range recorded in the sidecar; undefined cells get a sentinel pixel.
std::string emit(const AssessmentRaster& raster, RasterFormat format,
                 const std::string& out_dir);

// CSV round-trip loader (values only), for consumers and tests.
std::vector<double> load_raster_csv(const std::string& path, int& nlat, int& nlon);

}  // namespace wam::mapgen
