#pragma once

#include <map>
#include <string>
#include <vector>

#include "wam/geo/date.hpp"
#include "wam/geo/utm.hpp"

namespace wam::geo {

// Raw ingestion variables. Greenness is derived from the three reflectance
// grids during harmonization.
enum class VariableId {
    U10,
    V10,
    Dewpoint2m,
    NetSolar,
    NetThermal,
    SolarDown,
    ThermalDown,
    Ozone,
    ReflRed,
    ReflGreen,
    ReflBlue,
    Greenness,
};

const char* variable_name(VariableId id);
VariableId variable_from_name(const std::string& name);

// One georeferenced scalar field. Axes are decimal degrees, strictly
// increasing; values are row-major [lat][lon]. Missing cells are NaN.
struct GeoGrid {
    VariableId variable = VariableId::U10;
    Date date;
    int hour = -1;  // -1 when the variable has no reading hour
    std::string units;
    std::vector<double> lat_axis;
    std::vector<double> lon_axis;
    std::vector<double> values;

    int nlat() const { return static_cast<int>(lat_axis.size()); }
    int nlon() const { return static_cast<int>(lon_axis.size()); }
    double at(int i, int j) const { return values[static_cast<std::size_t>(i) * lon_axis.size() + j]; }
    double& at(int i, int j) { return values[static_cast<std::size_t>(i) * lon_axis.size() + j]; }

    void validate() const;  // axis/extent invariants, coordinate ranges
};

// Headered grid text format. Decimal-CRS grids round-trip; UTM-CRS files
// (axes in metres plus zone/hemisphere) are converted to decimal axes on
// load, sampling latitudes along the central easting and longitudes along
// the central northing.
void save_grid(const GeoGrid& grid, const std::string& path);
void save_grid_utm(VariableId variable, Date date, const std::string& units,
                   const std::vector<double>& northing_axis,
                   const std::vector<double>& easting_axis, const std::vector<double>& values,
                   int zone, Hemisphere hemisphere, const std::string& path);
GeoGrid load_grid(const std::string& path);

// Manifest: one grid path per line, relative to the manifest's directory.
void save_manifest(const std::vector<std::string>& relative_paths, const std::string& path);
std::vector<std::string> load_manifest(const std::string& path);  // resolved paths

// Read-only grid repository keyed by (variable, date, hour).
class GridStore {
public:
    static GridStore load(const std::string& manifest_path);

    void add(GeoGrid grid);

    const GeoGrid* find(VariableId variable, Date date, int hour = -1) const;
    // readings of one variable on one date, keyed by hour
    std::map<int, const GeoGrid*> readings(VariableId variable, Date date) const;
    // date-sorted series of one variable (any hour)
    std::vector<const GeoGrid*> series(VariableId variable) const;
    std::vector<Date> dates(VariableId variable) const;
    std::size_t size() const { return grids_.size(); }

private:
    std::vector<GeoGrid> grids_;
};

}  // namespace wam::geo
