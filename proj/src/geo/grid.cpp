#include "wam/geo/grid.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "wam/core/error.hpp"

namespace fs = std::filesystem;

namespace wam::geo {

namespace {

const std::pair<VariableId, const char*> kVariableNames[] = {
    {VariableId::U10, "u10"},
    {VariableId::V10, "v10"},
    {VariableId::Dewpoint2m, "dewpoint_2m"},
    {VariableId::NetSolar, "net_solar"},
    {VariableId::NetThermal, "net_thermal"},
    {VariableId::SolarDown, "solar_down"},
    {VariableId::ThermalDown, "thermal_down"},
    {VariableId::Ozone, "ozone"},
    {VariableId::ReflRed, "refl_red"},
    {VariableId::ReflGreen, "refl_green"},
    {VariableId::ReflBlue, "refl_blue"},
    {VariableId::Greenness, "greenness"},
};

std::string fmt_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void check_monotone(const std::vector<double>& axis, const char* what, const std::string& path) {
    if (axis.size() < 2)
        throw Error("grid: " + std::string(what) + " axis needs at least 2 entries in " + path);
    bool inc = axis[1] > axis[0];
    for (std::size_t i = 1; i < axis.size(); ++i) {
        if (inc ? axis[i] <= axis[i - 1] : axis[i] >= axis[i - 1])
            throw Error("grid: " + std::string(what) + " axis not strictly monotone in " + path);
    }
}

// Normalizes to strictly increasing axes, flipping value rows/columns.
void orient_increasing(GeoGrid& g) {
    if (g.lat_axis.size() >= 2 && g.lat_axis[0] > g.lat_axis[1]) {
        std::reverse(g.lat_axis.begin(), g.lat_axis.end());
        const int nl = g.nlat(), nc = g.nlon();
        for (int i = 0; i < nl / 2; ++i)
            for (int j = 0; j < nc; ++j)
                std::swap(g.values[static_cast<std::size_t>(i) * nc + j],
                          g.values[static_cast<std::size_t>(nl - 1 - i) * nc + j]);
    }
    if (g.lon_axis.size() >= 2 && g.lon_axis[0] > g.lon_axis[1]) {
        std::reverse(g.lon_axis.begin(), g.lon_axis.end());
        const int nl = g.nlat(), nc = g.nlon();
        for (int i = 0; i < nl; ++i)
            for (int j = 0; j < nc / 2; ++j)
                std::swap(g.values[static_cast<std::size_t>(i) * nc + j],
                          g.values[static_cast<std::size_t>(i) * nc + (nc - 1 - j)]);
    }
}

}  // namespace

const char* variable_name(VariableId id) {
    for (const auto& [vid, name] : kVariableNames)
        if (vid == id) return name;
    throw Error("variable_name: unknown variable id");
}

VariableId variable_from_name(const std::string& name) {
    for (const auto& [vid, vname] : kVariableNames)
        if (name == vname) return vid;
    throw Error("variable_from_name: unknown variable '" + name + "'");
}

void GeoGrid::validate() const {
    if (lat_axis.size() * lon_axis.size() != values.size())
        throw Error("grid: value count " + std::to_string(values.size()) +
                    " does not match axes " + std::to_string(lat_axis.size()) + "x" +
                    std::to_string(lon_axis.size()));
    check_monotone(lat_axis, "lat", variable_name(variable));
    check_monotone(lon_axis, "lon", variable_name(variable));
    for (double v : lat_axis)
        if (v < -90.0 || v > 90.0)
            throw Error("grid: latitude " + std::to_string(v) + " outside [-90,90]");
    for (double v : lon_axis)
        if (v < -180.0 || v > 180.0)
            throw Error("grid: longitude " + std::to_string(v) + " outside [-180,180]");
}

namespace {

void write_header(std::ostream& os, VariableId variable, Date date, int hour,
                  const std::string& units) {
    os << "WAMGRID 1\n";
    os << "variable: " << variable_name(variable) << "\n";
    os << "units: " << units << "\n";
    os << "date: " << date.str() << "\n";
    if (hour >= 0) os << "hour: " << hour << "\n";
}

void write_axes_values(std::ostream& os, const char* lat_key, const char* lon_key,
                       const std::vector<double>& lat, const std::vector<double>& lon,
                       const std::vector<double>& values) {
    os << lat_key << ":";
    for (double v : lat) os << " " << fmt_double(v);
    os << "\n" << lon_key << ":";
    for (double v : lon) os << " " << fmt_double(v);
    os << "\nvalues:\n";
    const std::size_t nlon = lon.size();
    for (std::size_t i = 0; i < lat.size(); ++i) {
        for (std::size_t j = 0; j < nlon; ++j) {
            if (j) os << " ";
            os << fmt_double(values[i * nlon + j]);
        }
        os << "\n";
    }
}

}  // namespace

void save_grid(const GeoGrid& grid, const std::string& path) {
    grid.validate();
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw Error("grid: cannot open for writing: " + path);
    write_header(os, grid.variable, grid.date, grid.hour, grid.units);
    os << "crs: decimal\n";
    write_axes_values(os, "lat_axis", "lon_axis", grid.lat_axis, grid.lon_axis, grid.values);
    if (!os) throw Error("grid: write failed: " + path);
}

void save_grid_utm(VariableId variable, Date date, const std::string& units,
                   const std::vector<double>& northing_axis,
                   const std::vector<double>& easting_axis, const std::vector<double>& values,
                   int zone, Hemisphere hemisphere, const std::string& path) {
    if (northing_axis.size() * easting_axis.size() != values.size())
        throw Error("grid: value count does not match axes for " + path);
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw Error("grid: cannot open for writing: " + path);
    write_header(os, variable, date, -1, units);
    os << "crs: utm " << zone << " " << (hemisphere == Hemisphere::South ? "S" : "N") << "\n";
    write_axes_values(os, "northing_axis", "easting_axis", northing_axis, easting_axis, values);
    if (!os) throw Error("grid: write failed: " + path);
}

GeoGrid load_grid(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw Error("grid: cannot open: " + path);
    std::string line;
    if (!std::getline(is, line) || line != "WAMGRID 1")
        throw Error("grid: bad header in " + path);

    GeoGrid g;
    bool utm = false;
    int zone = 0;
    Hemisphere hemi = Hemisphere::North;
    std::vector<double> axis_a, axis_b;  // lat/northing, lon/easting

    auto parse_axis = [&](const std::string& rest) {
        std::vector<double> axis;
        std::istringstream ss(rest);
        double v;
        while (ss >> v) axis.push_back(v);
        return axis;
    };

    while (std::getline(is, line)) {
        if (line == "values:") break;
        auto colon = line.find(':');
        if (colon == std::string::npos) throw Error("grid: malformed line in " + path);
        std::string key = line.substr(0, colon);
        std::string rest = line.substr(colon + 1);
        if (!rest.empty() && rest[0] == ' ') rest.erase(0, 1);
        if (key == "variable") {
            g.variable = variable_from_name(rest);
        } else if (key == "units") {
            g.units = rest;
        } else if (key == "date") {
            g.date = Date::parse(rest);
        } else if (key == "hour") {
            g.hour = std::stoi(rest);
        } else if (key == "crs") {
            if (rest == "decimal") {
                utm = false;
            } else {
                std::istringstream ss(rest);
                std::string kind, h;
                ss >> kind >> zone >> h;
                if (kind != "utm" || (h != "N" && h != "S"))
                    throw Error("grid: unsupported crs '" + rest + "' in " + path);
                utm = true;
                hemi = h == "S" ? Hemisphere::South : Hemisphere::North;
            }
        } else if (key == "lat_axis" || key == "northing_axis") {
            axis_a = parse_axis(rest);
        } else if (key == "lon_axis" || key == "easting_axis") {
            axis_b = parse_axis(rest);
        } else {
            throw Error("grid: unknown key '" + key + "' in " + path);
        }
    }

    g.values.reserve(axis_a.size() * axis_b.size());
    double v;
    while (is >> v) g.values.push_back(v);
    if (g.values.size() != axis_a.size() * axis_b.size())
        throw Error("grid: value count " + std::to_string(g.values.size()) + " does not match " +
                    std::to_string(axis_a.size()) + "x" + std::to_string(axis_b.size()) + " in " +
                    path);

    if (utm) {
        // axis-separable conversion: latitudes along the central easting,
        // longitudes along the central northing
        const double mid_e = axis_b[axis_b.size() / 2];
        const double mid_n = axis_a[axis_a.size() / 2];
        g.lat_axis.reserve(axis_a.size());
        for (double n : axis_a) g.lat_axis.push_back(utm_to_decimal(mid_e, n, zone, hemi).lat);
        g.lon_axis.reserve(axis_b.size());
        for (double e : axis_b) g.lon_axis.push_back(utm_to_decimal(e, mid_n, zone, hemi).lon);
    } else {
        g.lat_axis = std::move(axis_a);
        g.lon_axis = std::move(axis_b);
    }

    orient_increasing(g);
    g.validate();
    return g;
}

void save_manifest(const std::vector<std::string>& relative_paths, const std::string& path) {
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw Error("manifest: cannot open for writing: " + path);
    os << "# wam grid manifest\n";
    for (const std::string& p : relative_paths) os << p << "\n";
    if (!os) throw Error("manifest: write failed: " + path);
}

std::vector<std::string> load_manifest(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw Error("manifest: cannot open: " + path);
    const fs::path base = fs::path(path).parent_path();
    std::vector<std::string> out;
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty() || line[0] == '#') continue;
        out.push_back((base / line).string());
    }
    if (out.empty()) throw Error("manifest: no grid entries in " + path);
    return out;
}

GridStore GridStore::load(const std::string& manifest_path) {
    GridStore store;
    for (const std::string& p : load_manifest(manifest_path)) store.add(load_grid(p));
    return store;
}

void GridStore::add(GeoGrid grid) { grids_.push_back(std::move(grid)); }

const GeoGrid* GridStore::find(VariableId variable, Date date, int hour) const {
    for (const GeoGrid& g : grids_)
        if (g.variable == variable && g.date == date && g.hour == hour) return &g;
    return nullptr;
}

std::map<int, const GeoGrid*> GridStore::readings(VariableId variable, Date date) const {
    std::map<int, const GeoGrid*> out;
    for (const GeoGrid& g : grids_)
        if (g.variable == variable && g.date == date) out[g.hour] = &g;
    return out;
}

std::vector<const GeoGrid*> GridStore::series(VariableId variable) const {
    std::vector<const GeoGrid*> out;
    for (const GeoGrid& g : grids_)
        if (g.variable == variable) out.push_back(&g);
    std::sort(out.begin(), out.end(),
              [](const GeoGrid* a, const GeoGrid* b) { return a->date < b->date; });
    return out;
}

std::vector<Date> GridStore::dates(VariableId variable) const {
    std::vector<Date> out;
    for (const GeoGrid* g : series(variable))
        if (out.empty() || out.back() != g->date) out.push_back(g->date);
    return out;
}

}  // namespace wam::geo
