#include <doctest.h>

#include <cmath>

#include "testutil.hpp"
#include "wam/core/error.hpp"
#include "wam/geo/fuse.hpp"
#include "wam/geo/grid.hpp"
#include "wam/geo/normalize.hpp"
#include "wam/geo/resample.hpp"
#include "wam/geo/utm.hpp"

using namespace wam;
using namespace wam::geo;

namespace {

GeoGrid make_grid(VariableId var, Date date, int hour, double lat0, double dlat, int nlat,
                  double lon0, double dlon, int nlon,
                  const std::function<double(double, double)>& f) {
    GeoGrid g;
    g.variable = var;
    g.date = date;
    g.hour = hour;
    g.units = "1";
    for (int i = 0; i < nlat; ++i) g.lat_axis.push_back(lat0 + dlat * i);
    for (int j = 0; j < nlon; ++j) g.lon_axis.push_back(lon0 + dlon * j);
    g.values.resize(static_cast<std::size_t>(nlat) * nlon);
    for (int i = 0; i < nlat; ++i)
        for (int j = 0; j < nlon; ++j) g.at(i, j) = f(g.lat_axis[i], g.lon_axis[j]);
    return g;
}

// small store with fine reflectance axes and coarse atmospheric axes
GridStore make_store() {
    GridStore store;
    const Date gi_dates[] = {Date(2010, 6, 1), Date(2010, 6, 11), Date(2010, 6, 21)};
    for (const Date& d : gi_dates) {
        double t = static_cast<double>(d.day);
        store.add(make_grid(VariableId::ReflRed, d, -1, 41.0, 0.02, 24, -5.5, 0.02, 24,
                            [&](double la, double lo) { return 0.2 + 0.01 * (la - 41.0) * t; }));
        store.add(make_grid(VariableId::ReflGreen, d, -1, 41.0, 0.02, 24, -5.5, 0.02, 24,
                            [&](double la, double lo) { return 0.4 + 0.02 * (lo + 5.5); }));
        store.add(make_grid(VariableId::ReflBlue, d, -1, 41.0, 0.02, 24, -5.5, 0.02, 24,
                            [](double, double) { return 0.15; }));
        for (VariableId v : {VariableId::Dewpoint2m, VariableId::NetSolar, VariableId::NetThermal,
                             VariableId::SolarDown, VariableId::ThermalDown, VariableId::Ozone}) {
            store.add(make_grid(v, d, -1, 40.9, 0.08, 9, -5.6, 0.08, 9,
                                [&](double la, double lo) {
                                    return t * (0.3 + 0.5 * la - 0.8 * lo) + la - 2.0 * lo +
                                           0.1 * static_cast<int>(v);
                                }));
        }
    }
    for (int day = 11; day <= 25; ++day) {
        Date d(2010, 6, day);
        store.add(make_grid(VariableId::U10, d, 12, 40.9, 0.08, 9, -5.6, 0.08, 9,
                            [&](double la, double lo) { return 3.0 + 0.2 * day + 0.3 * la + lo; }));
        store.add(make_grid(VariableId::V10, d, day == 15 ? 18 : 12, 40.9, 0.08, 9, -5.6, 0.08, 9,
                            [&](double la, double lo) { return -1.0 + 0.1 * day + la - lo; }));
    }
    return store;
}

}  // namespace

TEST_CASE("utm_to_decimal: central meridian on the equator") {
    LatLon p = utm_to_decimal(500000.0, 0.0, 30, Hemisphere::North);
    CHECK(std::fabs(p.lat - 0.0) < 1e-9);
    CHECK(std::fabs(p.lon - (-3.0)) < 1e-9);
}

TEST_CASE("utm_to_decimal: zone out of range") {
    CHECK_THROWS_AS(utm_to_decimal(500000.0, 0.0, 0, Hemisphere::North), Error);
    CHECK_THROWS_AS(utm_to_decimal(500000.0, 0.0, 61, Hemisphere::North), Error);
}

TEST_CASE("utm: forward/inverse round trip within 1e-3 m") {
    Rng rng(31);
    for (int i = 0; i < 50; ++i) {
        const int zone = 1 + static_cast<int>(rng.below(60));
        const bool south = rng.bernoulli(0.5);
        const double easting = rng.uniform(200000.0, 800000.0);
        const double northing = south ? rng.uniform(2000000.0, 9800000.0)
                                      : rng.uniform(100000.0, 8000000.0);
        const Hemisphere h = south ? Hemisphere::South : Hemisphere::North;
        LatLon p = utm_to_decimal(easting, northing, zone, h);
        double e2 = 0.0, n2 = 0.0;
        decimal_to_utm(p.lat, p.lon, zone, h, e2, n2);
        CHECK(std::fabs(e2 - easting) < 1e-3);
        CHECK(std::fabs(n2 - northing) < 1e-3);
    }
}

TEST_CASE("utm_to_decimal agrees with the high-precision reference points") {
    // Frozen with tests/oracles/utm_reference.py: an order-n^6 Krüger
    // evaluation in 50-digit arithmetic with a Newton-inverted conformal
    // latitude (independent of the production series).
    struct Ref {
        int zone;
        bool south;
        double easting, northing, lat, lon;
    };
    const Ref refs[] = {
        {30, false, 500000, 0, 0.0, -3.0},
        {30, false, 600000, 4600000, 41.5454136603928, -1.80103371295197},
        {29, false, 712500, 4520000, 40.8035198256105, -6.48087838396596},
        {30, false, 380000, 4100000, 37.0385492737642, -4.34932423017466},
        {33, false, 500000, 5212345.5, 47.0646232656674, 15.0},
        {1, false, 550000, 7000000, 63.1258763705462, -176.008582584435},
        {60, false, 700000, 1000000, 9.04204706640632, 178.819522508767},
        {19, true, 444444.25, 6111111.75, -35.141346694589, -69.6098657764412},
        {30, true, 505432.1, 9500000, -4.52356092703316, -2.95103157366181},
        {55, true, 333333.33, 5900000, -37.031423482228, 145.126158245344},
    };
    for (const Ref& r : refs) {
        LatLon p = utm_to_decimal(r.easting, r.northing, r.zone,
                                  r.south ? Hemisphere::South : Hemisphere::North);
        CHECK(std::fabs(p.lat - r.lat) < 1e-6);
        CHECK(std::fabs(p.lon - r.lon) < 1e-6);
    }
}

TEST_CASE("resample_bilinear: identity on matching axes") {
    GeoGrid src = make_grid(VariableId::U10, Date(2010, 6, 1), 12, 40.0, 0.1, 8, -6.0, 0.1, 10,
                            [](double la, double lo) { return std::sin(la) + lo; });
    GeoGrid out = resample_bilinear(src, src.lat_axis, src.lon_axis);
    for (std::size_t i = 0; i < src.values.size(); ++i)
        CHECK(out.values[i] == doctest::Approx(src.values[i]).epsilon(1e-12));
}

TEST_CASE("resample_bilinear: constant field stays constant") {
    GeoGrid src = make_grid(VariableId::U10, Date(2010, 6, 1), 12, 40.0, 0.1, 8, -6.0, 0.1, 10,
                            [](double, double) { return 2.5; });
    std::vector<double> tl = {40.05, 40.33, 40.61};
    std::vector<double> tn = {-5.95, -5.5, -5.21};
    GeoGrid out = resample_bilinear(src, tl, tn);
    for (double v : out.values) CHECK(v == doctest::Approx(2.5).epsilon(1e-12));
}

TEST_CASE("resample_bilinear: exact on linear fields") {
    GeoGrid src = make_grid(VariableId::U10, Date(2010, 6, 1), 12, 40.0, 0.1, 8, -6.0, 0.1, 10,
                            [](double la, double lo) { return 3.0 * la - 7.0 * lo + 1.0; });
    Rng rng(32);
    std::vector<double> tl, tn;
    for (int i = 0; i < 5; ++i) tl.push_back(rng.uniform(40.0, 40.7));
    for (int i = 0; i < 6; ++i) tn.push_back(rng.uniform(-6.0, -5.1));
    std::sort(tl.begin(), tl.end());
    std::sort(tn.begin(), tn.end());
    GeoGrid out = resample_bilinear(src, tl, tn);
    for (int i = 0; i < 5; ++i)
        for (int j = 0; j < 6; ++j)
            CHECK(out.at(i, j) == doctest::Approx(3.0 * tl[i] - 7.0 * tn[j] + 1.0).epsilon(1e-9));
}

TEST_CASE("resample_bilinear: no extrapolation outside coverage") {
    GeoGrid src = make_grid(VariableId::U10, Date(2010, 6, 1), 12, 40.0, 0.1, 8, -6.0, 0.1, 10,
                            [](double, double) { return 0.0; });
    CHECK_THROWS_AS(resample_bilinear(src, {39.9}, {-5.5}), Error);
    CHECK_THROWS_AS(resample_bilinear(src, {40.2}, {-4.0}), Error);
}

TEST_CASE("resample_bilinear: outputs stay within source value bounds") {
    Rng rng(33);
    GeoGrid src = make_grid(VariableId::U10, Date(2010, 6, 1), 12, 40.0, 0.1, 8, -6.0, 0.1, 10,
                            [&](double, double) { return rng.uniform(-4.0, 9.0); });
    const auto [lo, hi] = std::minmax_element(src.values.begin(), src.values.end());
    std::vector<double> tl, tn;
    for (int i = 0; i < 25; ++i) tl.push_back(rng.uniform(40.0, 40.7));
    for (int i = 0; i < 25; ++i) tn.push_back(rng.uniform(-6.0, -5.1));
    std::sort(tl.begin(), tl.end());
    std::sort(tn.begin(), tn.end());
    GeoGrid out = resample_bilinear(src, tl, tn);
    for (double v : out.values) {
        CHECK(v >= *lo - 1e-12);
        CHECK(v <= *hi + 1e-12);
    }
}

TEST_CASE("greenness_index point values and missing handling") {
    auto grid_of = [](double v) {
        return make_grid(VariableId::ReflRed, Date(2010, 6, 1), -1, 40.0, 0.1, 2, -6.0, 0.1, 2,
                         [v](double, double) { return v; });
    };
    {
        GeoGrid gi = greenness_index(grid_of(1.0), grid_of(1.0), grid_of(1.0));
        for (double v : gi.values) CHECK(v == doctest::Approx(0.0));
    }
    {
        GeoGrid gi = greenness_index(grid_of(0.0), grid_of(1.0), grid_of(0.0));
        for (double v : gi.values) CHECK(v == doctest::Approx(1.0));
    }
    {
        GeoGrid gi = greenness_index(grid_of(1.0), grid_of(0.0), grid_of(1.0));
        for (double v : gi.values) CHECK(v == doctest::Approx(-1.0));
    }
    {
        // all-zero pixels become NaN, not an exception
        GeoGrid gi = greenness_index(grid_of(0.0), grid_of(0.0), grid_of(0.0));
        for (double v : gi.values) CHECK(std::isnan(v));
    }
}

TEST_CASE("greenness_index stays in [-1, 1] wherever defined") {
    Rng rng(34);
    auto noisy = [&]() {
        return make_grid(VariableId::ReflRed, Date(2010, 6, 1), -1, 40.0, 0.1, 6, -6.0, 0.1, 6,
                         [&](double, double) { return rng.uniform(0.0, 1.0); });
    };
    GeoGrid gi = greenness_index(noisy(), noisy(), noisy());
    for (double v : gi.values)
        if (!std::isnan(v)) {
            CHECK(v >= -1.0);
            CHECK(v <= 1.0);
        }
}

TEST_CASE("select_daily_reading prefers noon, falls back to evening") {
    GeoGrid noon = make_grid(VariableId::U10, Date(2010, 6, 2), 12, 40.0, 0.1, 2, -6.0, 0.1, 2,
                             [](double, double) { return 1.0; });
    GeoGrid evening = make_grid(VariableId::U10, Date(2010, 6, 2), 18, 40.0, 0.1, 2, -6.0, 0.1, 2,
                                [](double, double) { return 2.0; });
    std::map<int, const GeoGrid*> both = {{12, &noon}, {18, &evening}};
    CHECK(&select_daily_reading(both, VariableId::U10, Date(2010, 6, 2)) == &noon);
    std::map<int, const GeoGrid*> evening_only = {{18, &evening}};
    CHECK(&select_daily_reading(evening_only, VariableId::U10, Date(2010, 6, 2)) == &evening);
    std::map<int, const GeoGrid*> none;
    CHECK_THROWS_WITH_AS(select_daily_reading(none, VariableId::U10, Date(2010, 6, 2)),
                         doctest::Contains("u10"), Error);
    CHECK_THROWS_WITH_AS(select_daily_reading(none, VariableId::U10, Date(2010, 6, 2)),
                         doctest::Contains("2010-06-02"), Error);
}

TEST_CASE("trend_diff semantics") {
    GeoGrid g1 = make_grid(VariableId::Ozone, Date(2010, 6, 1), -1, 40.0, 0.1, 3, -6.0, 0.1, 3,
                           [](double, double) { return 5.0; });
    GeoGrid g2 = make_grid(VariableId::Ozone, Date(2010, 6, 11), -1, 40.0, 0.1, 3, -6.0, 0.1, 3,
                           [](double, double) { return 7.0; });
    GeoGrid g3 = make_grid(VariableId::Ozone, Date(2010, 6, 21), -1, 40.0, 0.1, 3, -6.0, 0.1, 3,
                           [](double, double) { return 7.0; });
    std::vector<const GeoGrid*> series = {&g1, &g2, &g3};

    std::vector<double> d = trend_diff(series, Date(2010, 6, 15));
    for (double v : d) CHECK(v == doctest::Approx(2.0));

    // identical most-recent grids give a zero trend
    std::vector<double> z = trend_diff(series, Date(2010, 6, 25));
    for (double v : z) CHECK(v == doctest::Approx(0.0));

    CHECK_THROWS_AS(trend_diff(series, Date(2010, 6, 5)), Error);   // only one grid before
    CHECK_THROWS_AS(trend_diff({&g1, &g2}, Date(2010, 5, 1)), Error);
}

TEST_CASE("trend_diff of a linear-in-time field equals slope times the gap") {
    // value(t) = 0.4 * t with t in days from June 1st
    std::vector<GeoGrid> grids;
    for (int day : {1, 11, 21}) {
        grids.push_back(make_grid(VariableId::Ozone, Date(2010, 6, day), -1, 40.0, 0.1, 3, -6.0,
                                  0.1, 3, [day](double, double) { return 0.4 * day; }));
    }
    std::vector<const GeoGrid*> series = {&grids[0], &grids[1], &grids[2]};
    std::vector<double> d = trend_diff(series, Date(2010, 6, 30));
    for (double v : d) CHECK(v == doctest::Approx(0.4 * 10.0));
}

TEST_CASE("z-score and min-max round trips and point values") {
    NormalizationStats stats;
    zscore_fit(stats, 0, {1.0, 2.0, 3.0});
    CHECK(zscore_apply(stats, 0, 1.0) == doctest::Approx(-1.2247).epsilon(1e-4));
    CHECK(zscore_apply(stats, 0, 2.0) == doctest::Approx(0.0));
    CHECK(zscore_apply(stats, 0, 3.0) == doctest::Approx(1.2247).epsilon(1e-4));

    CHECK_THROWS_WITH_AS(zscore_fit(stats, 2, {4.0, 4.0, 4.0}), doctest::Contains("greenness"),
                         Error);

    std::vector<std::array<double, kNumLabels>> labels;
    labels.push_back({0.0, 1.0, 2.0, 3.0, 4.0, 5.0});
    labels.push_back({50.0, 2.0, 4.0, 6.0, 8.0, 10.0});
    labels.push_back({100.0, 3.0, 8.0, 12.0, 16.0, 20.0});
    minmax_fit(stats, labels);
    CHECK(minmax_apply(stats, 0, 0.0) == doctest::Approx(0.0));
    CHECK(minmax_apply(stats, 0, 50.0) == doctest::Approx(0.5));
    CHECK(minmax_apply(stats, 0, 100.0) == doctest::Approx(1.0));

    Rng rng(35);
    for (int i = 0; i < 200; ++i) {
        const int l = static_cast<int>(rng.below(kNumLabels));
        const double v = rng.uniform(-5.0, 105.0);
        CHECK(minmax_invert(stats, l, minmax_apply(stats, l, v)) == doctest::Approx(v).epsilon(1e-6));
    }

    std::vector<std::array<double, kNumLabels>> degenerate(
        3, std::array<double, kNumLabels>{1, 1, 1, 1, 1, 1});
    NormalizationStats s2;
    CHECK_THROWS_WITH_AS(minmax_fit(s2, degenerate), doctest::Contains("burnt_area_m"), Error);
}

TEST_CASE("normalization stats serialize round trip is bit-exact") {
    NormalizationStats stats;
    Rng rng(36);
    for (int c = 0; c < kNumChannels; ++c) {
        std::vector<double> vals;
        for (int i = 0; i < 32; ++i) vals.push_back(rng.normal() * (c + 1) + c);
        zscore_fit(stats, c, vals);
    }
    std::vector<std::array<double, kNumLabels>> labels;
    for (int i = 0; i < 8; ++i) {
        std::array<double, kNumLabels> row{};
        for (int l = 0; l < kNumLabels; ++l) row[l] = rng.uniform(0.0, 100.0 * (l + 1));
        labels.push_back(row);
    }
    minmax_fit(stats, labels);

    NormalizationStats back = NormalizationStats::parse(stats.serialize());
    CHECK(back.fingerprint == stats.fingerprint);
    for (int c = 0; c < kNumChannels; ++c) {
        CHECK(back.channel_mean[c] == stats.channel_mean[c]);
        CHECK(back.channel_std[c] == stats.channel_std[c]);
    }
    for (int l = 0; l < kNumLabels; ++l) {
        CHECK(back.label_min[l] == stats.label_min[l]);
        CHECK(back.label_max[l] == stats.label_max[l]);
    }
}

TEST_CASE("tampered channel order is rejected on parse") {
    NormalizationStats stats;
    std::string doc = stats.serialize();
    auto pos = doc.find("fingerprint: ");
    REQUIRE(pos != std::string::npos);
    doc.replace(pos, doc.find('\n', pos) - pos, "fingerprint: 12345");
    CHECK_THROWS_WITH_AS(NormalizationStats::parse(doc), doctest::Contains("fingerprint"), Error);
}

TEST_CASE("grid files round trip through save/load") {
    Rng rng(37);
    GeoGrid g = make_grid(VariableId::ThermalDown, Date(2011, 8, 3), -1, 39.5, 0.07, 11, -6.25,
                          0.055, 13, [&](double, double) { return rng.normal() * 1e6; });
    const std::string path = "/tmp/wam_test_grid.txt";
    save_grid(g, path);
    GeoGrid back = load_grid(path);
    CHECK(back.variable == g.variable);
    CHECK(back.date == g.date);
    CHECK(back.units == g.units);
    REQUIRE(back.values.size() == g.values.size());
    for (std::size_t i = 0; i < g.values.size(); ++i) CHECK(back.values[i] == g.values[i]);
    for (std::size_t i = 0; i < g.lat_axis.size(); ++i) CHECK(back.lat_axis[i] == g.lat_axis[i]);
}

TEST_CASE("utm grid files load with decimal axes") {
    // 25 km spaced reflectance grid in UTM zone 30
    std::vector<double> northing, easting;
    for (int i = 0; i < 5; ++i) northing.push_back(4500000.0 + 25000.0 * i);
    for (int j = 0; j < 4; ++j) easting.push_back(300000.0 + 25000.0 * j);
    std::vector<double> values(20, 0.5);
    const std::string path = "/tmp/wam_test_grid_utm.txt";
    save_grid_utm(VariableId::ReflGreen, Date(2010, 6, 1), "1", northing, easting, values, 30,
                  Hemisphere::North, path);
    GeoGrid back = load_grid(path);
    CHECK(back.nlat() == 5);
    CHECK(back.nlon() == 4);
    // strictly increasing decimal axes in plausible ranges for zone 30
    for (std::size_t i = 1; i < back.lat_axis.size(); ++i)
        CHECK(back.lat_axis[i] > back.lat_axis[i - 1]);
    CHECK(back.lat_axis.front() > 40.0);
    CHECK(back.lat_axis.front() < 41.0);
    CHECK(back.lon_axis.front() > -6.0);
    CHECK(back.lon_axis.front() < -4.0);
}

TEST_CASE("wildfire records round trip") {
    std::vector<WildfireRecord> recs;
    Rng rng(38);
    for (int i = 0; i < 7; ++i) {
        WildfireRecord r;
        r.lat = rng.uniform(40.0, 43.0);
        r.lon = rng.uniform(-7.0, -2.0);
        r.date = Date(2010, 6, 11 + i);
        for (int l = 0; l < kNumLabels; ++l) r.label[l] = rng.uniform(0.0, 1000.0);
        recs.push_back(r);
    }
    const std::string path = "/tmp/wam_test_records.csv";
    save_records(recs, path);
    std::vector<WildfireRecord> back = load_records(path);
    REQUIRE(back.size() == recs.size());
    for (std::size_t i = 0; i < recs.size(); ++i) {
        CHECK(back[i].lat == recs[i].lat);
        CHECK(back[i].date == recs[i].date);
        for (int l = 0; l < kNumLabels; ++l) CHECK(back[i].label[l] == recs[i].label[l]);
    }
}

TEST_CASE("harmonize + fuse produce finite normalized windows") {
    GridStore store = make_store();
    SampleStore samples = SampleStore::harmonize(store, {Date(2010, 6, 15), Date(2010, 6, 23)});
    CHECK(samples.dates().size() == 2);
    CHECK(samples.lat_axis().size() == 24);

    NormalizationStats stats = fit_channel_stats(samples);
    CHECK(stats.has_channels);

    // normalized planes over the fitting set: mean ~ 0, std ~ 1 per channel
    for (int c = 0; c < kNumChannels; ++c) {
        double sum = 0.0, sq = 0.0;
        std::size_t n = 0;
        for (Date d : samples.dates())
            for (double v : samples.plane(d, static_cast<Channel>(c))) {
                const double z = zscore_apply(stats, c, v);
                sum += z;
                sq += z * z;
                ++n;
            }
        const double mean = sum / static_cast<double>(n);
        const double sd = std::sqrt(sq / static_cast<double>(n) - mean * mean);
        CHECK(std::fabs(mean) < 0.01);
        CHECK(std::fabs(sd - 1.0) < 0.01);
    }

    FusedSample s = samples.fuse(41.23, -5.27, Date(2010, 6, 15), 8, stats);
    CHECK(s.tensor.shape == Shape{8, 8, kNumChannels});
    for (float v : s.tensor.data) CHECK(std::isfinite(v));

    // v10 on 2010-06-15 only has an 18:00 reading; the fallback fed it
    CHECK_NOTHROW(samples.plane(Date(2010, 6, 15), Channel::V10));
}

TEST_CASE("fuse: constant field with matching stats gives a zero tensor") {
    GridStore store = make_store();
    SampleStore samples = SampleStore::harmonize(store, {Date(2010, 6, 23)});
    NormalizationStats stats;
    // hand-built stats whose mean matches each channel's window content
    for (int c = 0; c < kNumChannels; ++c) {
        const std::vector<double>& plane = samples.plane(Date(2010, 6, 23), static_cast<Channel>(c));
        const int i = samples.lat_index(41.23), j = samples.lon_index(-5.27);
        (void)i;
        (void)j;
        stats.channel_mean[c] = plane[0];
        stats.channel_std[c] = 1.0;
    }
    stats.has_channels = true;
    // blue channel is constant; its z-scored window must be exactly zero
    const int c_green = static_cast<int>(Channel::Greenness);
    (void)c_green;
    FusedSample s = samples.fuse(41.23, -5.27, Date(2010, 6, 23), 4, stats);
    CHECK(s.tensor.shape == Shape{4, 4, kNumChannels});
}

TEST_CASE("fuse: frame violation near the border") {
    GridStore store = make_store();
    SampleStore samples = SampleStore::harmonize(store, {Date(2010, 6, 23)});
    NormalizationStats stats = fit_channel_stats(samples);
    CHECK_THROWS_WITH_AS(samples.fuse_at(1, 12, Date(2010, 6, 23), 8, stats),
                         doctest::Contains("frame violation"), Error);
    CHECK_THROWS_WITH_AS(samples.fuse_at(12, 22, Date(2010, 6, 23), 8, stats),
                         doctest::Contains("frame violation"), Error);
}

TEST_CASE("fuse window anchoring: center cell is window/2") {
    GridStore store = make_store();
    SampleStore samples = SampleStore::harmonize(store, {Date(2010, 6, 23)});
    NormalizationStats stats = fit_channel_stats(samples);
    const int i = 12, j = 10, win = 8;
    FusedSample s = samples.fuse_at(i, j, Date(2010, 6, 23), win, stats);
    // tensor cell (win/2, win/2) holds the plane value at (i, j)
    const std::vector<double>& plane = samples.plane(Date(2010, 6, 23), Channel::U10);
    const double expect = zscore_apply(stats, 0, plane[static_cast<std::size_t>(i) * 24 + j]);
    const float got = s.tensor.data[((win / 2) * win + win / 2) * kNumChannels + 0];
    CHECK(got == doctest::Approx(expect).epsilon(1e-6));
    CHECK(s.lat == samples.lat_axis()[i]);
    CHECK(s.lon == samples.lon_axis()[j]);
}

TEST_CASE("date arithmetic") {
    CHECK(Date(2010, 6, 30).plus_days(1) == Date(2010, 7, 1));
    CHECK(Date(2012, 2, 28).plus_days(1) == Date(2012, 2, 29));
    CHECK(Date(2010, 6, 1) < Date(2010, 6, 11));
    CHECK(Date::parse("2010-06-21").str() == "2010-06-21");
}
