#include <catch_amalgamated.hpp>

#include "index_oracle.hpp"

#include <t2net/indexes.hpp>

using namespace t2net;
using namespace t2net::indexes;
using Catch::Approx;

namespace {

std::size_t at(const RawWeatherGrid& g, std::size_t i, std::size_t j, std::size_t k) { return g.index(i, j, k); }

void set_all(RawWeatherGrid& g, Tensor<double>& f, auto&& fn) {
    for (std::size_t i = 0; i < g.nx(); ++i)
        for (std::size_t j = 0; j < g.ny(); ++j)
            for (std::size_t k = 0; k < g.nz(); ++k) f[at(g, i, j, k)] = fn(double(i) * g.cell_dx, double(j) * g.cell_dy, g.level_heights[k]);
}

} // namespace

TEST_CASE("wind_speed examples") {
    auto g = RawWeatherGrid::blank(1, 1, 3);
    g.u_wind[0] = 3; g.v_wind[0] = 4;
    g.u_wind[1] = 0; g.v_wind[1] = 0;
    g.u_wind[2] = -5; g.v_wind[2] = 12;
    auto s = wind_speed(g);
    CHECK(s[0] == 5.0);
    CHECK(s[1] == 0.0);
    CHECK(s[2] == 13.0);
}

TEST_CASE("richardson_number examples") {
    auto g = RawWeatherGrid::blank(3, 3, 3);
    g.level_heights = {-100.0, 0.0, 100.0};

    SECTION("isothermal potential temperature gives zero") {
        set_all(g, g.temperature, [](double, double, double) { return 300.0; });
        set_all(g, g.u_wind, [](double, double, double z) { return 0.01 * z; });
        auto ri = richardson_number(g);
        for (double v : ri.values()) CHECK(v == 0.0);
    }
    SECTION("linear theta and shear at the reference pressure") {
        set_all(g, g.temperature, [](double, double, double z) { return 300.0 + 0.003 * z; });
        set_all(g, g.u_wind, [](double, double, double z) { return 0.01 * z; });
        auto ri = richardson_number(g);
        const double expected = (9.80665 / 300.0) * 0.003 / (0.01 * 0.01);
        CHECK(ri[at(g, 1, 1, 1)] == Approx(expected).epsilon(1e-12));
        CHECK(ri[at(g, 1, 1, 1)] == Approx(0.9807).margin(1e-4));
    }
    SECTION("zero shear with stable stratification is capped") {
        set_all(g, g.temperature, [](double, double, double z) { return 300.0 + 0.003 * z; });
        auto ri = richardson_number(g);
        for (double v : ri.values()) CHECK(v == kDefaultRiMax);
        auto ri_small = richardson_number(g, 50.0);
        CHECK(ri_small[0] == 50.0);
    }
    SECTION("needs two levels") {
        auto flat = RawWeatherGrid::blank(2, 2, 1);
        CHECK_THROWS_AS(richardson_number(flat), GeometryError);
    }
}

TEST_CASE("vertical_wind_shear examples") {
    auto g = RawWeatherGrid::blank(2, 2, 4, 250.0);
    set_all(g, g.u_wind, [](double, double, double) { return 7.0; });
    { const auto result = vertical_wind_shear(g); for (double v : result.values()) CHECK(v == 0.0); }
    set_all(g, g.u_wind, [](double, double, double z) { return 0.01 * z; });
    { const auto result = vertical_wind_shear(g); for (double v : result.values()) CHECK(v == Approx(0.01).epsilon(1e-12)); }
    set_all(g, g.u_wind, [](double, double, double) { return 0.0; });
    set_all(g, g.v_wind, [](double, double, double z) { return 0.02 * z; });
    { const auto result = vertical_wind_shear(g); for (double v : result.values()) CHECK(v == Approx(0.02).epsilon(1e-12)); }
    CHECK_THROWS_AS(vertical_wind_shear(RawWeatherGrid::blank(2, 2, 1)), GeometryError);
}

TEST_CASE("colson_panofsky examples") {
    auto g = RawWeatherGrid::blank(3, 3, 3, 1000.0);
    set_all(g, g.u_wind, [](double, double, double z) { return 0.01 * z; });

    SECTION("neutral stratification: Ri = 0, dz = 1000 m, VWS = 0.01") {
        // theta constant => T must compensate for the pressure factor; P = P0 keeps theta = T.
        set_all(g, g.temperature, [](double, double, double) { return 280.0; });
        auto cp = colson_panofsky(g);
        CHECK(cp[at(g, 1, 1, 1)] == Approx(100.0 * 1.9438 * 1.9438).epsilon(1e-12));
        CHECK(cp[at(g, 1, 1, 1)] == Approx(377.9).margin(0.1));
    }
    SECTION("Ri equal to the critical value vanishes") {
        set_all(g, g.temperature, [](double, double, double z) { return 280.0 + 0.003 * z; });
        const double ri = richardson_number(g)[at(g, 1, 1, 1)];
        auto cp = colson_panofsky(g, ri);
        CHECK(cp[at(g, 1, 1, 1)] == Approx(0.0).margin(1e-9));
    }
    SECTION("no shear gives zero") {
        set_all(g, g.u_wind, [](double, double, double) { return 10.0; });
        set_all(g, g.temperature, [](double, double, double z) { return 280.0 + 0.003 * z; });
        { const auto result = colson_panofsky(g); for (double v : result.values()) CHECK(v == 0.0); }
    }
}

TEST_CASE("ellrod_ti1 examples") {
    auto g = RawWeatherGrid::blank(4, 4, 3, 500.0);
    SECTION("uniform horizontal wind") {
        set_all(g, g.u_wind, [](double, double, double z) { return 10.0 + 0.01 * z; });
        { const auto result = ellrod_ti1(g); for (double v : result.values()) CHECK(v == Approx(0.0).margin(1e-15)); }
    }
    SECTION("pure stretching with shear 0.01/s") {
        const double a = 1e-4;
        set_all(g, g.u_wind, [a](double x, double, double z) { return a * x + 0.01 * z; });
        set_all(g, g.v_wind, [a](double, double y, double) { return -a * y; });
        auto def = deformation(g);
        auto ti1 = ellrod_ti1(g);
        for (std::size_t i = 0; i < ti1.size(); ++i) {
            CHECK(def[i] == Approx(2e-4).epsilon(1e-9));
            CHECK(ti1[i] == Approx(2e-6).epsilon(1e-9));
        }
    }
    SECTION("no vertical shear") {
        set_all(g, g.u_wind, [](double x, double, double) { return 1e-4 * x; });
        { const auto result = ellrod_ti1(g); for (double v : result.values()) CHECK(v == 0.0); }
    }
    CHECK_THROWS_AS(ellrod_ti1(RawWeatherGrid::blank(1, 4, 3)), GeometryError);
}

TEST_CASE("horiz_temp_gradient examples") {
    auto g = RawWeatherGrid::blank(4, 4, 2);
    { const auto result = horiz_temp_gradient(g); for (double v : result.values()) CHECK(v == 0.0); }
    set_all(g, g.temperature, [](double x, double, double) { return 280.0 + 1e-5 * x; });
    { const auto result = horiz_temp_gradient(g); for (double v : result.values()) CHECK(v == Approx(1e-5).epsilon(1e-9)); }
    set_all(g, g.temperature, [](double x, double y, double) { return 280.0 + 3e-5 * x + 4e-5 * y; });
    { const auto result = horiz_temp_gradient(g); for (double v : result.values()) CHECK(v == Approx(5e-5).epsilon(1e-9)); }
    CHECK_THROWS_AS(horiz_temp_gradient(RawWeatherGrid::blank(4, 1, 2)), GeometryError);
}

TEST_CASE("mos_cat_predictor examples") {
    auto g = RawWeatherGrid::blank(4, 4, 2);
    { const auto result = mos_cat_predictor(g); for (double v : result.values()) CHECK(v == 0.0); }
    // |v| = 10 at the stretching origin cell region: u = 6 + a x, v = 8 - a y.
    const double a = 1e-4;
    set_all(g, g.u_wind, [a](double x, double, double) { return 6.0 + a * x; });
    set_all(g, g.v_wind, [a](double, double y, double) { return 8.0 - a * y; });
    auto mos = mos_cat_predictor(g);
    CHECK(mos[at(g, 0, 0, 0)] == Approx(10.0 * 2e-4).epsilon(1e-9));
    set_all(g, g.u_wind, [](double, double, double) { return 30.0; });
    set_all(g, g.v_wind, [](double, double, double) { return -20.0; });
    { const auto result = mos_cat_predictor(g); for (double v : result.values()) CHECK(v == 0.0); }
}

TEST_CASE("build_feature_cube layout and scalar oracle") {
    RandomStream rng(5);
    auto g = oracle::random_grid(rng, 6, 5, 4);
    auto cube = build_feature_cube(g, 42, CubeKind::NwpForecast);
    REQUIRE(cube.data.shape() == Shape{6, 5, 4, 12});
    CHECK(cube.timestamp == 42);
    const auto speed = wind_speed(g);
    for (std::size_t c = 0; c < speed.size(); ++c) {
        CHECK(cube.data[c * 12 + 9] == static_cast<float>(speed[c]));
        CHECK(cube.data[c * 12 + 0] == static_cast<float>(g.u_wind[c]));
        CHECK(cube.data[c * 12 + 5] == static_cast<float>(g.pressure[c]));
    }
    const auto ri = richardson_number(g);
    for (int trial = 0; trial < 10; ++trial) {
        oracle::Cell cell{rng.below(6), rng.below(5), rng.below(4)};
        const double expected = oracle::richardson(g, cell);
        CHECK(std::abs(ri[g.index(cell.i, cell.j, cell.k)] - expected) <= 1e-9 * std::max(1.0, std::abs(expected)));
    }
}

TEST_CASE("build_feature_cube rejects non-finite output") {
    auto g = RawWeatherGrid::blank(3, 3, 3);
    g.u_wind[4] = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(build_feature_cube(g, 0, CubeKind::Historical), NumericalError);
    REQUIRE_THROWS_WITH(build_feature_cube(g, 0, CubeKind::Historical), Catch::Matchers::ContainsSubstring("u_wind"));
}

TEST_CASE("index invariants: non-negativity, translation, wind scaling") {
    RandomStream rng(9);
    auto g = oracle::random_grid(rng, 7, 7, 4);
    for (const auto& f : {wind_speed(g), horiz_temp_gradient(g), vertical_wind_shear(g), deformation(g), ellrod_ti1(g),
                          mos_cat_predictor(g)}) {
        for (double v : f.values()) CHECK(v >= 0.0);
    }

    // Shift all raw fields by one cell along x; interior results shift with them.
    auto shifted = g;
    for (auto pair : {std::pair{&g.u_wind, &shifted.u_wind}, std::pair{&g.v_wind, &shifted.v_wind},
                       std::pair{&g.temperature, &shifted.temperature}, std::pair{&g.pressure, &shifted.pressure}}) {
        for (std::size_t i = 0; i + 1 < g.nx(); ++i)
            for (std::size_t j = 0; j < g.ny(); ++j)
                for (std::size_t k = 0; k < g.nz(); ++k) (*pair.second)[g.index(i + 1, j, k)] = (*pair.first)[g.index(i, j, k)];
    }
    const auto ti_a = ellrod_ti1(g), ti_b = ellrod_ti1(shifted);
    const auto ri_a = richardson_number(g), ri_b = richardson_number(shifted);
    const auto tg_a = horiz_temp_gradient(g), tg_b = horiz_temp_gradient(shifted);
    for (std::size_t i = 1; i + 2 < g.nx(); ++i)
        for (std::size_t j = 1; j + 1 < g.ny(); ++j)
            for (std::size_t k = 0; k < g.nz(); ++k) {
                CHECK(ti_b[g.index(i + 1, j, k)] == Approx(ti_a[g.index(i, j, k)]).epsilon(1e-12));
                CHECK(ri_b[g.index(i + 1, j, k)] == Approx(ri_a[g.index(i, j, k)]).epsilon(1e-12));
                CHECK(tg_b[g.index(i + 1, j, k)] == Approx(tg_a[g.index(i, j, k)]).epsilon(1e-12));
            }

    auto doubled = g;
    for (auto& v : doubled.u_wind.values()) v *= 2;
    for (auto& v : doubled.v_wind.values()) v *= 2;
    const auto s1 = wind_speed(g), s2 = wind_speed(doubled);
    const auto t1 = ellrod_ti1(g), t2 = ellrod_ti1(doubled);
    for (std::size_t c = 0; c < s1.size(); ++c) {
        CHECK(s2[c] == Approx(2 * s1[c]).epsilon(1e-12));
        CHECK(t2[c] == Approx(4 * t1[c]).epsilon(1e-12));
    }
}
