#pragma once

// Scalar, cell-at-a-time re-implementation of the turbulence indexes. It reads
// the raw fields directly and shares no code with the vectorized path.

#include <t2net/indexes.hpp>
#include <t2net/rng.hpp>

#include <array>
#include <cmath>

namespace oracle {

struct Cell {
    std::size_t i, j, k;
};

inline double raw(const t2net::Tensor<double>& f, const t2net::indexes::RawWeatherGrid& g, std::size_t i, std::size_t j,
                  std::size_t k) {
    return f[(i * g.u_wind.dim(1) + j) * g.u_wind.dim(2) + k];
}

inline double theta_at(const t2net::indexes::RawWeatherGrid& g, std::size_t i, std::size_t j, std::size_t k) {
    return raw(g.temperature, g, i, j, k) * std::pow(100000.0 / raw(g.pressure, g, i, j, k), 0.286);
}

template <typename F>
double vertical(const t2net::indexes::RawWeatherGrid& g, Cell c, F&& value) {
    const std::size_t H = g.u_wind.dim(2);
    std::size_t lo = c.k, hi = c.k;
    if (c.k > 0) lo = c.k - 1;
    if (c.k + 1 < H) hi = c.k + 1;
    return (value(c.i, c.j, hi) - value(c.i, c.j, lo)) / (g.level_heights[hi] - g.level_heights[lo]);
}

template <typename F>
double horizontal(const t2net::indexes::RawWeatherGrid& g, Cell c, int axis, F&& value) {
    const std::size_t n = g.u_wind.dim(axis);
    const std::size_t pos = axis == 0 ? c.i : c.j;
    const std::size_t lo = pos > 0 ? pos - 1 : 0;
    const std::size_t hi = pos + 1 < n ? pos + 1 : n - 1;
    const double step = axis == 0 ? g.cell_dx : g.cell_dy;
    const double a = axis == 0 ? value(lo, c.j, c.k) : value(c.i, lo, c.k);
    const double b = axis == 0 ? value(hi, c.j, c.k) : value(c.i, hi, c.k);
    return (b - a) / (double(hi - lo) * step);
}

inline auto field(const t2net::indexes::RawWeatherGrid& g, const t2net::Tensor<double>& f) {
    return [&g, &f](std::size_t i, std::size_t j, std::size_t k) { return raw(f, g, i, j, k); };
}

inline double shear(const t2net::indexes::RawWeatherGrid& g, Cell c) {
    const double du = vertical(g, c, field(g, g.u_wind));
    const double dv = vertical(g, c, field(g, g.v_wind));
    return std::sqrt(du * du + dv * dv);
}

inline double richardson(const t2net::indexes::RawWeatherGrid& g, Cell c, double ri_max = 1e6) {
    const double dtheta = vertical(g, c, [&](std::size_t i, std::size_t j, std::size_t k) { return theta_at(g, i, j, k); });
    const double num = 9.80665 / theta_at(g, c.i, c.j, c.k) * dtheta;
    const double vws = shear(g, c);
    if (num == 0.0) return 0.0;
    const double ri = num / (vws * vws);
    if (!std::isfinite(ri) || std::abs(ri) > ri_max) return num > 0 ? ri_max : -ri_max;
    return ri;
}

inline double deformation(const t2net::indexes::RawWeatherGrid& g, Cell c) {
    const double dudx = horizontal(g, c, 0, field(g, g.u_wind));
    const double dudy = horizontal(g, c, 1, field(g, g.u_wind));
    const double dvdx = horizontal(g, c, 0, field(g, g.v_wind));
    const double dvdy = horizontal(g, c, 1, field(g, g.v_wind));
    const double dsh = dvdx + dudy;
    const double dst = dudx - dvdy;
    return std::sqrt(dsh * dsh + dst * dst);
}

inline double colson_panofsky(const t2net::indexes::RawWeatherGrid& g, Cell c, double ri_crit = 0.5) {
    const std::size_t H = g.u_wind.dim(2);
    double dz;
    if (c.k == 0) dz = g.level_heights[1] - g.level_heights[0];
    else if (c.k + 1 == H) dz = g.level_heights[H - 1] - g.level_heights[H - 2];
    else dz = 0.5 * (g.level_heights[c.k + 1] - g.level_heights[c.k - 1]);
    const double dv = dz * shear(g, c);
    return dv * dv * (1.0 - richardson(g, c) / ri_crit) * 1.9438 * 1.9438;
}

inline double wind_speed(const t2net::indexes::RawWeatherGrid& g, Cell c) {
    const double u = raw(g.u_wind, g, c.i, c.j, c.k);
    const double v = raw(g.v_wind, g, c.i, c.j, c.k);
    return std::sqrt(u * u + v * v);
}

inline double temp_gradient(const t2net::indexes::RawWeatherGrid& g, Cell c) {
    const double a = horizontal(g, c, 0, field(g, g.temperature));
    const double b = horizontal(g, c, 1, field(g, g.temperature));
    return std::sqrt(a * a + b * b);
}

/// The six derived channels in feature-cube order (6..11).
inline std::array<double, 6> derived(const t2net::indexes::RawWeatherGrid& g, Cell c) {
    return {richardson(g, c), colson_panofsky(g, c), shear(g, c) * deformation(g, c), wind_speed(g, c),
            temp_gradient(g, c), wind_speed(g, c) * deformation(g, c)};
}

/// Random but physically plausible raw grid for oracle comparisons.
inline t2net::indexes::RawWeatherGrid random_grid(t2net::RandomStream& rng, std::size_t L, std::size_t W, std::size_t H) {
    auto g = t2net::indexes::RawWeatherGrid::blank(L, W, H);
    double z = 9000.0;
    for (std::size_t k = 0; k < H; ++k) {
        g.level_heights[k] = z;
        z += rng.uniform(300.0, 700.0);
    }
    for (std::size_t i = 0; i < g.u_wind.size(); ++i) {
        const std::size_t k = i % H;
        g.u_wind[i] = rng.uniform(-40.0, 60.0);
        g.v_wind[i] = rng.uniform(-40.0, 40.0);
        g.temperature[i] = 230.0 - 0.004 * double(k) * 500.0 + rng.uniform(-4.0, 4.0);
        g.rel_humidity[i] = rng.uniform(5.0, 95.0);
        g.vertical_velocity[i] = rng.uniform(-1.0, 1.0);
        g.pressure[i] = 30000.0 * std::exp(-(g.level_heights[k] - 9000.0) / 7000.0) + rng.uniform(-50.0, 50.0);
    }
    return g;
}

} // namespace oracle
