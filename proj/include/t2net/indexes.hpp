#pragma once

#include <t2net/error.hpp>
#include <t2net/grid.hpp>
#include <t2net/tensor.hpp>

#include <array>
#include <cmath>
#include <string>
#include <vector>

namespace t2net::indexes {

inline constexpr double kGravity = 9.80665;        // m/s^2
inline constexpr double kReferencePressure = 1e5;  // Pa
inline constexpr double kPoissonExponent = 0.286;  // R/cp for dry air
inline constexpr double kKnotsPerMs = 1.9438;
inline constexpr double kDefaultRiMax = 1e6;
inline constexpr double kDefaultCellSpacing = 13000.0;  // m

/// Six raw NWP fields on an [L,W,H] grid plus the grid metric.
struct RawWeatherGrid {
    Tensor<double> u_wind;             ///< m/s
    Tensor<double> v_wind;             ///< m/s
    Tensor<double> temperature;        ///< K
    Tensor<double> rel_humidity;       ///< %
    Tensor<double> vertical_velocity;  ///< Pa/s
    Tensor<double> pressure;           ///< Pa
    double cell_dx = kDefaultCellSpacing;
    double cell_dy = kDefaultCellSpacing;
    std::vector<double> level_heights;  ///< m, strictly increasing, length H

    /// Zero-filled grid with standard pressure/temperature so it passes validation.
    static RawWeatherGrid blank(std::size_t L, std::size_t W, std::size_t H, double dz = 500.0) {
        RawWeatherGrid g;
        const Shape s{L, W, H};
        g.u_wind = Tensor<double>(s, 0.0);
        g.v_wind = Tensor<double>(s, 0.0);
        g.temperature = Tensor<double>(s, 250.0);
        g.rel_humidity = Tensor<double>(s, 50.0);
        g.vertical_velocity = Tensor<double>(s, 0.0);
        g.pressure = Tensor<double>(s, kReferencePressure);
        for (std::size_t k = 0; k < H; ++k) g.level_heights.push_back(static_cast<double>(k) * dz);
        return g;
    }

    std::size_t nx() const { return u_wind.dim(0); }
    std::size_t ny() const { return u_wind.dim(1); }
    std::size_t nz() const { return u_wind.dim(2); }
    std::size_t index(std::size_t i, std::size_t j, std::size_t k) const { return (i * ny() + j) * nz() + k; }

    void validate() const {
        if (u_wind.rank() != 3) throw StructuralError("raw grid fields must be rank 3");
        for (const auto* f : {&v_wind, &temperature, &rel_humidity, &vertical_velocity, &pressure}) {
            require_same_shape(f->shape(), u_wind.shape(), "raw weather field");
        }
        if (level_heights.size() != nz()) throw GeometryError("level_heights length must equal H");
        for (std::size_t k = 1; k < level_heights.size(); ++k) {
            if (!(level_heights[k] > level_heights[k - 1])) {
                throw GeometryError("level_heights must be strictly increasing");
            }
        }
        if (!(cell_dx > 0.0 && cell_dy > 0.0)) throw GeometryError("cell spacing must be positive");
        for (std::size_t i = 0; i < temperature.size(); ++i) {
            if (!(temperature[i] > 0.0)) throw ValidationError("temperature must be > 0 K");
            if (!(pressure[i] > 0.0)) throw ValidationError("pressure must be > 0 Pa");
        }
    }
};

namespace detail {

inline void require_vertical(const RawWeatherGrid& g) {
    if (g.nz() < 2) throw GeometryError("vertical derivative needs H >= 2 levels");
}

inline void require_horizontal(const RawWeatherGrid& g) {
    if (g.nx() < 2 || g.ny() < 2) throw GeometryError("horizontal derivative needs L, W >= 2");
}

/// d/dz with centered differences inside, one-sided at the top and bottom level.
inline Tensor<double> ddz(const RawWeatherGrid& g, const Tensor<double>& f) {
    require_vertical(g);
    Tensor<double> out(f.shape());
    const std::size_t H = g.nz();
    const auto& z = g.level_heights;
    for (std::size_t i = 0; i < g.nx(); ++i) {
        for (std::size_t j = 0; j < g.ny(); ++j) {
            for (std::size_t k = 0; k < H; ++k) {
                const std::size_t lo = k == 0 ? 0 : k - 1;
                const std::size_t hi = k + 1 == H ? H - 1 : k + 1;
                out[g.index(i, j, k)] = (f[g.index(i, j, hi)] - f[g.index(i, j, lo)]) / (z[hi] - z[lo]);
            }
        }
    }
    return out;
}

/// Derivative along the L (x) or W (y) axis.
inline Tensor<double> ddh(const RawWeatherGrid& g, const Tensor<double>& f, int axis) {
    require_horizontal(g);
    Tensor<double> out(f.shape());
    const std::size_t n = axis == 0 ? g.nx() : g.ny();
    const double step = axis == 0 ? g.cell_dx : g.cell_dy;
    for (std::size_t i = 0; i < g.nx(); ++i) {
        for (std::size_t j = 0; j < g.ny(); ++j) {
            const std::size_t pos = axis == 0 ? i : j;
            const std::size_t lo = pos == 0 ? 0 : pos - 1;
            const std::size_t hi = pos + 1 == n ? n - 1 : pos + 1;
            const double span = static_cast<double>(hi - lo) * step;
            for (std::size_t k = 0; k < g.nz(); ++k) {
                const std::size_t a = axis == 0 ? g.index(lo, j, k) : g.index(i, lo, k);
                const std::size_t b = axis == 0 ? g.index(hi, j, k) : g.index(i, hi, k);
                out[g.index(i, j, k)] = (f[b] - f[a]) / span;
            }
        }
    }
    return out;
}

/// Local vertical spacing used by the Colson-Panofsky index.
inline double layer_depth(const RawWeatherGrid& g, std::size_t k) {
    const std::size_t H = g.nz();
    const std::size_t lo = k == 0 ? 0 : k - 1;
    const std::size_t hi = k + 1 == H ? H - 1 : k + 1;
    return (g.level_heights[hi] - g.level_heights[lo]) / static_cast<double>(hi - lo);
}

} // namespace detail

inline Tensor<double> potential_temperature(const RawWeatherGrid& g) {
    Tensor<double> theta(g.temperature.shape());
    for (std::size_t i = 0; i < theta.size(); ++i) {
        theta[i] = g.temperature[i] * std::pow(kReferencePressure / g.pressure[i], kPoissonExponent);
    }
    return theta;
}

inline Tensor<double> wind_speed(const RawWeatherGrid& g) {
    Tensor<double> out(g.u_wind.shape());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::hypot(g.u_wind[i], g.v_wind[i]);
    return out;
}

inline Tensor<double> vertical_wind_shear(const RawWeatherGrid& g) {
    const auto du = detail::ddz(g, g.u_wind);
    const auto dv = detail::ddz(g, g.v_wind);
    Tensor<double> out(du.shape());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::hypot(du[i], dv[i]);
    return out;
}

/// Gradient Richardson number on potential temperature. Cells where the
/// ratio exceeds ri_max in magnitude (including zero shear) are capped at
/// +-ri_max with the sign of the stability term.
inline Tensor<double> richardson_number(const RawWeatherGrid& g, double ri_max = kDefaultRiMax) {
    const auto theta = potential_temperature(g);
    const auto dtheta = detail::ddz(g, theta);
    const auto du = detail::ddz(g, g.u_wind);
    const auto dv = detail::ddz(g, g.v_wind);
    Tensor<double> out(theta.shape());
    for (std::size_t i = 0; i < out.size(); ++i) {
        const double stability = kGravity / theta[i] * dtheta[i];
        const double shear2 = du[i] * du[i] + dv[i] * dv[i];
        if (stability == 0.0) {
            out[i] = 0.0;
        } else if (shear2 == 0.0 || std::abs(stability) >= ri_max * shear2) {
            out[i] = std::copysign(ri_max, stability);
        } else {
            out[i] = stability / shear2;
        }
    }
    return out;
}

/// Colson-Panofsky index in kt^2.
inline Tensor<double> colson_panofsky(const RawWeatherGrid& g, double ri_crit = 0.5) {
    const auto vws = vertical_wind_shear(g);
    const auto ri = richardson_number(g);
    Tensor<double> out(vws.shape());
    for (std::size_t i = 0; i < g.nx(); ++i) {
        for (std::size_t j = 0; j < g.ny(); ++j) {
            for (std::size_t k = 0; k < g.nz(); ++k) {
                const std::size_t c = g.index(i, j, k);
                const double dv = detail::layer_depth(g, k) * vws[c];
                out[c] = dv * dv * (1.0 - ri[c] / ri_crit) * kKnotsPerMs * kKnotsPerMs;
            }
        }
    }
    return out;
}

/// Total deformation sqrt(DSH^2 + DST^2).
inline Tensor<double> deformation(const RawWeatherGrid& g) {
    const auto dudx = detail::ddh(g, g.u_wind, 0);
    const auto dudy = detail::ddh(g, g.u_wind, 1);
    const auto dvdx = detail::ddh(g, g.v_wind, 0);
    const auto dvdy = detail::ddh(g, g.v_wind, 1);
    Tensor<double> out(dudx.shape());
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = std::hypot(dvdx[i] + dudy[i], dudx[i] - dvdy[i]);
    }
    return out;
}

/// Ellrod TI1 = VWS * DEF, in 1/s^2.
inline Tensor<double> ellrod_ti1(const RawWeatherGrid& g) {
    detail::require_horizontal(g);
    detail::require_vertical(g);
    const auto vws = vertical_wind_shear(g);
    const auto def = deformation(g);
    Tensor<double> out(vws.shape());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = vws[i] * def[i];
    return out;
}

inline Tensor<double> horiz_temp_gradient(const RawWeatherGrid& g) {
    const auto dtdx = detail::ddh(g, g.temperature, 0);
    const auto dtdy = detail::ddh(g, g.temperature, 1);
    Tensor<double> out(dtdx.shape());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::hypot(dtdx[i], dtdy[i]);
    return out;
}

/// MOS CAT probability predictor |v| * DEF, in m/s^2.
inline Tensor<double> mos_cat_predictor(const RawWeatherGrid& g) {
    const auto speed = wind_speed(g);
    const auto def = deformation(g);
    Tensor<double> out(speed.shape());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = speed[i] * def[i];
    return out;
}

/// Raw fields followed by the six derived indexes, as a 12-channel cube.
inline FeatureCube build_feature_cube(const RawWeatherGrid& g, long timestamp, CubeKind kind) {
    g.validate();
    const std::array<Tensor<double>, kNumChannels> channels = {
        g.u_wind, g.v_wind, g.temperature, g.rel_humidity, g.vertical_velocity, g.pressure,
        richardson_number(g), colson_panofsky(g), ellrod_ti1(g), wind_speed(g), horiz_temp_gradient(g),
        mos_cat_predictor(g)};
    const std::size_t cells = g.u_wind.size();
    FeatureCube cube;
    cube.timestamp = timestamp;
    cube.kind = kind;
    cube.data = Tensor<float>({g.nx(), g.ny(), g.nz(), kNumChannels});
    for (std::size_t ch = 0; ch < kNumChannels; ++ch) {
        for (std::size_t c = 0; c < cells; ++c) {
            const double v = channels[ch][c];
            if (!std::isfinite(v)) {
                throw NumericalError(std::string("non-finite ") + kChannelNames[ch] + " at cell " + std::to_string(c) +
                                     " (hour " + std::to_string(timestamp) + ")");
            }
            cube.data[c * kNumChannels + ch] = static_cast<float>(v);
        }
    }
    return cube;
}

} // namespace t2net::indexes
