#pragma once

// Desk-scale synthetic turbulence scenarios with a sparse label reveal.

#include <t2net/datapipe.hpp>
#include <t2net/error.hpp>
#include <t2net/grid.hpp>
#include <t2net/indexes.hpp>
#include <t2net/rng.hpp>

#include <array>
#include <cmath>
#include <string>
#include <vector>

namespace t2net::data {

struct SyntheticConfig {
    std::uint64_t seed = 7;
    std::size_t hours = 512;
    double label_rate = 0.02;       ///< probability that a cell-hour label is revealed
    double smoothness = 3.0;        ///< horizontal correlation length, grid cells
    double vertical_smoothness = 1.0;
    double time_correlation = 6.0;  ///< e-folding time of the AR(1) fields, hours
    std::array<double, 3> thresholds{0.4, 1.0, 1.5};  ///< on the standardized latent score
    double noise = 0.3;             ///< NWP forecast error, relative to field variability
    std::size_t length = 10;
    std::size_t width = 10;
    std::vector<double> level_heights_ft{30000, 31500, 33000, 34500, 36000, 37500, 39000};
    double cell_spacing = indexes::kDefaultCellSpacing;

    void validate(const RegionSpec& region) const {
        if (!(label_rate > 0.0 && label_rate <= 1.0)) throw ConfigError("synthetic: label_rate must lie in (0, 1]");
        if (hours < region.history_len + region.horizon_len) {
            throw ConfigError("synthetic: hours must be at least n+p = " +
                              std::to_string(region.history_len + region.horizon_len));
        }
        if (!(thresholds[0] < thresholds[1] && thresholds[1] < thresholds[2])) {
            throw ConfigError("synthetic: class thresholds must be strictly increasing");
        }
        if (!(smoothness > 0.0) || !(vertical_smoothness > 0.0)) throw ConfigError("synthetic: smoothness must be > 0");
        if (!(time_correlation > 0.0)) throw ConfigError("synthetic: time_correlation must be > 0");
        if (!(noise >= 0.0)) throw ConfigError("synthetic: noise must be >= 0");
        if (length < 2 || width < 2 || level_heights_ft.size() < 2) throw ConfigError("synthetic: grid too small");
        for (std::size_t k = 1; k < level_heights_ft.size(); ++k) {
            if (!(level_heights_ft[k] > level_heights_ft[k - 1])) {
                throw ConfigError("synthetic: level heights must be strictly increasing");
            }
        }
    }
};

namespace detail {

inline std::vector<double> gaussian_kernel(double sigma) {
    const int radius = std::max(1, static_cast<int>(std::ceil(2.5 * sigma)));
    std::vector<double> w(static_cast<std::size_t>(2 * radius + 1));
    double sum = 0.0;
    for (int d = -radius; d <= radius; ++d) sum += (w[static_cast<std::size_t>(d + radius)] = std::exp(-0.5 * d * d / (sigma * sigma)));
    for (auto& v : w) v /= sum;
    return w;
}

/// Separable Gaussian blur of an [L,W,H] field, reflecting at the borders.
inline void blur_axis(Tensor<double>& f, const std::vector<double>& w, int axis) {
    const std::array<std::size_t, 3> dims{f.dim(0), f.dim(1), f.dim(2)};
    const std::array<std::size_t, 3> stride{dims[1] * dims[2], dims[2], 1};
    const int radius = static_cast<int>(w.size() / 2);
    const int n = static_cast<int>(dims[static_cast<std::size_t>(axis)]);
    auto reflect = [n](int i) {
        if (n == 1) return 0;
        while (i < 0 || i >= n) i = i < 0 ? -i - 1 : 2 * n - i - 1;
        return i;
    };
    Tensor<double> out(f.shape(), 0.0);
    for (std::size_t i = 0; i < dims[0]; ++i) {
        for (std::size_t j = 0; j < dims[1]; ++j) {
            for (std::size_t k = 0; k < dims[2]; ++k) {
                const std::array<std::size_t, 3> pos{i, j, k};
                const std::size_t base = i * stride[0] + j * stride[1] + k - pos[static_cast<std::size_t>(axis)] * stride[static_cast<std::size_t>(axis)];
                double acc = 0.0;
                for (int d = -radius; d <= radius; ++d) {
                    const int src = reflect(static_cast<int>(pos[static_cast<std::size_t>(axis)]) + d);
                    acc += w[static_cast<std::size_t>(d + radius)] * f[base + static_cast<std::size_t>(src) * stride[static_cast<std::size_t>(axis)]];
                }
                out[i * stride[0] + j * stride[1] + k] = acc;
            }
        }
    }
    f = std::move(out);
}

/// Spatially correlated noise rescaled to unit RMS per draw.
class SmoothNoise {
public:
    SmoothNoise(double sigma_h, double sigma_v) : wh_(gaussian_kernel(sigma_h)), wv_(gaussian_kernel(sigma_v)) {}

    Tensor<double> draw(const Shape& shape, RandomStream& rng) const {
        Tensor<double> f(shape);
        for (auto& v : f.values()) v = rng.normal();
        blur_axis(f, wh_, 0);
        blur_axis(f, wh_, 1);
        blur_axis(f, wv_, 2);
        double sq = 0.0;
        for (double v : f.values()) sq += v * v;
        const double gain = sq > 0.0 ? std::sqrt(static_cast<double>(f.size()) / sq) : 1.0;
        for (auto& v : f.values()) v *= gain;
        return f;
    }

private:
    std::vector<double> wh_, wv_;
};

inline constexpr std::size_t kRawFields = 6;

/// Physical fields from unit-variance perturbations (u, v, T, RH, omega, P order).
inline indexes::RawWeatherGrid make_grid(const std::array<Tensor<double>, kRawFields>& pert,
                                         const SyntheticConfig& cfg) {
    const std::size_t H = cfg.level_heights_ft.size();
    indexes::RawWeatherGrid g = indexes::RawWeatherGrid::blank(cfg.length, cfg.width, H);
    g.cell_dx = g.cell_dy = cfg.cell_spacing;
    g.level_heights.clear();
    for (double ft : cfg.level_heights_ft) g.level_heights.push_back(ft / kFeetPerMetre);
    const double z0 = g.level_heights.front();
    for (std::size_t c = 0; c < g.u_wind.size(); ++c) {
        const double z = g.level_heights[c % H];
        double u = 20.0 + 12.0 * pert[0][c];
        double v = 8.0 * pert[1][c];
        const double speed = std::hypot(u, v);
        if (speed > 80.0) u *= 80.0 / speed, v *= 80.0 / speed;
        g.u_wind[c] = u;
        g.v_wind[c] = v;
        g.temperature[c] = std::clamp(229.0 - 0.0065 * (z - z0) + 1.5 * pert[2][c], 200.0, 310.0);
        g.rel_humidity[c] = std::clamp(45.0 + 20.0 * pert[3][c], 1.0, 100.0);
        g.vertical_velocity[c] = 0.4 * pert[4][c];
        g.pressure[c] = 30090.0 * std::exp(-(z - z0) / 6500.0) + 60.0 * pert[5][c];
    }
    return g;
}

inline double mean_of(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

inline double std_of(const std::vector<double>& v, double mean) {
    double s = 0.0;
    for (double x : v) s += (x - mean) * (x - mean);
    const double sd = std::sqrt(s / static_cast<double>(v.size()));
    return sd > 0.0 ? sd : 1.0;
}

} // namespace detail

/// Per-class share of the dense hidden truth.
inline std::array<double, kNumClasses> class_marginals(const std::vector<LabelCube>& cubes) {
    std::array<double, kNumClasses> share{};
    double total = 0.0;
    for (const auto& c : cubes) {
        for (auto v : c.labels.values()) {
            if (v >= 0) share[static_cast<std::size_t>(v)] += 1.0, total += 1.0;
        }
    }
    if (total > 0.0) {
        for (auto& s : share) s /= total;
    }
    return share;
}

/// Hourly raw analysis/NWP grids with sparse labels and the dense hidden truth.
/// Throws ValidationError when the truth misses a class or Negative is not the majority.
inline RawHourlyData generate_synthetic(const SyntheticConfig& cfg, const RegionSpec& region) {
    cfg.validate(region);
    const Shape shape{cfg.length, cfg.width, cfg.level_heights_ft.size()};
    const detail::SmoothNoise noise(cfg.smoothness, cfg.vertical_smoothness);
    RandomStream field_rng(cfg.seed);
    RandomStream nwp_rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
    RandomStream reveal_rng(cfg.seed ^ 0xc2b2ae3d27d4eb4fULL);
    const double phi = std::exp(-1.0 / cfg.time_correlation);
    const double innovation = std::sqrt(1.0 - phi * phi);

    RawHourlyData raw;
    raw.first_hour = 0;
    std::array<Tensor<double>, detail::kRawFields> state;
    for (auto& s : state) s = noise.draw(shape, field_rng);
    for (std::size_t t = 0; t < cfg.hours; ++t) {
        if (t > 0) {
            for (auto& s : state) {
                const auto eta = noise.draw(shape, field_rng);
                for (std::size_t c = 0; c < s.size(); ++c) s[c] = phi * s[c] + innovation * eta[c];
            }
        }
        std::array<Tensor<double>, detail::kRawFields> forecast = state;
        for (auto& f : forecast) {
            const auto err = noise.draw(shape, nwp_rng);
            for (std::size_t c = 0; c < f.size(); ++c) f[c] += cfg.noise * err[c];
        }
        raw.analysis.push_back(detail::make_grid(state, cfg));
        raw.nwp.push_back(detail::make_grid(forecast, cfg));
    }

    // Latent instability: low Richardson number, strong shear and vertical motion.
    const std::size_t cells = shape_volume(shape);
    std::vector<double> ri_term, shear_term, omega_term;
    ri_term.reserve(cells * cfg.hours);
    shear_term.reserve(cells * cfg.hours);
    omega_term.reserve(cells * cfg.hours);
    for (const auto& g : raw.analysis) {
        const auto ri = indexes::richardson_number(g);
        const auto shear = indexes::vertical_wind_shear(g);
        for (std::size_t c = 0; c < cells; ++c) {
            ri_term.push_back(-std::asinh(ri[c]));
            shear_term.push_back(shear[c]);
            omega_term.push_back(std::abs(g.vertical_velocity[c]));
        }
    }
    std::vector<double> score(ri_term.size());
    {
        const double m1 = detail::mean_of(ri_term), s1 = detail::std_of(ri_term, m1);
        const double m2 = detail::mean_of(shear_term), s2 = detail::std_of(shear_term, m2);
        const double m3 = detail::mean_of(omega_term), s3 = detail::std_of(omega_term, m3);
        for (std::size_t i = 0; i < score.size(); ++i) {
            score[i] = (ri_term[i] - m1) / s1 + (shear_term[i] - m2) / s2 + 0.5 * (omega_term[i] - m3) / s3;
        }
        const double m = detail::mean_of(score), s = detail::std_of(score, m);
        for (auto& v : score) v = (v - m) / s;
    }
    for (std::size_t t = 0; t < cfg.hours; ++t) {
        LabelCube truth{Tensor<std::int8_t>(shape, 0), static_cast<long>(t)};
        LabelCube revealed{Tensor<std::int8_t>(shape, kUnknownLabel), static_cast<long>(t)};
        for (std::size_t c = 0; c < cells; ++c) {
            const double s = score[t * cells + c];
            std::int8_t cls = 0;
            for (double th : cfg.thresholds) cls += s >= th;
            truth.labels[c] = cls;
            if (reveal_rng.uniform() < cfg.label_rate) revealed.labels[c] = cls;
        }
        raw.truth.push_back(std::move(truth));
        raw.labels.push_back(std::move(revealed));
    }

    const auto share = class_marginals(raw.truth);
    for (std::size_t k = 0; k < kNumClasses; ++k) {
        if (!(share[k] > 0.0)) {
            throw ValidationError(std::string("synthetic: hidden truth has no ") + kClassNames[k] + " cells");
        }
        if (k > 0 && share[k] >= share[0]) throw ValidationError("synthetic: Negative is not the majority class");
    }
    return raw;
}

} // namespace t2net::data
