#pragma once

#include <t2net/error.hpp>
#include <t2net/grid.hpp>
#include <t2net/rng.hpp>
#include <t2net/tensor.hpp>

#include <array>
#include <cmath>
#include <vector>

namespace t2net::dlg {

using Probs = std::array<double, kNumClasses>;

inline constexpr double kKlEpsilon = 1e-8;

/// Dynamic-ensemble schedule state. `epoch` drives tau; `rng` is the single
/// run-level stream every binary sample draws from.
struct DlgSchedule {
    long epoch = 0;
    long t1 = 5;
    long t2 = 15;
    double beta = 0.6;
    RandomStream rng{0};

    void validate() const {
        if (t1 < 1 || t2 < 1) throw ConfigError("DLG: T1 and T2 must be positive");
        if (t1 >= t2) throw ConfigError("DLG: T1 must be smaller than T2");
        if (!(beta > 0.0 && beta <= 1.0)) throw ConfigError("DLG: beta must lie in (0, 1]");
        if (epoch < 0) throw ConfigError("DLG: epoch must be non-negative");
    }
};

/// Probability of drawing the TFN prediction: 0 before T1, linear ramp to beta at T2, beta after.
inline double tau(const DlgSchedule& s) {
    s.validate();
    if (s.epoch < s.t1) return 0.0;
    if (s.epoch > s.t2) return s.beta;
    return static_cast<double>(s.epoch - s.t1) / static_cast<double>(s.t2 - s.t1) * s.beta;
}

namespace detail {

inline Probs sharpen(const Probs& p, double temperature) {
    if (!(temperature > 0.0)) throw ConfigError("sharpen: temperature must be > 0");
    Probs out{};
    double sum = 0.0;
    for (std::size_t i = 0; i < kNumClasses; ++i) sum += (out[i] = std::pow(p[i], 1.0 / temperature));
    if (!(sum > 0.0)) throw ValidationError("sharpen: degenerate all-zero distribution");
    for (auto& v : out) v /= sum;
    return out;
}

inline double kl_divergence(const Probs& p, const Probs& q) {
    double kl = 0.0;
    for (std::size_t i = 0; i < kNumClasses; ++i) {
        if (p[i] <= 0.0) continue;
        kl += p[i] * std::log(p[i] / std::max(q[i], kKlEpsilon));
    }
    return kl;
}

inline double label_quality(const Probs& p_tdn, const Probs& p_tfn) {
    return std::exp(-std::max(0.0, kl_divergence(p_tdn, p_tfn)));
}

} // namespace detail

/// Binary sampling with an explicit draw r in [0,1]: TDN if r > tau, else TFN.
inline const ClassDistribution& binary_sample(const ClassDistribution& p_tdn, const ClassDistribution& p_tfn,
                                              double tau_value, double r) {
    return r > tau_value ? p_tdn : p_tfn;
}

/// Binary sampling consuming one draw in (0,1] from the schedule's stream.
inline ClassDistribution binary_sample(const ClassDistribution& p_tdn, const ClassDistribution& p_tfn,
                                       DlgSchedule& schedule) {
    const double t = tau(schedule);
    return binary_sample(p_tdn, p_tfn, t, schedule.rng.uniform_open_closed());
}

/// Mean of two binary samples taken with the draws r1, r2.
inline ClassDistribution dual_ensemble(const ClassDistribution& p_tdn, const ClassDistribution& p_tfn,
                                       double tau_value, double r1, double r2) {
    const auto& a = binary_sample(p_tdn, p_tfn, tau_value, r1);
    const auto& b = binary_sample(p_tdn, p_tfn, tau_value, r2);
    if (&a == &b) return a;
    Probs mean{};
    for (std::size_t i = 0; i < kNumClasses; ++i) mean[i] = 0.5 * (a[i] + b[i]);
    return ClassDistribution(mean);
}

inline ClassDistribution dual_ensemble(const ClassDistribution& p_tdn, const ClassDistribution& p_tfn,
                                       DlgSchedule& schedule) {
    const double t = tau(schedule);
    const double r1 = schedule.rng.uniform_open_closed();
    const double r2 = schedule.rng.uniform_open_closed();
    return dual_ensemble(p_tdn, p_tfn, t, r1, r2);
}

/// p_i^(1/T) / sum_j p_j^(1/T).
inline ClassDistribution sharpen(const ClassDistribution& p, double temperature) {
    return ClassDistribution(detail::sharpen(p.probs(), temperature));
}

/// exp(-KL(p_tdn || p_tfn)), with p_tfn clamped at 1e-8 and 0 log 0 = 0.
inline double label_quality(const ClassDistribution& p_tdn, const ClassDistribution& p_tfn) {
    return detail::label_quality(p_tdn.probs(), p_tfn.probs());
}

/// Sharpened soft pseudo-labels [p,L,W,H,4] and quality scores [p,L,W,H].
/// Both are zero on labeled cells and are plain data (no gradient path).
template <typename S>
struct PseudoLabelBatch {
    Tensor<S> labels;
    Tensor<S> quality;
    std::size_t unlabeled_cells = 0;
};

/// Dual label guessing for one sample. P_tdn and P_tfn are [p,L,W,H,4];
/// `targets` supplies the masks (length p). Draws are taken per unlabeled cell
/// in step-major, cell-minor order, two per cell.
template <typename S>
PseudoLabelBatch<S> guess_labels(const Tensor<S>& p_tdn, const Tensor<S>& p_tfn, const std::vector<LabelCube>& targets,
                                 DlgSchedule& schedule, double temperature) {
    require_same_shape(p_tdn.shape(), p_tfn.shape(), "guess_labels: TDN vs TFN predictions");
    if (p_tdn.rank() != 5 || p_tdn.dim(4) != kNumClasses || p_tdn.dim(0) != targets.size()) {
        throw StructuralError("guess_labels: predictions must be [p,L,W,H,4] with p = number of label cubes");
    }
    if (!(temperature > 0.0)) throw ConfigError("sharpen: temperature must be > 0");
    const double t = tau(schedule);
    const std::size_t cells = p_tdn.size() / (targets.size() * kNumClasses);
    Shape qshape(p_tdn.shape().begin(), p_tdn.shape().end() - 1);
    PseudoLabelBatch<S> out{Tensor<S>(p_tdn.shape(), S{0}), Tensor<S>(qshape, S{0}), 0};
    for (std::size_t step = 0; step < targets.size(); ++step) {
        if (targets[step].cells() != cells) throw StructuralError("guess_labels: label cube size mismatch");
        for (std::size_t cell = 0; cell < cells; ++cell) {
            if (targets[step].labels[cell] != kUnknownLabel) continue;
            const std::size_t row = step * cells + cell;
            Probs a{}, b{};
            for (std::size_t k = 0; k < kNumClasses; ++k) {
                a[k] = static_cast<double>(p_tdn[row * kNumClasses + k]);
                b[k] = static_cast<double>(p_tfn[row * kNumClasses + k]);
            }
            const double r1 = schedule.rng.uniform_open_closed();
            const double r2 = schedule.rng.uniform_open_closed();
            const Probs& s1 = r1 > t ? a : b;
            const Probs& s2 = r2 > t ? a : b;
            Probs mean{};
            for (std::size_t k = 0; k < kNumClasses; ++k) mean[k] = 0.5 * (s1[k] + s2[k]);
            const Probs sharp = detail::sharpen(mean, temperature);
            for (std::size_t k = 0; k < kNumClasses; ++k) out.labels[row * kNumClasses + k] = static_cast<S>(sharp[k]);
            out.quality[row] = static_cast<S>(detail::label_quality(a, b));
            ++out.unlabeled_cells;
        }
    }
    return out;
}

} // namespace t2net::dlg
