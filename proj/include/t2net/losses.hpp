#pragma once

#include <t2net/dlg.hpp>
#include <t2net/error.hpp>
#include <t2net/grid.hpp>
#include <t2net/tensor.hpp>

#include <array>
#include <cmath>
#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

namespace t2net::losses {

using Probs = std::array<double, kNumClasses>;

struct LossConfig {
    double gamma = 2.0;
    double lambda = 0.4;
    double epsilon = 1e-8;

    void validate() const {
        if (!(gamma >= 0.0)) throw ConfigError("loss: gamma must be >= 0");
        if (!(lambda >= 0.0 && lambda <= 1.0)) throw ConfigError("loss: lambda must lie in [0, 1]");
        if (!(epsilon > 0.0 && epsilon < 1e-2)) throw ConfigError("loss: epsilon must be a small positive clamp");
    }
};

/// Normalized inverse class frequency weights.
struct ClassWeights {
    Probs alpha{0.25, 0.25, 0.25, 0.25};
    std::array<std::int64_t, kNumClasses> counts{1, 1, 1, 1};
    std::int64_t total = 4;

    static ClassWeights uniform() { return {}; }

    /// alpha_i = (N/N_i) / sum_j (N/N_j). Every count must be positive.
    static ClassWeights from_counts(const std::array<std::int64_t, kNumClasses>& counts) {
        ClassWeights w;
        w.counts = counts;
        w.total = 0;
        for (std::size_t i = 0; i < kNumClasses; ++i) {
            if (counts[i] <= 0) {
                throw ConfigError(std::string("class weights: class ") + kClassNames[i] +
                                  " has no labeled training cells; enable add-one count smoothing");
            }
            w.total += counts[i];
        }
        double sum = 0.0;
        for (std::size_t i = 0; i < kNumClasses; ++i) {
            sum += (w.alpha[i] = static_cast<double>(w.total) / static_cast<double>(counts[i]));
        }
        for (auto& a : w.alpha) a /= sum;
        return w;
    }
};

/// Class weights from the labeled cells of a label-cube collection.
/// With `add_one_smoothing`, every count is incremented and a warning printed
/// when some class is missing.
inline ClassWeights class_weights(const std::vector<LabelCube>& cubes, bool add_one_smoothing = false) {
    std::array<std::int64_t, kNumClasses> counts{};
    for (const auto& cube : cubes) {
        cube.validate();
        for (std::size_t i = 0; i < cube.cells(); ++i) {
            if (cube.labels[i] >= 0) ++counts[static_cast<std::size_t>(cube.labels[i])];
        }
    }
    if (add_one_smoothing) {
        bool missing = false;
        for (auto& c : counts) {
            missing = missing || c == 0;
            ++c;
        }
        if (missing) std::cerr << "warning: a turbulence class is absent from the training labels; using add-one smoothing\n";
    }
    return ClassWeights::from_counts(counts);
}

namespace detail {

/// Focal term and its derivative w.r.t. the true-class probability.
inline std::pair<double, double> focal_term(double p, double gamma, double eps) {
    if (p < eps) {
        return {-std::pow(1.0 - eps, gamma) * std::log(eps), 0.0};
    }
    const double q = 1.0 - p;
    const double logp = std::log(p);
    const double mod = gamma == 0.0 ? 1.0 : std::pow(q, gamma);
    double grad = -mod / p;
    if (gamma != 0.0 && q > 0.0) grad += gamma * std::pow(q, gamma - 1.0) * logp;
    return {-mod * logp, grad};
}

inline double weighted_l2(const Probs& p, const Probs& y, const Probs& alpha) {
    double s = 0.0;
    for (std::size_t i = 0; i < kNumClasses; ++i) s += alpha[i] * (p[i] - y[i]) * (p[i] - y[i]);
    return std::sqrt(s);
}

} // namespace detail

/// -sum_i I(y_i = 1) (1 - p_i)^gamma log p_i, probabilities clamped at epsilon.
inline double focal_loss(const ClassDistribution& pred, const Probs& one_hot_label, double gamma,
                         double epsilon = 1e-8) {
    int ones = 0;
    std::size_t hot = 0;
    for (std::size_t i = 0; i < kNumClasses; ++i) {
        if (one_hot_label[i] == 1.0) {
            ++ones;
            hot = i;
        } else if (one_hot_label[i] != 0.0) {
            ones = -1;
            break;
        }
    }
    if (ones != 1) throw UsageError("focal_loss: label must be one-hot");
    return detail::focal_term(pred[hot], gamma, epsilon).first;
}

/// sqrt(sum_i alpha_i (p_i - y_i)^2).
inline double weighted_l2(const ClassDistribution& pred, const ClassDistribution& target, const ClassWeights& weights) {
    return detail::weighted_l2(pred.probs(), target.probs(), weights.alpha);
}

/// L = L_s + lambda L_u.
inline double total_loss(double supervised, double unsupervised, double lambda) {
    if (!(lambda >= 0.0 && lambda <= 1.0)) throw ConfigError("total_loss: lambda must lie in [0, 1]");
    return supervised + lambda * unsupervised;
}

/// Per-sample loss contributions. `scale` multiplies both value and gradient
/// so a batch caller passes 1/(|B||T|). Gradients are accumulated into
/// `grad` (same shape as the predictions) when non-null.

/// Focal loss, mean over labeled cells of each forecast step, summed over steps.
template <typename S>
double supervised_loss_sample(const Tensor<S>& pred, const std::vector<LabelCube>& targets, const LossConfig& cfg,
                              double scale = 1.0, Tensor<S>* grad = nullptr) {
    const std::size_t steps = targets.size();
    if (steps == 0 || pred.size() % (steps * kNumClasses) != 0) {
        throw StructuralError("supervised_loss: prediction shape does not match label cubes");
    }
    const std::size_t cells = pred.size() / (steps * kNumClasses);
    double total = 0.0;
    for (std::size_t t = 0; t < steps; ++t) {
        if (targets[t].cells() != cells) throw StructuralError("supervised_loss: label cube size mismatch");
        std::size_t count = 0;
        for (std::size_t c = 0; c < cells; ++c) count += targets[t].labels[c] >= 0;
        if (count == 0) continue;
        const double w = scale / static_cast<double>(count);
        double sum = 0.0;
        for (std::size_t c = 0; c < cells; ++c) {
            const int y = targets[t].labels[c];
            if (y < 0) continue;
            const std::size_t at = (t * cells + c) * kNumClasses + static_cast<std::size_t>(y);
            const auto [value, d] = detail::focal_term(static_cast<double>(pred[at]), cfg.gamma, cfg.epsilon);
            sum += value;
            if (grad) (*grad)[at] += static_cast<S>(w * d);
        }
        total += w * sum;
    }
    return total;
}

/// Quality-weighted weighted-L2 to the pseudo-labels, mean over unlabeled
/// cells of each step, summed over steps.
template <typename S>
double unsupervised_loss_sample(const Tensor<S>& pred, const dlg::PseudoLabelBatch<S>& pseudo,
                                const std::vector<LabelCube>& targets, const ClassWeights& weights,
                                double scale = 1.0, Tensor<S>* grad = nullptr) {
    require_same_shape(pred.shape(), pseudo.labels.shape(), "unsupervised_loss: predictions vs pseudo-labels");
    const std::size_t steps = targets.size();
    const std::size_t cells = pred.size() / (steps * kNumClasses);
    double total = 0.0;
    for (std::size_t t = 0; t < steps; ++t) {
        std::size_t count = 0;
        for (std::size_t c = 0; c < cells; ++c) count += targets[t].labels[c] == kUnknownLabel;
        if (count == 0) continue;
        const double w = scale / static_cast<double>(count);
        double sum = 0.0;
        for (std::size_t c = 0; c < cells; ++c) {
            if (targets[t].labels[c] != kUnknownLabel) continue;
            const std::size_t row = t * cells + c;
            Probs p{}, y{};
            for (std::size_t k = 0; k < kNumClasses; ++k) {
                p[k] = static_cast<double>(pred[row * kNumClasses + k]);
                y[k] = static_cast<double>(pseudo.labels[row * kNumClasses + k]);
            }
            const double q = static_cast<double>(pseudo.quality[row]);
            const double dist = detail::weighted_l2(p, y, weights.alpha);
            sum += q * dist;
            if (grad && dist > 0.0) {
                for (std::size_t k = 0; k < kNumClasses; ++k) {
                    (*grad)[row * kNumClasses + k] += static_cast<S>(w * q * weights.alpha[k] * (p[k] - y[k]) / dist);
                }
            }
        }
        total += w * sum;
    }
    return total;
}

/// Cross-entropy on one-hot self-labels for unlabeled cells whose top
/// probability reaches `threshold`; mean over qualifying cells per step.
template <typename S>
double hard_pseudo_loss_sample(const Tensor<S>& pred, const std::vector<LabelCube>& targets, double threshold,
                               const LossConfig& cfg, double scale = 1.0, Tensor<S>* grad = nullptr,
                               std::size_t* selected = nullptr) {
    const std::size_t steps = targets.size();
    const std::size_t cells = pred.size() / (steps * kNumClasses);
    double total = 0.0;
    for (std::size_t t = 0; t < steps; ++t) {
        std::vector<std::pair<std::size_t, std::size_t>> chosen;
        for (std::size_t c = 0; c < cells; ++c) {
            if (targets[t].labels[c] != kUnknownLabel) continue;
            const std::size_t row = t * cells + c;
            std::size_t best = 0;
            for (std::size_t k = 1; k < kNumClasses; ++k) {
                if (pred[row * kNumClasses + k] > pred[row * kNumClasses + best]) best = k;
            }
            if (static_cast<double>(pred[row * kNumClasses + best]) >= threshold) chosen.emplace_back(row, best);
        }
        if (selected) *selected += chosen.size();
        if (chosen.empty()) continue;
        const double w = scale / static_cast<double>(chosen.size());
        double sum = 0.0;
        for (const auto& [row, k] : chosen) {
            const std::size_t at = row * kNumClasses + k;
            const auto [value, d] = detail::focal_term(static_cast<double>(pred[at]), 0.0, cfg.epsilon);
            sum += value;
            if (grad) (*grad)[at] += static_cast<S>(w * d);
        }
        total += w * sum;
    }
    return total;
}

/// Batch means with the 1/(|B||T|) normalisation.
template <typename S>
double supervised_loss(const std::vector<Tensor<S>>& preds, const std::vector<std::vector<LabelCube>>& targets,
                       const LossConfig& cfg) {
    if (preds.size() != targets.size()) throw StructuralError("supervised_loss: batch size mismatch");
    if (preds.empty()) return 0.0;
    const double scale = 1.0 / static_cast<double>(preds.size() * targets.front().size());
    double total = 0.0;
    for (std::size_t b = 0; b < preds.size(); ++b) total += supervised_loss_sample(preds[b], targets[b], cfg, scale);
    return total;
}

template <typename S>
double unsupervised_loss(const std::vector<Tensor<S>>& preds, const std::vector<dlg::PseudoLabelBatch<S>>& pseudo,
                         const std::vector<std::vector<LabelCube>>& targets, const ClassWeights& weights) {
    if (preds.size() != targets.size() || preds.size() != pseudo.size()) {
        throw StructuralError("unsupervised_loss: batch size mismatch");
    }
    if (preds.empty()) return 0.0;
    const double scale = 1.0 / static_cast<double>(preds.size() * targets.front().size());
    double total = 0.0;
    for (std::size_t b = 0; b < preds.size(); ++b) {
        total += unsupervised_loss_sample(preds[b], pseudo[b], targets[b], weights, scale);
    }
    return total;
}

} // namespace t2net::losses
