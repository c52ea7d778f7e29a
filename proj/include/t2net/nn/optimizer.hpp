#pragma once

#include <t2net/error.hpp>
#include <t2net/nn/ops.hpp>

#include <cmath>
#include <string>

namespace t2net::nn {

enum class OptimizerKind { Adam, Sgd };

inline const char* to_string(OptimizerKind k) { return k == OptimizerKind::Adam ? "adam" : "sgd"; }

inline OptimizerKind optimizer_from_string(const std::string& s) {
    if (s == "adam") return OptimizerKind::Adam;
    if (s == "sgd") return OptimizerKind::Sgd;
    throw ConfigError("unknown optimizer '" + s + "' (expected adam or sgd)");
}

struct OptimizerConfig {
    OptimizerKind kind = OptimizerKind::Adam;
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;

    void validate() const {
        if (!(learning_rate > 0.0)) throw ConfigError("optimizer: learning rate must be > 0");
        if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
            throw ConfigError("optimizer: moment decay rates must lie in [0, 1)");
        }
        if (!(epsilon > 0.0)) throw ConfigError("optimizer: epsilon must be > 0");
    }
};

/// Adam or plain gradient descent over any visit()-able parameter struct.
/// Moments are stored as parameter-shaped copies so they checkpoint the same way.
template <typename Params>
class Optimizer {
public:
    Optimizer() = default;
    Optimizer(const OptimizerConfig& config, const Params& like) : config_(config), m_(like), v_(like) {
        config_.validate();
        zero_parameters(m_);
        zero_parameters(v_);
    }

    void step(Params& params, const Params& grads) {
        ++steps_;
        auto p = named_tensors(params);
        auto g = named_tensors(grads);
        auto m = named_tensors(m_);
        auto v = named_tensors(v_);
        if (p.size() != g.size() || p.size() != m.size()) throw StructuralError("optimizer: parameter layout changed");
        using S = typename Params::tensor_type::value_type;
        const double lr = config_.learning_rate;
        const double b1 = config_.beta1, b2 = config_.beta2;
        const double c1 = 1.0 - std::pow(b1, static_cast<double>(steps_));
        const double c2 = 1.0 - std::pow(b2, static_cast<double>(steps_));
        for (std::size_t t = 0; t < p.size(); ++t) {
            S* w = p[t].second->data();
            const S* d = g[t].second->data();
            const std::size_t n = p[t].second->size();
            if (g[t].second->size() != n) throw StructuralError("optimizer: gradient shape mismatch for " + p[t].first);
            if (config_.kind == OptimizerKind::Sgd) {
                for (std::size_t i = 0; i < n; ++i) w[i] -= static_cast<S>(lr * d[i]);
                continue;
            }
            S* mm = m[t].second->data();
            S* vv = v[t].second->data();
            for (std::size_t i = 0; i < n; ++i) {
                mm[i] = static_cast<S>(b1 * mm[i] + (1.0 - b1) * d[i]);
                vv[i] = static_cast<S>(b2 * vv[i] + (1.0 - b2) * d[i] * d[i]);
                const double mhat = mm[i] / c1;
                const double vhat = vv[i] / c2;
                w[i] -= static_cast<S>(lr * mhat / (std::sqrt(vhat) + config_.epsilon));
            }
        }
    }

    const OptimizerConfig& config() const noexcept { return config_; }
    long steps() const noexcept { return steps_; }
    void set_steps(long s) { steps_ = s; }
    Params& first_moment() noexcept { return m_; }
    Params& second_moment() noexcept { return v_; }
    const Params& first_moment() const noexcept { return m_; }
    const Params& second_moment() const noexcept { return v_; }

private:
    OptimizerConfig config_;
    Params m_;
    Params v_;
    long steps_ = 0;
};

} // namespace t2net::nn
