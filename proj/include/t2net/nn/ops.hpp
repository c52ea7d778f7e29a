#pragma once

#include <t2net/error.hpp>
#include <t2net/grid.hpp>
#include <t2net/tensor.hpp>

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

namespace t2net::nn {

template <typename S>
inline S sigmoid(S x) {
    return x >= S{0} ? S{1} / (S{1} + std::exp(-x)) : std::exp(x) / (S{1} + std::exp(x));
}

/// Row-wise softmax over the trailing 4-class axis.
template <typename S>
Tensor<S> softmax_classes(const Tensor<S>& logits) {
    Tensor<S> out(logits.shape());
    const std::size_t rows = logits.size() / kNumClasses;
    for (std::size_t r = 0; r < rows; ++r) {
        const S* z = logits.data() + r * kNumClasses;
        S* p = out.data() + r * kNumClasses;
        const S m = *std::max_element(z, z + kNumClasses);
        S sum{0};
        for (std::size_t c = 0; c < kNumClasses; ++c) sum += (p[c] = std::exp(z[c] - m));
        for (std::size_t c = 0; c < kNumClasses; ++c) p[c] /= sum;
    }
    return out;
}

/// Softmax Jacobian-vector product: dz = p * (dp - <dp, p>).
template <typename S>
Tensor<S> softmax_classes_backward(const Tensor<S>& probs, const Tensor<S>& dprobs) {
    Tensor<S> dz(probs.shape());
    const std::size_t rows = probs.size() / kNumClasses;
    for (std::size_t r = 0; r < rows; ++r) {
        const S* p = probs.data() + r * kNumClasses;
        const S* dp = dprobs.data() + r * kNumClasses;
        S dot{0};
        for (std::size_t c = 0; c < kNumClasses; ++c) dot += dp[c] * p[c];
        for (std::size_t c = 0; c < kNumClasses; ++c) dz[r * kNumClasses + c] = p[c] * (dp[c] - dot);
    }
    return dz;
}

/// Flat list of (name, tensor) pointers for any parameter struct with visit().
template <typename Params>
std::vector<std::pair<std::string, typename Params::tensor_type*>> named_tensors(Params& params) {
    std::vector<std::pair<std::string, typename Params::tensor_type*>> out;
    params.visit("", [&](const std::string& name, typename Params::tensor_type& t) { out.emplace_back(name, &t); });
    return out;
}

template <typename Params>
std::vector<std::pair<std::string, const typename Params::tensor_type*>> named_tensors(const Params& params) {
    std::vector<std::pair<std::string, const typename Params::tensor_type*>> out;
    params.visit("", [&](const std::string& name, const typename Params::tensor_type& t) { out.emplace_back(name, &t); });
    return out;
}

template <typename Params>
void zero_parameters(Params& params) {
    params.visit("", [](const std::string&, auto& t) { t.fill(0); });
}

template <typename Params>
std::size_t parameter_count(const Params& params) {
    std::size_t n = 0;
    params.visit("", [&](const std::string&, const auto& t) { n += t.size(); });
    return n;
}

/// Throws NumericalError naming the first tensor holding NaN/Inf.
template <typename Params>
void require_finite(const Params& params, const std::string& what) {
    params.visit("", [&](const std::string& name, const auto& t) {
        for (auto v : t.values()) {
            if (!std::isfinite(v)) throw NumericalError(what + ": non-finite value in " + name);
        }
    });
}

} // namespace t2net::nn
