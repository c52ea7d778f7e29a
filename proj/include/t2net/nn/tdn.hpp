#pragma once

#include <t2net/error.hpp>
#include <t2net/grid.hpp>
#include <t2net/nn/conv3d.hpp>
#include <t2net/nn/ops.hpp>
#include <t2net/rng.hpp>

#include <array>
#include <string>

namespace t2net::nn {

struct TdnShape {
    GridDims grid{10, 10, 5};
    std::size_t channels = kNumChannels;
    std::array<std::size_t, 3> widths{16, 16, 16};
    std::array<KernelSize, 3> kernels{KernelSize{3, 3, 3}, KernelSize{3, 3, 3}, KernelSize{5, 5, 3}};
};

/// Detection network: three ReLU convolutions then a 1x1x1 projection to 4 classes.
template <typename S>
struct TdnParams {
    using tensor_type = Tensor<S>;

    std::array<Conv3d<S>, 3> conv;
    Conv3d<S> head;
    GridDims grid;

    static TdnParams zeros(const TdnShape& s) {
        TdnParams p;
        std::size_t cin = s.channels;
        for (std::size_t l = 0; l < 3; ++l) {
            p.conv[l] = Conv3d<S>::zeros(s.kernels[l], cin, s.widths[l]);
            cin = s.widths[l];
        }
        p.head = Conv3d<S>::zeros({1, 1, 1}, cin, kNumClasses);
        p.grid = s.grid;
        return p;
    }

    static TdnParams create(const TdnShape& s, RandomStream& rng) {
        TdnParams p = zeros(s);
        for (auto& layer : p.conv) layer.init_uniform(rng);
        p.head.init_uniform(rng);
        return p;
    }

    template <typename F>
    void visit(const std::string& prefix, F&& f) {
        for (std::size_t l = 0; l < 3; ++l) conv[l].visit(prefix + "conv" + std::to_string(l + 1) + ".", f);
        head.visit(prefix + "head.", f);
    }
    template <typename F>
    void visit(const std::string& prefix, F&& f) const {
        for (std::size_t l = 0; l < 3; ++l) conv[l].visit(prefix + "conv" + std::to_string(l + 1) + ".", f);
        head.visit(prefix + "head.", f);
    }
};

template <typename S>
struct TdnCache {
    std::array<ConvCache<S>, 3> conv;
    std::array<Tensor<S>, 3> activation;  ///< post-ReLU outputs
    ConvCache<S> head;
    Tensor<S> probs;
};

/// Per-cell class distribution [L,W,H,4] for one feature cube [L,W,H,C].
template <typename S>
Tensor<S> tdn_forward(const TdnParams<S>& params, const Tensor<S>& x, TdnCache<S>* cache = nullptr) {
    TdnCache<S> local;
    TdnCache<S>& c = cache ? *cache : local;
    const Tensor<S>* input = &x;
    for (std::size_t l = 0; l < 3; ++l) {
        c.activation[l] = conv3d_forward(params.conv[l], *input, params.grid, c.conv[l]);
        for (auto& v : c.activation[l].values()) v = v > S{0} ? v : S{0};
        input = &c.activation[l];
    }
    c.probs = softmax_classes(conv3d_forward(params.head, *input, params.grid, c.head));
    return c.probs;
}

/// TDN on a feature cube; only NWP forecast cubes are valid detection inputs.
template <typename S>
Tensor<S> tdn_forward(const TdnParams<S>& params, const FeatureCube& cube, TdnCache<S>* cache = nullptr) {
    if (cube.kind != CubeKind::NwpForecast) throw UsageError("TDN input must be an nwp_forecast cube");
    return tdn_forward(params, tensor_cast<S>(cube.data), cache);
}

/// Accumulates parameter gradients for dL/dP ([L,W,H,4]).
template <typename S>
void tdn_backward(const TdnParams<S>& params, const TdnCache<S>& c, const Tensor<S>& d_probs, TdnParams<S>& grads) {
    Tensor<S> d = softmax_classes_backward(c.probs, d_probs);
    d = conv3d_backward(params.head, c.head, d, params.grid, grads.head);
    for (std::size_t l = 3; l-- > 0;) {
        for (std::size_t e = 0; e < d.size(); ++e) {
            if (!(c.activation[l][e] > S{0})) d[e] = S{0};
        }
        d = conv3d_backward(params.conv[l], c.conv[l], d, params.grid, grads.conv[l], l > 0);
    }
}

} // namespace t2net::nn
