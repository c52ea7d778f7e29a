#pragma once

#include <t2net/error.hpp>
#include <t2net/grid.hpp>
#include <t2net/nn/conv3d.hpp>
#include <t2net/nn/convlstm.hpp>
#include <t2net/nn/ops.hpp>
#include <t2net/rng.hpp>

#include <optional>
#include <string>
#include <vector>

namespace t2net::nn {

/// What the decoder consumes at each forecast step.
enum class DecoderMode {
    FeatureFed,  ///< the NWP forecast cube of that hour
    LabelFed,    ///< the previous step's class distribution, projected 4 -> C_in
};

inline const char* to_string(DecoderMode m) { return m == DecoderMode::FeatureFed ? "feature_fed" : "label_fed"; }

inline DecoderMode decoder_mode_from_string(const std::string& s) {
    if (s == "feature_fed") return DecoderMode::FeatureFed;
    if (s == "label_fed") return DecoderMode::LabelFed;
    throw ConfigError("unknown decoder mode '" + s + "' (expected feature_fed or label_fed)");
}

struct TfnShape {
    GridDims grid{10, 10, 5};
    std::size_t channels = kNumChannels;
    std::size_t hidden = 32;
    KernelSize kernel{3, 3, 3};
    bool label_projection = false;  ///< allocate the 4 -> C_in map used by label-fed decoding
};

/// Forecasting network: ConvLSTM encoder, ConvLSTM decoder, 1x1x1 head to 4 classes.
template <typename S>
struct TfnParams {
    using tensor_type = Tensor<S>;

    ConvLstmCellParams<S> encoder;
    ConvLstmCellParams<S> decoder;
    Conv3d<S> head;
    Conv3d<S> projection;  ///< absent unless label-fed decoding is enabled

    static TfnParams zeros(const TfnShape& s) {
        TfnParams p;
        p.encoder = ConvLstmCellParams<S>::zeros(s.grid, s.kernel, s.channels, s.hidden);
        p.decoder = ConvLstmCellParams<S>::zeros(s.grid, s.kernel, s.channels, s.hidden);
        p.head = Conv3d<S>::zeros({1, 1, 1}, s.hidden, kNumClasses);
        if (s.label_projection) p.projection = Conv3d<S>::zeros({1, 1, 1}, kNumClasses, s.channels);
        return p;
    }

    static TfnParams create(const TfnShape& s, RandomStream& rng) {
        TfnParams p = zeros(s);
        p.encoder.init(rng);
        p.decoder.init(rng);
        p.head.init_uniform(rng);
        if (p.projection.present()) p.projection.init_uniform(rng);
        return p;
    }

    TfnShape shape() const {
        return {encoder.grid(), encoder.in_channels(), encoder.hidden(), encoder.kernel(), projection.present()};
    }

    template <typename F>
    void visit(const std::string& prefix, F&& f) {
        encoder.visit(prefix + "encoder.", f);
        decoder.visit(prefix + "decoder.", f);
        head.visit(prefix + "head.", f);
        if (projection.present()) projection.visit(prefix + "projection.", f);
    }
    template <typename F>
    void visit(const std::string& prefix, F&& f) const {
        encoder.visit(prefix + "encoder.", f);
        decoder.visit(prefix + "decoder.", f);
        head.visit(prefix + "head.", f);
        if (projection.present()) projection.visit(prefix + "projection.", f);
    }
};

template <typename S>
struct TfnCache {
    DecoderMode mode = DecoderMode::FeatureFed;
    std::vector<ConvLstmStepCache<S>> encoder;
    std::vector<ConvLstmStepCache<S>> decoder;
    std::vector<ConvCache<S>> head;
    std::vector<ConvCache<S>> projection;
    std::vector<Tensor<S>> probs;  ///< per step [L,W,H,4]
    std::vector<LabelCube> teacher;
};

/// Sequence-to-sequence forward pass. Returns [p,L,W,H,4] per-cell class
/// distributions. In label-fed mode `teacher` (optional, length p) supplies
/// labels substituted for the previous prediction at known cells.
template <typename S>
Tensor<S> tfn_forward(const TfnParams<S>& params, const std::vector<Tensor<S>>& history,
                      const std::vector<Tensor<S>>& forecast, DecoderMode mode = DecoderMode::FeatureFed,
                      const std::vector<LabelCube>* teacher = nullptr, TfnCache<S>* cache = nullptr) {
    if (mode == DecoderMode::LabelFed && !params.projection.present()) {
        throw ConfigError("label_fed decoding requires the label projection parameters");
    }
    if (history.empty()) throw StructuralError("tfn_forward: empty history");
    const GridDims g = params.encoder.grid();
    const std::size_t hidden = params.encoder.hidden();
    if (params.decoder.hidden() != hidden) throw StructuralError("decoder hidden size must equal encoder hidden size");
    const std::size_t horizon = forecast.size();
    const std::size_t cells = g.cells();

    TfnCache<S> local;
    TfnCache<S>& c = cache ? *cache : local;
    c.mode = mode;
    c.encoder.assign(history.size(), {});
    c.decoder.assign(horizon, {});
    c.head.assign(horizon, {});
    c.projection.assign(mode == DecoderMode::LabelFed ? horizon : 0, {});
    c.probs.assign(horizon, {});
    c.teacher.clear();
    if (mode == DecoderMode::LabelFed && teacher) c.teacher = *teacher;

    auto state = ConvLstmState<S>::zeros(g, hidden);
    for (std::size_t i = 0; i < history.size(); ++i) {
        state = convlstm_step(params.encoder, history[i], state, &c.encoder[i]).state;
    }

    Tensor<S> previous({g.length, g.width, g.height, kNumClasses}, S{0.25});
    Tensor<S> out({horizon, g.length, g.width, g.height, kNumClasses});
    for (std::size_t j = 0; j < horizon; ++j) {
        Tensor<S> input;
        if (mode == DecoderMode::FeatureFed) {
            input = forecast[j];
        } else {
            input = conv3d_forward(params.projection, previous, g, c.projection[j]);
        }
        auto step = convlstm_step(params.decoder, input, state, &c.decoder[j]);
        state = std::move(step.state);
        c.probs[j] = softmax_classes(conv3d_forward(params.head, step.output, g, c.head[j]));
        std::copy(c.probs[j].values().begin(), c.probs[j].values().end(), out.slab(j).begin());
        if (mode == DecoderMode::LabelFed) {
            previous = c.probs[j];
            if (teacher && j < teacher->size()) {
                const auto& labels = (*teacher)[j].labels;
                for (std::size_t cell = 0; cell < cells; ++cell) {
                    if (labels[cell] < 0) continue;
                    for (std::size_t k = 0; k < kNumClasses; ++k) {
                        previous[cell * kNumClasses + k] = static_cast<std::size_t>(labels[cell]) == k ? S{1} : S{0};
                    }
                }
            }
        }
    }
    return out;
}

/// Backpropagates dL/dP ([p,L,W,H,4]) and accumulates parameter gradients.
/// In label-fed mode the gradient also flows through each fed-back
/// distribution, except at cells where a teacher label replaced it.
template <typename S>
void tfn_backward(const TfnParams<S>& params, const TfnCache<S>& c, const Tensor<S>& d_probs, TfnParams<S>& grads) {
    const GridDims g = params.encoder.grid();
    const std::size_t horizon = c.decoder.size();
    const std::size_t cells = g.cells();
    if (d_probs.size() != horizon * cells * kNumClasses) {
        throw StructuralError("tfn_backward: gradient shape " + shape_string(d_probs.shape()) + " does not match forward");
    }
    const bool label_fed = c.mode == DecoderMode::LabelFed;
    const Shape step_shape{g.length, g.width, g.height, kNumClasses};
    ConvLstmState<S> d_state;
    Tensor<S> d_fed;  // gradient w.r.t. the distribution fed into step jj+1
    for (std::size_t jj = horizon; jj-- > 0;) {
        const auto span = d_probs.slab(jj);
        Tensor<S> dp(step_shape, std::vector<S>(span.begin(), span.end()));
        if (!d_fed.empty()) {
            const auto* teacher = jj < c.teacher.size() ? &c.teacher[jj] : nullptr;
            for (std::size_t cell = 0; cell < cells; ++cell) {
                if (teacher && teacher->labels[cell] >= 0) continue;
                for (std::size_t k = 0; k < kNumClasses; ++k) dp[cell * kNumClasses + k] += d_fed[cell * kNumClasses + k];
            }
        }
        const Tensor<S> d_logits = softmax_classes_backward(c.probs[jj], dp);
        const Tensor<S> d_out = conv3d_backward(params.head, c.head[jj], d_logits, g, grads.head);
        auto step = convlstm_step_backward(params.decoder, c.decoder[jj], d_out, d_state, grads.decoder, label_fed);
        if (label_fed) d_fed = conv3d_backward(params.projection, c.projection[jj], step.d_input, g, grads.projection, jj > 0);
        d_state = std::move(step.d_state);
    }
    for (std::size_t ii = c.encoder.size(); ii-- > 0;) {
        d_state = convlstm_step_backward(params.encoder, c.encoder[ii], Tensor<S>{}, d_state, grads.encoder, false).d_state;
    }
}

} // namespace t2net::nn
