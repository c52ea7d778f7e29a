#pragma once

#include <t2net/error.hpp>
#include <t2net/nn/conv3d.hpp>
#include <t2net/nn/ops.hpp>
#include <t2net/rng.hpp>
#include <t2net/tensor.hpp>

#include <array>
#include <cmath>
#include <string>

namespace t2net::nn {

/// Gate order used by every per-gate array below.
enum Gate : std::size_t { kInput = 0, kForget = 1, kCandidate = 2, kOutput = 3 };

inline constexpr std::array<const char*, 4> kGateSuffix = {"i", "f", "c", "o"};

/// Parameters of one ConvLSTM cell with Hadamard peepholes.
///
/// Input-to-state kernels are [kL,kW,kH,C_in,C_hidden], state-to-state kernels
/// [kL,kW,kH,C_hidden,C_hidden], peepholes [L,W,H,C_hidden] (input, forget and
/// output gates only), biases [C_hidden].
template <typename S>
struct ConvLstmCellParams {
    using tensor_type = Tensor<S>;

    std::array<Tensor<S>, 4> w_x;
    std::array<Tensor<S>, 4> w_h;
    std::array<Tensor<S>, 3> w_peep;  ///< W_ci, W_cf, W_co
    std::array<Tensor<S>, 4> bias;

    static ConvLstmCellParams zeros(GridDims g, KernelSize k, std::size_t cin, std::size_t hidden) {
        if (!k.odd()) throw ConfigError("ConvLSTM kernel extents must be odd");
        ConvLstmCellParams p;
        for (std::size_t gate = 0; gate < 4; ++gate) {
            p.w_x[gate] = Tensor<S>({k.length, k.width, k.height, cin, hidden}, S{0});
            p.w_h[gate] = Tensor<S>({k.length, k.width, k.height, hidden, hidden}, S{0});
            p.bias[gate] = Tensor<S>({hidden}, S{0});
        }
        for (auto& w : p.w_peep) w = Tensor<S>({g.length, g.width, g.height, hidden}, S{0});
        return p;
    }

    /// Fan-in scaled uniform kernels, forget bias 1, zero peepholes and other biases.
    void init(RandomStream& rng, S forget_bias = S{1}) {
        for (auto* set : {&w_x, &w_h}) {
            for (auto& w : *set) {
                const double bound = 1.0 / std::sqrt(static_cast<double>(w.dim(0) * w.dim(1) * w.dim(2) * w.dim(3)));
                for (auto& v : w.values()) v = static_cast<S>(rng.uniform(-bound, bound));
            }
        }
        for (auto& w : w_peep) w.fill(S{0});
        for (auto& b : bias) b.fill(S{0});
        bias[kForget].fill(forget_bias);
    }

    KernelSize kernel() const { return {w_x[0].dim(0), w_x[0].dim(1), w_x[0].dim(2)}; }
    std::size_t in_channels() const { return w_x[0].dim(3); }
    std::size_t hidden() const { return w_x[0].dim(4); }
    GridDims grid() const { return {w_peep[0].dim(0), w_peep[0].dim(1), w_peep[0].dim(2)}; }

    template <typename F>
    void visit(const std::string& prefix, F&& f) {
        visit_impl(*this, prefix, f);
    }
    template <typename F>
    void visit(const std::string& prefix, F&& f) const {
        visit_impl(*this, prefix, f);
    }

private:
    template <typename Self, typename F>
    static void visit_impl(Self& self, const std::string& prefix, F& f) {
        for (std::size_t g = 0; g < 4; ++g) f(prefix + "W_x" + kGateSuffix[g], self.w_x[g]);
        for (std::size_t g = 0; g < 4; ++g) f(prefix + "W_h" + kGateSuffix[g], self.w_h[g]);
        f(prefix + "W_ci", self.w_peep[0]);
        f(prefix + "W_cf", self.w_peep[1]);
        f(prefix + "W_co", self.w_peep[2]);
        for (std::size_t g = 0; g < 4; ++g) f(prefix + "b_" + kGateSuffix[g], self.bias[g]);
    }
};

/// Hidden and cell state, each [L,W,H,C_hidden].
template <typename S>
struct ConvLstmState {
    Tensor<S> hidden;
    Tensor<S> cell;

    static ConvLstmState zeros(GridDims g, std::size_t channels) {
        return {Tensor<S>({g.length, g.width, g.height, channels}, S{0}),
                Tensor<S>({g.length, g.width, g.height, channels}, S{0})};
    }
};

/// Everything one step keeps for backpropagation through time.
template <typename S>
struct ConvLstmStepCache {
    Tensor<S> col_x;
    Tensor<S> col_h;
    Tensor<S> c_prev;
    std::array<Tensor<S>, 4> gate;  ///< activated i, f, g(tanh candidate), o
    Tensor<S> tanh_c;
};

template <typename S>
struct ConvLstmStepResult {
    Tensor<S> output;  ///< o_t, the output gate activation
    ConvLstmState<S> state;
};

namespace detail {

/// The four per-gate weights side by side: [rows, 4*ch], gate-major columns.
template <typename S>
RowMatrix<S> stack_gates(const std::array<Tensor<S>, 4>& w, std::size_t rows, std::size_t ch) {
    RowMatrix<S> out(rows, 4 * ch);
    for (std::size_t gate = 0; gate < 4; ++gate) {
        out.middleCols(static_cast<Eigen::Index>(gate * ch), static_cast<Eigen::Index>(ch)) =
            ConstMatrixMap<S>(w[gate].data(), rows, ch);
    }
    return out;
}

template <typename S>
Tensor<S> gather(const Tensor<S>& x, GridDims g, KernelSize k, std::size_t channels) {
    if (k.volume() == 1) return x.reshaped({g.cells(), channels});
    Tensor<S> col({g.cells(), k.volume() * channels});
    im2col(x.data(), g, k, channels, col.data());
    return col;
}

} // namespace detail

/// One ConvLSTM step:
///   i = sig(Wxi*X + Whi*H + Wci.C_prev + b_i)
///   f = sig(Wxf*X + Whf*H + Wcf.C_prev + b_f)
///   C = f.C_prev + i.tanh(Wxc*X + Whc*H + b_c)
///   o = sig(Wxo*X + Who*H + Wco.C + b_o)
///   H = o.tanh(C)
template <typename S>
ConvLstmStepResult<S> convlstm_step(const ConvLstmCellParams<S>& params, const Tensor<S>& x,
                                    const ConvLstmState<S>& state, ConvLstmStepCache<S>* cache = nullptr) {
    const GridDims g = params.grid();
    const KernelSize k = params.kernel();
    const std::size_t cin = params.in_channels();
    const std::size_t ch = params.hidden();
    const std::size_t cells = g.cells();
    const std::size_t n = cells * ch;
    if (x.size() != cells * cin) {
        throw StructuralError("convlstm_step: input " + shape_string(x.shape()) + " expected " +
                              std::to_string(cells) + " cells x " + std::to_string(cin) + " channels");
    }
    if (state.hidden.size() != n || state.cell.size() != n) {
        throw StructuralError("convlstm_step: state shape does not match cell parameters");
    }

    ConvLstmStepCache<S> local;
    ConvLstmStepCache<S>& c = cache ? *cache : local;
    c.col_x = detail::gather(x, g, k, cin);
    c.col_h = detail::gather(state.hidden, g, k, ch);
    c.c_prev = state.cell;

    const std::size_t ch4 = 4 * ch;
    const std::size_t kcx = k.volume() * cin;
    const std::size_t kch = k.volume() * ch;
    Eigen::Matrix<S, 1, Eigen::Dynamic> bias(ch4);
    for (std::size_t gate = 0; gate < 4; ++gate) {
        std::copy(params.bias[gate].data(), params.bias[gate].data() + ch, bias.data() + gate * ch);
    }
    RowMatrix<S> pre(cells, ch4);
    pre.rowwise() = bias;
    pre.noalias() += ConstMatrixMap<S>(c.col_x.data(), cells, kcx) * detail::stack_gates(params.w_x, kcx, ch);
    pre.noalias() += ConstMatrixMap<S>(c.col_h.data(), cells, kch) * detail::stack_gates(params.w_h, kch, ch);

    ConvLstmStepResult<S> out;
    out.state.cell = Tensor<S>(state.cell.shape());
    out.state.hidden = Tensor<S>(state.cell.shape());
    out.output = Tensor<S>(state.cell.shape());
    for (auto& t : c.gate) t = Tensor<S>(state.cell.shape());
    c.tanh_c = Tensor<S>(state.cell.shape());

    const S* cp = state.cell.data();
    for (std::size_t e = 0; e < n; ++e) {
        const S* z = pre.data() + (e / ch) * ch4 + e % ch;
        const S i = sigmoid(z[kInput * ch] + params.w_peep[0][e] * cp[e]);
        const S f = sigmoid(z[kForget * ch] + params.w_peep[1][e] * cp[e]);
        const S gc = std::tanh(z[kCandidate * ch]);
        const S cn = f * cp[e] + i * gc;
        const S o = sigmoid(z[kOutput * ch] + params.w_peep[2][e] * cn);
        const S tc = std::tanh(cn);
        c.gate[kInput][e] = i;
        c.gate[kForget][e] = f;
        c.gate[kCandidate][e] = gc;
        c.gate[kOutput][e] = o;
        c.tanh_c[e] = tc;
        out.state.cell[e] = cn;
        out.state.hidden[e] = o * tc;
        out.output[e] = o;
    }
    return out;
}

template <typename S>
struct ConvLstmStepGrads {
    Tensor<S> d_input;  ///< empty when not requested
    ConvLstmState<S> d_state;  ///< gradients w.r.t. H_{t-1}, C_{t-1}
};

/// Backward of convlstm_step. `d_output` is dL/do_t (may be empty), `d_next`
/// carries dL/dH_t and dL/dC_t from later steps (either may be empty).
/// Parameter gradients are accumulated into `grads`.
template <typename S>
ConvLstmStepGrads<S> convlstm_step_backward(const ConvLstmCellParams<S>& params, const ConvLstmStepCache<S>& c,
                                            const Tensor<S>& d_output, const ConvLstmState<S>& d_next,
                                            ConvLstmCellParams<S>& grads, bool want_input_grad = true) {
    const GridDims g = params.grid();
    const KernelSize k = params.kernel();
    const std::size_t cin = params.in_channels();
    const std::size_t ch = params.hidden();
    const std::size_t cells = g.cells();
    const std::size_t n = cells * ch;
    const Shape shape{g.length, g.width, g.height, ch};

    const std::size_t ch4 = 4 * ch;
    RowMatrix<S> dz(cells, ch4);
    ConvLstmStepGrads<S> out;
    out.d_state.cell = Tensor<S>(shape);

    for (std::size_t e = 0; e < n; ++e) {
        const S i = c.gate[kInput][e];
        const S f = c.gate[kForget][e];
        const S gc = c.gate[kCandidate][e];
        const S o = c.gate[kOutput][e];
        const S tc = c.tanh_c[e];
        const S cp = c.c_prev[e];
        const S dh = d_next.hidden.empty() ? S{0} : d_next.hidden[e];
        S d_o = (d_output.empty() ? S{0} : d_output[e]) + dh * tc;
        S dc = (d_next.cell.empty() ? S{0} : d_next.cell[e]) + dh * o * (S{1} - tc * tc);
        const S dzo = d_o * o * (S{1} - o);
        const S cn = f * cp + i * gc;
        grads.w_peep[2][e] += dzo * cn;
        dc += dzo * params.w_peep[2][e];
        const S dzi = dc * gc * i * (S{1} - i);
        const S dzf = dc * cp * f * (S{1} - f);
        const S dzc = dc * i * (S{1} - gc * gc);
        grads.w_peep[0][e] += dzi * cp;
        grads.w_peep[1][e] += dzf * cp;
        out.d_state.cell[e] = dc * f + dzi * params.w_peep[0][e] + dzf * params.w_peep[1][e];
        S* z = dz.data() + (e / ch) * ch4 + e % ch;
        z[kInput * ch] = dzi;
        z[kForget * ch] = dzf;
        z[kCandidate * ch] = dzc;
        z[kOutput * ch] = dzo;
    }

    const std::size_t kcx = k.volume() * cin;
    const std::size_t kch = k.volume() * ch;
    ConstMatrixMap<S> col_x(c.col_x.data(), cells, kcx);
    ConstMatrixMap<S> col_h(c.col_h.data(), cells, kch);
    const RowMatrix<S> gw_x = col_x.transpose() * dz;
    const RowMatrix<S> gw_h = col_h.transpose() * dz;
    Eigen::Matrix<S, 1, Eigen::Dynamic> gb = Eigen::Matrix<S, 1, Eigen::Dynamic>::Zero(static_cast<Eigen::Index>(ch4));
    add_column_sums(dz.data(), cells, ch4, gb.data());
    for (std::size_t gate = 0; gate < 4; ++gate) {
        const auto first = static_cast<Eigen::Index>(gate * ch);
        const auto width = static_cast<Eigen::Index>(ch);
        MatrixMap<S>(grads.w_x[gate].data(), kcx, ch) += gw_x.middleCols(first, width);
        MatrixMap<S>(grads.w_h[gate].data(), kch, ch) += gw_h.middleCols(first, width);
        Eigen::Map<Eigen::Matrix<S, 1, Eigen::Dynamic>>(grads.bias[gate].data(), ch) += gb.segment(first, width);
    }
    RowMatrix<S> dcol_x;
    if (want_input_grad) dcol_x.noalias() = dz * detail::stack_gates(params.w_x, kcx, ch).transpose();
    RowMatrix<S> dcol_h;
    dcol_h.noalias() = dz * detail::stack_gates(params.w_h, kch, ch).transpose();

    out.d_state.hidden = Tensor<S>(shape, S{0});
    if (k.volume() == 1) {
        std::copy(dcol_h.data(), dcol_h.data() + n, out.d_state.hidden.data());
    } else {
        col2im_add(dcol_h.data(), g, k, ch, out.d_state.hidden.data());
    }
    if (want_input_grad) {
        out.d_input = Tensor<S>({g.length, g.width, g.height, cin}, S{0});
        if (k.volume() == 1) {
            std::copy(dcol_x.data(), dcol_x.data() + cells * cin, out.d_input.data());
        } else {
            col2im_add(dcol_x.data(), g, k, cin, out.d_input.data());
        }
    }
    return out;
}

} // namespace t2net::nn
