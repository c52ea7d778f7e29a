#pragma once

#include <t2net/error.hpp>
#include <t2net/rng.hpp>
#include <t2net/tensor.hpp>

#include <Eigen/Core>

#include <cmath>
#include <string>

namespace t2net::nn {

/// Spatial extent of a cube: L x W x H cells.
struct GridDims {
    std::size_t length = 0;
    std::size_t width = 0;
    std::size_t height = 0;

    std::size_t cells() const noexcept { return length * width * height; }
    friend bool operator==(const GridDims&, const GridDims&) = default;
};

/// Odd kernel extents along L, W, H.
struct KernelSize {
    std::size_t length = 3;
    std::size_t width = 3;
    std::size_t height = 3;

    std::size_t volume() const noexcept { return length * width * height; }
    bool odd() const noexcept { return length % 2 == 1 && width % 2 == 1 && height % 2 == 1; }
    friend bool operator==(const KernelSize&, const KernelSize&) = default;
};

template <typename S>
using RowMatrix = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename S>
using MatrixMap = Eigen::Map<RowMatrix<S>>;
template <typename S>
using ConstMatrixMap = Eigen::Map<const RowMatrix<S>>;
template <typename S>
using ArrayMap = Eigen::Map<Eigen::Array<S, Eigen::Dynamic, 1>>;
template <typename S>
using ConstArrayMap = Eigen::Map<const Eigen::Array<S, Eigen::Dynamic, 1>>;

/// Adds the column sums of a row-major [rows, cols] block to `out`, row by row.
/// The order is fixed so the result does not depend on buffer alignment.
template <typename S>
void add_column_sums(const S* m, std::size_t rows, std::size_t cols, S* out) {
    for (std::size_t r = 0; r < rows; ++r) {
        const S* row = m + r * cols;
        for (std::size_t c = 0; c < cols; ++c) out[c] += row[c];
    }
}

/// Gathers the "same"-padded neighbourhood of every cell into one row:
/// col[cell, ((a*kW + b)*kH + c)*C + ch]. Out-of-grid taps read zero.
template <typename S>
void im2col(const S* x, GridDims g, KernelSize k, std::size_t channels, S* col) {
    const long hl = static_cast<long>(k.length / 2);
    const long hw = static_cast<long>(k.width / 2);
    const long hh = static_cast<long>(k.height / 2);
    const std::size_t row = k.volume() * channels;
    for (long l = 0; l < static_cast<long>(g.length); ++l) {
        for (long w = 0; w < static_cast<long>(g.width); ++w) {
            for (long h = 0; h < static_cast<long>(g.height); ++h) {
                S* out = col + ((l * g.width + w) * g.height + h) * row;
                for (long a = 0; a < static_cast<long>(k.length); ++a) {
                    const long sl = l + a - hl;
                    for (long b = 0; b < static_cast<long>(k.width); ++b) {
                        const long sw = w + b - hw;
                        for (long c = 0; c < static_cast<long>(k.height); ++c, out += channels) {
                            const long sh = h + c - hh;
                            if (sl < 0 || sw < 0 || sh < 0 || sl >= static_cast<long>(g.length) ||
                                sw >= static_cast<long>(g.width) || sh >= static_cast<long>(g.height)) {
                                std::fill(out, out + channels, S{0});
                            } else {
                                const S* src = x + ((sl * g.width + sw) * g.height + sh) * channels;
                                std::copy(src, src + channels, out);
                            }
                        }
                    }
                }
            }
        }
    }
}

/// Adjoint of im2col: scatters column gradients back onto the input grid (accumulating).
template <typename S>
void col2im_add(const S* col, GridDims g, KernelSize k, std::size_t channels, S* dx) {
    const long hl = static_cast<long>(k.length / 2);
    const long hw = static_cast<long>(k.width / 2);
    const long hh = static_cast<long>(k.height / 2);
    const std::size_t row = k.volume() * channels;
    for (long l = 0; l < static_cast<long>(g.length); ++l) {
        for (long w = 0; w < static_cast<long>(g.width); ++w) {
            for (long h = 0; h < static_cast<long>(g.height); ++h) {
                const S* in = col + ((l * g.width + w) * g.height + h) * row;
                for (long a = 0; a < static_cast<long>(k.length); ++a) {
                    const long sl = l + a - hl;
                    for (long b = 0; b < static_cast<long>(k.width); ++b) {
                        const long sw = w + b - hw;
                        for (long c = 0; c < static_cast<long>(k.height); ++c, in += channels) {
                            const long sh = h + c - hh;
                            if (sl < 0 || sw < 0 || sh < 0 || sl >= static_cast<long>(g.length) ||
                                sw >= static_cast<long>(g.width) || sh >= static_cast<long>(g.height)) {
                                continue;
                            }
                            S* dst = dx + ((sl * g.width + sw) * g.height + sh) * channels;
                            for (std::size_t ch = 0; ch < channels; ++ch) dst[ch] += in[ch];
                        }
                    }
                }
            }
        }
    }
}

/// A 3D convolution layer: weight [kL,kW,kH,Cin,Cout], bias [Cout].
template <typename S>
struct Conv3d {
    using tensor_type = Tensor<S>;

    Tensor<S> weight;
    Tensor<S> bias;

    static Conv3d zeros(KernelSize k, std::size_t cin, std::size_t cout) {
        if (!k.odd()) throw ConfigError("convolution kernel extents must be odd for same padding");
        return Conv3d{Tensor<S>({k.length, k.width, k.height, cin, cout}, S{0}), Tensor<S>({cout}, S{0})};
    }

    bool present() const noexcept { return !weight.empty(); }
    KernelSize kernel() const { return {weight.dim(0), weight.dim(1), weight.dim(2)}; }
    std::size_t in_channels() const { return weight.dim(3); }
    std::size_t out_channels() const { return weight.dim(4); }
    std::size_t fan_in() const { return kernel().volume() * in_channels(); }

    /// Fan-in scaled uniform weights, zero bias.
    void init_uniform(RandomStream& rng) {
        const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in()));
        for (auto& w : weight.values()) w = static_cast<S>(rng.uniform(-bound, bound));
        bias.fill(S{0});
    }

    template <typename F>
    void visit(const std::string& prefix, F&& f) {
        f(prefix + "weight", weight);
        f(prefix + "bias", bias);
    }
    template <typename F>
    void visit(const std::string& prefix, F&& f) const {
        f(prefix + "weight", weight);
        f(prefix + "bias", bias);
    }
};

/// Column buffer plus shapes; what a convolution keeps for its backward pass.
template <typename S>
struct ConvCache {
    Tensor<S> col;  ///< [cells, kvol*Cin]
};

/// y = conv(x) + bias, x [cells, Cin] -> y [cells, Cout]. Fills cache.col.
template <typename S>
Tensor<S> conv3d_forward(const Conv3d<S>& layer, const Tensor<S>& x, GridDims g, ConvCache<S>& cache) {
    const std::size_t cin = layer.in_channels();
    const std::size_t cout = layer.out_channels();
    if (x.size() != g.cells() * cin) {
        throw StructuralError("conv3d input " + shape_string(x.shape()) + " does not match grid x " +
                              std::to_string(cin) + " channels");
    }
    const KernelSize k = layer.kernel();
    const std::size_t cells = g.cells();
    const std::size_t kc = k.volume() * cin;
    if (k.volume() == 1) {
        cache.col = x;
    } else {
        cache.col = Tensor<S>({cells, kc});
        im2col(x.data(), g, k, cin, cache.col.data());
    }
    Tensor<S> y({g.length, g.width, g.height, cout});
    MatrixMap<S> out(y.data(), cells, cout);
    out.noalias() = ConstMatrixMap<S>(cache.col.data(), cells, kc) * ConstMatrixMap<S>(layer.weight.data(), kc, cout);
    out.rowwise() += Eigen::Map<const Eigen::Matrix<S, 1, Eigen::Dynamic>>(layer.bias.data(), cout);
    return y;
}

/// Accumulates weight/bias gradients into `grad` and returns dL/dx (if wanted).
template <typename S>
Tensor<S> conv3d_backward(const Conv3d<S>& layer, const ConvCache<S>& cache, const Tensor<S>& dy, GridDims g,
                          Conv3d<S>& grad, bool want_input_grad = true) {
    const std::size_t cin = layer.in_channels();
    const std::size_t cout = layer.out_channels();
    const KernelSize k = layer.kernel();
    const std::size_t cells = g.cells();
    const std::size_t kc = k.volume() * cin;
    ConstMatrixMap<S> dy_m(dy.data(), cells, cout);
    MatrixMap<S>(grad.weight.data(), kc, cout).noalias() +=
        ConstMatrixMap<S>(cache.col.data(), cells, kc).transpose() * dy_m;
    add_column_sums(dy.data(), cells, cout, grad.bias.data());
    if (!want_input_grad) return {};
    Tensor<S> dx({g.length, g.width, g.height, cin}, S{0});
    if (k.volume() == 1) {
        MatrixMap<S>(dx.data(), cells, cin).noalias() = dy_m * ConstMatrixMap<S>(layer.weight.data(), kc, cout).transpose();
    } else {
        Tensor<S> dcol({cells, kc});
        MatrixMap<S>(dcol.data(), cells, kc).noalias() =
            dy_m * ConstMatrixMap<S>(layer.weight.data(), kc, cout).transpose();
        col2im_add(dcol.data(), g, k, cin, dx.data());
    }
    return dx;
}

} // namespace t2net::nn
