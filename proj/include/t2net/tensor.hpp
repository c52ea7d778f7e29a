#pragma once

#include <t2net/error.hpp>

#include <algorithm>
#include <cstddef>
#include <numeric>
#include <span>
#include <string>
#include <vector>

namespace t2net {

using Shape = std::vector<std::size_t>;

inline std::size_t shape_volume(const Shape& shape) {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>{});
}

inline std::string shape_string(const Shape& shape) {
    std::string out = "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) out += ",";
        out += std::to_string(shape[i]);
    }
    return out + "]";
}

/// Dense row-major n-dimensional array with value semantics.
template <typename T>
class Tensor {
public:
    using value_type = T;

    Tensor() = default;
    explicit Tensor(Shape shape, T fill = T{})
        : shape_(std::move(shape)), data_(shape_volume(shape_), fill) {}
    Tensor(Shape shape, std::vector<T> data) : shape_(std::move(shape)), data_(std::move(data)) {
        if (data_.size() != shape_volume(shape_)) {
            throw StructuralError("tensor data size " + std::to_string(data_.size()) +
                                  " does not match shape " + shape_string(shape_));
        }
    }

    const Shape& shape() const noexcept { return shape_; }
    std::size_t rank() const noexcept { return shape_.size(); }
    std::size_t dim(std::size_t axis) const { return shape_.at(axis); }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    T* data() noexcept { return data_.data(); }
    const T* data() const noexcept { return data_.data(); }
    std::span<T> values() noexcept { return data_; }
    std::span<const T> values() const noexcept { return data_; }
    const std::vector<T>& storage() const noexcept { return data_; }

    T& operator[](std::size_t i) noexcept { return data_[i]; }
    const T& operator[](std::size_t i) const noexcept { return data_[i]; }

    void fill(T value) { std::fill(data_.begin(), data_.end(), value); }

    /// Same data, new shape of equal volume.
    Tensor reshaped(Shape shape) const {
        if (shape_volume(shape) != data_.size()) {
            throw StructuralError("cannot reshape " + shape_string(shape_) + " to " + shape_string(shape));
        }
        return Tensor(std::move(shape), data_);
    }

    /// Contiguous slice along the leading axis.
    std::span<T> slab(std::size_t index) {
        const std::size_t stride = data_.size() / shape_.at(0);
        return std::span<T>(data_).subspan(index * stride, stride);
    }
    std::span<const T> slab(std::size_t index) const {
        const std::size_t stride = data_.size() / shape_.at(0);
        return std::span<const T>(data_).subspan(index * stride, stride);
    }

    friend bool operator==(const Tensor& a, const Tensor& b) = default;

private:
    Shape shape_;
    std::vector<T> data_;
};

template <typename To, typename From>
Tensor<To> tensor_cast(const Tensor<From>& in) {
    std::vector<To> out(in.size());
    std::transform(in.values().begin(), in.values().end(), out.begin(),
                   [](From v) { return static_cast<To>(v); });
    return Tensor<To>(in.shape(), std::move(out));
}

inline void require_same_shape(const Shape& a, const Shape& b, const char* what) {
    if (a != b) {
        throw StructuralError(std::string(what) + ": shape " + shape_string(a) + " vs " + shape_string(b));
    }
}

} // namespace t2net
