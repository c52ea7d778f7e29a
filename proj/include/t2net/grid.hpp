#pragma once

#include <t2net/error.hpp>
#include <t2net/tensor.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

namespace t2net {

inline constexpr std::size_t kNumClasses = 4;
inline constexpr std::size_t kNumChannels = 12;

/// Geometry of one forecasting region and the sequence lengths around it.
struct RegionSpec {
    std::size_t length = 10;  ///< L, grid steps along x
    std::size_t width = 10;   ///< W, grid steps along y
    std::size_t height = 5;   ///< H, vertical levels
    std::size_t channels = kNumChannels;
    std::size_t history_len = 6;  ///< n
    std::size_t horizon_len = 6;  ///< p

    std::size_t cells() const noexcept { return length * width * height; }
    Shape feature_shape() const { return {length, width, height, channels}; }
    Shape label_shape() const { return {length, width, height}; }

    void validate() const {
        if (length == 0 || width == 0 || height == 0 || channels == 0 || history_len == 0 || horizon_len == 0) {
            throw ConfigError("region: all dimensions and sequence lengths must be >= 1");
        }
    }

    friend bool operator==(const RegionSpec&, const RegionSpec&) = default;
};

enum class TurbulenceClass : std::int8_t { Unknown = -1, Negative = 0, Light = 1, Moderate = 2, Severe = 3 };

inline constexpr std::int8_t kUnknownLabel = -1;

inline constexpr std::array<const char*, kNumClasses> kClassNames = {"Negative", "Light", "Moderate", "Severe"};

/// Channel order of every feature cube. Raw fields first, derived indexes after.
inline constexpr std::array<const char*, kNumChannels> kChannelNames = {
    "u_wind", "v_wind", "temperature", "rel_humidity", "vertical_velocity", "pressure",
    "richardson", "colson_panofsky", "ellrod_ti1", "wind_speed", "horiz_temp_gradient", "mos_cat"};

inline bool is_valid_label(int code) noexcept { return code >= -1 && code <= 3; }

enum class CubeKind { Historical, NwpForecast };

inline const char* to_string(CubeKind kind) {
    return kind == CubeKind::Historical ? "historical" : "nwp_forecast";
}

/// One hour of gridded features, shape [L, W, H, C].
struct FeatureCube {
    Tensor<float> data;
    long timestamp = 0;
    CubeKind kind = CubeKind::Historical;

    void validate(const RegionSpec& region) const {
        require_same_shape(data.shape(), region.feature_shape(), "feature cube");
        for (std::size_t i = 0; i < data.size(); ++i) {
            if (!std::isfinite(data[i])) {
                throw ValidationError("feature cube at hour " + std::to_string(timestamp) +
                                      " has a non-finite value at flat index " + std::to_string(i));
            }
        }
    }
};

/// One hour of turbulence labels, shape [L, W, H]; -1 marks unknown cells.
struct LabelCube {
    Tensor<std::int8_t> labels;
    long timestamp = 0;

    std::size_t cells() const noexcept { return labels.size(); }

    void validate() const {
        for (std::size_t i = 0; i < labels.size(); ++i) {
            if (!is_valid_label(labels[i])) {
                throw ValidationError("label cube at hour " + std::to_string(timestamp) + ": invalid class code " +
                                      std::to_string(int(labels[i])) + " at cell " + std::to_string(i));
            }
        }
    }
};

/// Supervised / unsupervised cell masks (I_s, I_u). Always complements.
struct CellMasks {
    std::vector<bool> supervised;
    std::vector<bool> unsupervised;

    std::size_t supervised_count() const {
        return static_cast<std::size_t>(std::count(supervised.begin(), supervised.end(), true));
    }
    std::size_t unsupervised_count() const {
        return static_cast<std::size_t>(std::count(unsupervised.begin(), unsupervised.end(), true));
    }
};

inline CellMasks make_masks(const LabelCube& cube) {
    cube.validate();
    CellMasks masks;
    masks.supervised.resize(cube.cells());
    masks.unsupervised.resize(cube.cells());
    for (std::size_t i = 0; i < cube.cells(); ++i) {
        const bool known = cube.labels[i] != kUnknownLabel;
        masks.supervised[i] = known;
        masks.unsupervised[i] = !known;
    }
    return masks;
}

/// [L,W,H] labels to [L,W,H,4]; unknown cells become all-zero rows.
inline Tensor<float> one_hot(const LabelCube& cube) {
    cube.validate();
    Shape shape = cube.labels.shape();
    shape.push_back(kNumClasses);
    Tensor<float> out(shape, 0.0f);
    for (std::size_t i = 0; i < cube.cells(); ++i) {
        if (cube.labels[i] >= 0) out[i * kNumClasses + static_cast<std::size_t>(cube.labels[i])] = 1.0f;
    }
    return out;
}

/// Probability vector over {Negative, Light, Moderate, Severe}.
class ClassDistribution {
public:
    static constexpr double kTolerance = 1e-6;

    static ClassDistribution uniform() { return ClassDistribution({0.25, 0.25, 0.25, 0.25}); }

    /// Validating constructor: entries in [0,1] summing to 1 within 1e-6.
    explicit ClassDistribution(const std::array<double, kNumClasses>& probs) : probs_(probs) {
        double sum = 0.0;
        for (double p : probs_) {
            if (!(p >= 0.0 && p <= 1.0)) {
                throw ValidationError("class distribution entry out of [0,1]: " + std::to_string(p));
            }
            sum += p;
        }
        if (std::abs(sum - 1.0) > kTolerance) {
            throw ValidationError("class distribution sums to " + std::to_string(sum));
        }
    }

    double operator[](std::size_t i) const { return probs_[i]; }
    const std::array<double, kNumClasses>& probs() const noexcept { return probs_; }

    std::size_t argmax() const {
        return static_cast<std::size_t>(std::max_element(probs_.begin(), probs_.end()) - probs_.begin());
    }

    friend bool operator==(const ClassDistribution&, const ClassDistribution&) = default;

private:
    std::array<double, kNumClasses> probs_;
};

/// One training example: n history cubes, p NWP-forecast cubes, p label cubes.
struct CubeSample {
    std::vector<FeatureCube> history;
    std::vector<FeatureCube> forecast;
    std::vector<LabelCube> targets;
    /// Dense evaluation-only labels (synthetic data); empty when unavailable.
    std::vector<LabelCube> truth;
    long start_hour = 0;

    void validate(const RegionSpec& region) const {
        if (history.size() != region.history_len || forecast.size() != region.horizon_len ||
            targets.size() != region.horizon_len) {
            throw StructuralError("sample sequence lengths do not match region n/p");
        }
        for (std::size_t i = 0; i < history.size(); ++i) {
            history[i].validate(region);
            if (history[i].kind != CubeKind::Historical) throw UsageError("history cube has nwp_forecast kind");
            if (history[i].timestamp != start_hour + static_cast<long>(i)) {
                throw ValidationError("history timestamps are not consecutive");
            }
        }
        for (std::size_t j = 0; j < forecast.size(); ++j) {
            forecast[j].validate(region);
            if (forecast[j].kind != CubeKind::NwpForecast) throw UsageError("forecast cube has historical kind");
            require_same_shape(targets[j].labels.shape(), region.label_shape(), "label cube");
            targets[j].validate();
            const long expected = start_hour + static_cast<long>(region.history_len + j);
            if (forecast[j].timestamp != expected || targets[j].timestamp != expected) {
                throw ValidationError("forecast/target timestamps are not aligned");
            }
        }
    }
};

} // namespace t2net
