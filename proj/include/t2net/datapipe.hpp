#pragma once

#include <t2net/error.hpp>
#include <t2net/grid.hpp>
#include <t2net/indexes.hpp>
#include <t2net/npy.hpp>
#include <t2net/rng.hpp>
#include <t2net/tensor.hpp>

#include <nlohmann/json.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <string>
#include <vector>

namespace t2net::data {

namespace fs = std::filesystem;
using json = nlohmann::json;

inline constexpr int kFormatVersion = 1;
inline constexpr double kFeetPerMetre = 1.0 / 0.3048;
inline constexpr double kCruiseLowFt = 31000.0;
inline constexpr double kCruiseHighFt = 38000.0;

/// Everything observed at consecutive hours: analysis (historical) cubes,
/// NWP forecast cubes valid at the same hour, sparse labels and optional dense truth.
struct HourlySeries {
    std::vector<FeatureCube> historical;
    std::vector<FeatureCube> forecast;
    std::vector<LabelCube> labels;
    std::vector<LabelCube> truth;

    std::size_t hours() const noexcept { return historical.size(); }

    void validate() const {
        if (forecast.size() != historical.size() || labels.size() != historical.size() ||
            (!truth.empty() && truth.size() != historical.size())) {
            throw StructuralError("hourly series: cube sequences differ in length");
        }
        for (std::size_t t = 0; t < hours(); ++t) {
            const long ts = historical[t].timestamp;
            if (forecast[t].timestamp != ts || labels[t].timestamp != ts || (!truth.empty() && truth[t].timestamp != ts)) {
                throw ValidationError("hourly series: misaligned timestamps at position " + std::to_string(t));
            }
        }
    }
};

/// One sample per start hour (stride 1) over runs of consecutive hours.
/// When no window fits, returns nothing and explains why in `diagnostic`.
inline std::vector<CubeSample> sliding_windows(const HourlySeries& series, const RegionSpec& region,
                                               std::string* diagnostic = nullptr) {
    region.validate();
    series.validate();
    const std::size_t span = region.history_len + region.horizon_len;
    std::vector<CubeSample> out;
    std::size_t run_start = 0;
    for (std::size_t t = 0; t < series.hours(); ++t) {
        if (t > 0 && series.historical[t].timestamp != series.historical[t - 1].timestamp + 1) run_start = t;
        if (t + 1 < run_start + span) continue;
        const std::size_t s = t + 1 - span;
        CubeSample sample;
        sample.start_hour = series.historical[s].timestamp;
        for (std::size_t i = 0; i < region.history_len; ++i) sample.history.push_back(series.historical[s + i]);
        for (std::size_t j = 0; j < region.horizon_len; ++j) {
            const std::size_t h = s + region.history_len + j;
            sample.forecast.push_back(series.forecast[h]);
            sample.targets.push_back(series.labels[h]);
            if (!series.truth.empty()) sample.truth.push_back(series.truth[h]);
        }
        out.push_back(std::move(sample));
    }
    if (out.empty() && diagnostic) {
        *diagnostic = "sliding_windows: need at least " + std::to_string(span) + " consecutive hours (n=" +
                      std::to_string(region.history_len) + ", p=" + std::to_string(region.horizon_len) + "), got " +
                      std::to_string(series.hours()) + " hours";
    }
    return out;
}

enum class HeightUnit { Feet, Metres };

/// Indices of levels inside the closed cruising band [31000, 38000] ft.
inline std::vector<std::size_t> altitude_filter(const std::vector<double>& heights, HeightUnit unit,
                                                double low_ft = kCruiseLowFt, double high_ft = kCruiseHighFt) {
    std::vector<std::size_t> keep;
    for (std::size_t k = 0; k < heights.size(); ++k) {
        const double ft = unit == HeightUnit::Feet ? heights[k] : heights[k] * kFeetPerMetre;
        // Guard against metre/foot round-trip noise at the band edges.
        if (ft >= low_ft - 1e-6 && ft <= high_ft + 1e-6) keep.push_back(k);
    }
    if (keep.empty()) {
        throw ConfigError("altitude filter: no level lies within [" + std::to_string(low_ft) + ", " +
                          std::to_string(high_ft) + "] ft");
    }
    return keep;
}

/// Keeps the given vertical levels of an [L,W,H,...] tensor.
template <typename T>
Tensor<T> select_levels(const Tensor<T>& in, const std::vector<std::size_t>& levels) {
    if (in.rank() < 3) throw StructuralError("select_levels: tensor rank must be >= 3");
    const std::size_t L = in.dim(0), W = in.dim(1), H = in.dim(2);
    const std::size_t inner = in.size() / (L * W * H);
    Shape shape = in.shape();
    shape[2] = levels.size();
    Tensor<T> out(shape);
    std::size_t o = 0;
    for (std::size_t ij = 0; ij < L * W; ++ij) {
        for (std::size_t k : levels) {
            if (k >= H) throw StructuralError("select_levels: level index out of range");
            const T* src = in.data() + (ij * H + k) * inner;
            std::copy(src, src + inner, out.data() + o);
            o += inner;
        }
    }
    return out;
}

/// A pilot report already gridded to a cell-hour.
struct PilotReport {
    long hour = 0;
    std::size_t i = 0, j = 0, k = 0;
    int severity = 0;
};

/// Label cubes for hours [first_hour, first_hour + hours). Colliding reports
/// in one cell-hour resolve to the maximum severity.
inline std::vector<LabelCube> grid_reports(const std::vector<PilotReport>& reports, const Shape& label_shape,
                                           long first_hour, std::size_t hours) {
    if (label_shape.size() != 3) throw StructuralError("grid_reports: label shape must be [L,W,H]");
    std::vector<LabelCube> cubes(hours);
    for (std::size_t t = 0; t < hours; ++t) {
        cubes[t].labels = Tensor<std::int8_t>(label_shape, kUnknownLabel);
        cubes[t].timestamp = first_hour + static_cast<long>(t);
    }
    for (const auto& r : reports) {
        if (r.severity < 0 || r.severity >= static_cast<int>(kNumClasses)) {
            throw ValidationError("pilot report with invalid severity " + std::to_string(r.severity));
        }
        if (r.hour < first_hour || r.hour >= first_hour + static_cast<long>(hours)) continue;
        if (r.i >= label_shape[0] || r.j >= label_shape[1] || r.k >= label_shape[2]) {
            throw GeometryError("pilot report outside the grid");
        }
        auto& cell = cubes[static_cast<std::size_t>(r.hour - first_hour)]
                         .labels[(r.i * label_shape[1] + r.j) * label_shape[2] + r.k];
        cell = std::max<std::int8_t>(cell, static_cast<std::int8_t>(r.severity));
    }
    return cubes;
}

/// Raw hourly input before index computation: analysis and NWP-forecast
/// grids on the full vertical column, with labels on the same grid.
struct RawHourlyData {
    std::vector<indexes::RawWeatherGrid> analysis;
    std::vector<indexes::RawWeatherGrid> nwp;
    std::vector<LabelCube> labels;
    std::vector<LabelCube> truth;
    long first_hour = 0;

    std::size_t hours() const noexcept { return analysis.size(); }
};

/// Computes feature cubes, applies the cruising-altitude filter and aligns labels.
inline HourlySeries build_hourly_series(const RawHourlyData& raw) {
    if (raw.nwp.size() != raw.hours() || raw.labels.size() != raw.hours() ||
        (!raw.truth.empty() && raw.truth.size() != raw.hours())) {
        throw StructuralError("raw hourly data: sequences differ in length");
    }
    if (raw.hours() == 0) throw InputError("raw hourly data holds no hours");
    const auto levels = altitude_filter(raw.analysis.front().level_heights, HeightUnit::Metres);
    HourlySeries series;
    for (std::size_t t = 0; t < raw.hours(); ++t) {
        const long ts = raw.first_hour + static_cast<long>(t);
        auto hist = indexes::build_feature_cube(raw.analysis[t], ts, CubeKind::Historical);
        auto fc = indexes::build_feature_cube(raw.nwp[t], ts, CubeKind::NwpForecast);
        hist.data = select_levels(hist.data, levels);
        fc.data = select_levels(fc.data, levels);
        series.historical.push_back(std::move(hist));
        series.forecast.push_back(std::move(fc));
        LabelCube lab{select_levels(raw.labels[t].labels, levels), ts};
        lab.validate();
        series.labels.push_back(std::move(lab));
        if (!raw.truth.empty()) {
            LabelCube tr{select_levels(raw.truth[t].labels, levels), ts};
            tr.validate();
            series.truth.push_back(std::move(tr));
        }
    }
    return series;
}

namespace detail {

inline Tensor<double> stack_raw(const indexes::RawWeatherGrid& g) {
    const std::array<const Tensor<double>*, 6> f = {&g.u_wind,      &g.v_wind,           &g.temperature,
                                                    &g.rel_humidity, &g.vertical_velocity, &g.pressure};
    const std::size_t cells = g.u_wind.size();
    Tensor<double> out({g.nx(), g.ny(), g.nz(), 6});
    for (std::size_t c = 0; c < cells; ++c) {
        for (std::size_t ch = 0; ch < 6; ++ch) out[c * 6 + ch] = (*f[ch])[c];
    }
    return out;
}

inline indexes::RawWeatherGrid unstack_raw(const Tensor<double>& t, const json& meta) {
    if (t.rank() != 4 || t.dim(3) != 6) throw InputError("raw grid array must be [L,W,H,6]");
    indexes::RawWeatherGrid g;
    const Shape s{t.dim(0), t.dim(1), t.dim(2)};
    std::array<Tensor<double>*, 6> f = {&g.u_wind,      &g.v_wind,           &g.temperature,
                                        &g.rel_humidity, &g.vertical_velocity, &g.pressure};
    for (auto* p : f) *p = Tensor<double>(s);
    for (std::size_t c = 0; c < shape_volume(s); ++c) {
        for (std::size_t ch = 0; ch < 6; ++ch) (*f[ch])[c] = t[c * 6 + ch];
    }
    g.cell_dx = meta.at("cell_dx").get<double>();
    g.cell_dy = meta.at("cell_dy").get<double>();
    for (double ft : meta.at("level_heights_ft").get<std::vector<double>>()) g.level_heights.push_back(ft / kFeetPerMetre);
    return g;
}

inline std::string hour_dir(std::size_t t) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "hour_%05zu", t);
    return buf;
}

inline void write_json(const fs::path& path, const json& j) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw InputError("cannot write " + path.string());
    out << j.dump(2) << "\n";
}

inline json read_json(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open " + path.string());
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw InputError(path.string() + ": " + e.what());
    }
}

} // namespace detail

/// Raw hourly directory: manifest.json plus hour_XXXXX/{analysis,nwp}.npy
/// ([L,W,H,6] float64 in u,v,T,RH,omega,P order), labels.npy and optional truth.npy.
/// This is the adapter format for pre-gridded data from external converters.
inline void save_raw(const RawHourlyData& raw, const fs::path& dir) {
    if (raw.hours() == 0) throw InputError("save_raw: no hours");
    fs::create_directories(dir);
    const auto& g0 = raw.analysis.front();
    std::vector<double> heights_ft;
    for (double m : g0.level_heights) heights_ft.push_back(m * kFeetPerMetre);
    json meta = {{"format_version", kFormatVersion}, {"hours", raw.hours()},           {"first_hour", raw.first_hour},
                 {"cell_dx", g0.cell_dx},           {"cell_dy", g0.cell_dy},         {"level_heights_ft", heights_ft},
                 {"has_truth", !raw.truth.empty()}, {"field_order", {"u_wind", "v_wind", "temperature", "rel_humidity",
                                                                     "vertical_velocity", "pressure"}}};
    detail::write_json(dir / "manifest.json", meta);
    for (std::size_t t = 0; t < raw.hours(); ++t) {
        const fs::path h = dir / detail::hour_dir(t);
        fs::create_directories(h);
        npy::save(h / "analysis.npy", detail::stack_raw(raw.analysis[t]));
        npy::save(h / "nwp.npy", detail::stack_raw(raw.nwp[t]));
        npy::save(h / "labels.npy", raw.labels[t].labels);
        if (!raw.truth.empty()) npy::save(h / "truth.npy", raw.truth[t].labels);
    }
}

inline RawHourlyData load_raw(const fs::path& dir) {
    if (!fs::exists(dir / "manifest.json")) throw InputError("no raw manifest in " + dir.string());
    const json meta = detail::read_json(dir / "manifest.json");
    if (meta.value("format_version", 0) != kFormatVersion) throw InputError("unsupported raw format version");
    RawHourlyData raw;
    raw.first_hour = meta.at("first_hour").get<long>();
    const bool has_truth = meta.value("has_truth", false);
    const auto hours = meta.at("hours").get<std::size_t>();
    for (std::size_t t = 0; t < hours; ++t) {
        const fs::path h = dir / detail::hour_dir(t);
        const long ts = raw.first_hour + static_cast<long>(t);
        raw.analysis.push_back(detail::unstack_raw(npy::load<double>(h / "analysis.npy"), meta));
        raw.nwp.push_back(detail::unstack_raw(npy::load<double>(h / "nwp.npy"), meta));
        raw.labels.push_back({npy::load<std::int8_t>(h / "labels.npy"), ts});
        if (has_truth) raw.truth.push_back({npy::load<std::int8_t>(h / "truth.npy"), ts});
    }
    return raw;
}

// ---------------------------------------------------------------- splitting

struct SplitCounts {
    std::size_t train = 0, val = 0, test = 0;
};

/// 6:2:2 partition sizes: floor each share, then hand the leftover samples
/// out by largest fractional remainder (ties go to train, then val).
inline SplitCounts split_counts(std::size_t n) {
    const std::array<double, 3> ratio{0.6, 0.2, 0.2};
    std::array<std::size_t, 3> count{};
    std::array<double, 3> frac{};
    std::size_t used = 0;
    for (std::size_t s = 0; s < 3; ++s) {
        const double exact = ratio[s] * static_cast<double>(n);
        count[s] = static_cast<std::size_t>(std::floor(exact + 1e-9));
        frac[s] = exact - static_cast<double>(count[s]);
        used += count[s];
    }
    std::array<std::size_t, 3> order{0, 1, 2};
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return frac[a] > frac[b]; });
    for (std::size_t r = 0; used < n; ++r, ++used) ++count[order[r % 3]];
    return {count[0], count[1], count[2]};
}

enum class SplitMode { Random, ByTime };

struct SplitIndices {
    std::vector<std::size_t> train, val, test;
};

/// Deterministic seeded shuffle then 60/20/20. ByTime keeps chronological order
/// so validation and test follow the training period.
inline SplitIndices split_indices(std::size_t n, std::uint64_t seed, SplitMode mode = SplitMode::Random) {
    if (n < 5) throw ConfigError("split: need at least 5 samples, got " + std::to_string(n));
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    if (mode == SplitMode::Random) {
        RandomStream rng(seed);
        shuffle_with(order, rng);
    }
    const auto c = split_counts(n);
    SplitIndices out;
    out.train.assign(order.begin(), order.begin() + static_cast<long>(c.train));
    out.val.assign(order.begin() + static_cast<long>(c.train), order.begin() + static_cast<long>(c.train + c.val));
    out.test.assign(order.begin() + static_cast<long>(c.train + c.val), order.end());
    return out;
}

struct DatasetSplits {
    std::vector<CubeSample> train, val, test;

    const std::vector<CubeSample>& by_name(const std::string& name) const {
        if (name == "train") return train;
        if (name == "val") return val;
        if (name == "test") return test;
        throw UsageError("unknown split '" + name + "' (expected train, val or test)");
    }
};

/// Samples must already be in chronological order for ByTime.
inline DatasetSplits split(std::vector<CubeSample> samples, std::uint64_t seed, SplitMode mode = SplitMode::Random) {
    const auto idx = split_indices(samples.size(), seed, mode);
    DatasetSplits out;
    for (auto i : idx.train) out.train.push_back(std::move(samples[i]));
    for (auto i : idx.val) out.val.push_back(std::move(samples[i]));
    for (auto i : idx.test) out.test.push_back(std::move(samples[i]));
    return out;
}

// --------------------------------------------------------------- normalizer

/// Per-channel standardization fitted on training cubes. Heavy-tailed
/// channels (Richardson number, Colson-Panofsky) are passed through asinh first.
struct FeatureNormalizer {
    std::array<double, kNumChannels> mean{};
    std::array<double, kNumChannels> scale{};
    std::array<bool, kNumChannels> asinh{};

    static std::array<bool, kNumChannels> default_asinh() {
        std::array<bool, kNumChannels> a{};
        a[6] = a[7] = true;
        return a;
    }

    static FeatureNormalizer identity() {
        FeatureNormalizer n;
        n.mean.fill(0.0);
        n.scale.fill(1.0);
        n.asinh.fill(false);
        return n;
    }

    static FeatureNormalizer fit(const std::vector<CubeSample>& samples) {
        FeatureNormalizer n;
        n.asinh = default_asinh();
        std::array<double, kNumChannels> sum{}, sq{};
        double count = 0.0;
        auto add = [&](const FeatureCube& cube) {
            if (cube.data.dim(cube.data.rank() - 1) != kNumChannels) throw StructuralError("normalizer: channel count");
            const std::size_t cells = cube.data.size() / kNumChannels;
            for (std::size_t c = 0; c < cells; ++c) {
                for (std::size_t ch = 0; ch < kNumChannels; ++ch) {
                    const double v = n.transform(ch, cube.data[c * kNumChannels + ch]);
                    sum[ch] += v;
                    sq[ch] += v * v;
                }
            }
            count += static_cast<double>(cells);
        };
        for (const auto& s : samples) {
            for (const auto& c : s.history) add(c);
            for (const auto& c : s.forecast) add(c);
        }
        if (count == 0.0) throw ConfigError("normalizer: no training cubes");
        for (std::size_t ch = 0; ch < kNumChannels; ++ch) {
            n.mean[ch] = sum[ch] / count;
            const double var = std::max(0.0, sq[ch] / count - n.mean[ch] * n.mean[ch]);
            n.scale[ch] = var > 1e-30 ? std::sqrt(var) : 1.0;
        }
        return n;
    }

    double transform(std::size_t ch, double v) const { return asinh[ch] ? std::asinh(v) : v; }

    Tensor<float> apply(const Tensor<float>& cube) const {
        Tensor<float> out(cube.shape());
        const std::size_t cells = cube.size() / kNumChannels;
        for (std::size_t c = 0; c < cells; ++c) {
            for (std::size_t ch = 0; ch < kNumChannels; ++ch) {
                const std::size_t at = c * kNumChannels + ch;
                out[at] = static_cast<float>((transform(ch, cube[at]) - mean[ch]) / scale[ch]);
            }
        }
        return out;
    }

    json to_json() const {
        return {{"channels", kChannelNames}, {"mean", mean}, {"scale", scale}, {"asinh", asinh}};
    }

    static FeatureNormalizer from_json(const json& j) {
        FeatureNormalizer n;
        n.mean = j.at("mean").get<std::array<double, kNumChannels>>();
        n.scale = j.at("scale").get<std::array<double, kNumChannels>>();
        n.asinh = j.at("asinh").get<std::array<bool, kNumChannels>>();
        return n;
    }
};

// ------------------------------------------------------------ dataset on disk

struct DatasetManifest {
    RegionSpec region;
    std::size_t train_count = 0, val_count = 0, test_count = 0;
    std::uint64_t seed = 0;
    bool has_truth = false;
    std::string split_mode = "random";
    std::vector<long> train_hours, val_hours, test_hours;  ///< sample start hours per split

    std::size_t total() const noexcept { return train_count + val_count + test_count; }

    /// Each split lies within 1% of its 6:2:2 share, or within one sample
    /// when the total is too small for a 1% tolerance to be satisfiable.
    void validate() const {
        const double n = static_cast<double>(total());
        const double tol = std::max(0.01 * n, 1.0);
        const std::array<std::pair<std::size_t, double>, 3> shares{
            std::pair{train_count, 0.6}, std::pair{val_count, 0.2}, std::pair{test_count, 0.2}};
        for (const auto& [count, ratio] : shares) {
            if (std::abs(static_cast<double>(count) - ratio * n) > tol) {
                throw ValidationError("dataset manifest: split counts deviate from 6:2:2");
            }
        }
    }

    json to_json() const {
        return {{"format_version", kFormatVersion},
                {"region",
                 {{"length", region.length},
                  {"width", region.width},
                  {"height", region.height},
                  {"channels", region.channels},
                  {"history_len", region.history_len},
                  {"horizon_len", region.horizon_len}}},
                {"channel_names", kChannelNames},
                {"classes", kClassNames},
                {"seed", seed},
                {"has_truth", has_truth},
                {"split_mode", split_mode},
                {"splits",
                 {{"train", {{"count", train_count}, {"start_hours", train_hours}}},
                  {"val", {{"count", val_count}, {"start_hours", val_hours}}},
                  {"test", {{"count", test_count}, {"start_hours", test_hours}}}}}};
    }

    static DatasetManifest from_json(const json& j) {
        if (j.value("format_version", 0) != kFormatVersion) {
            throw InputError("dataset manifest: unsupported format_version " + j.value("format_version", json()).dump());
        }
        DatasetManifest m;
        const auto& r = j.at("region");
        m.region.length = r.at("length").get<std::size_t>();
        m.region.width = r.at("width").get<std::size_t>();
        m.region.height = r.at("height").get<std::size_t>();
        m.region.channels = r.at("channels").get<std::size_t>();
        m.region.history_len = r.at("history_len").get<std::size_t>();
        m.region.horizon_len = r.at("horizon_len").get<std::size_t>();
        if (j.at("channel_names").get<std::vector<std::string>>() !=
            std::vector<std::string>(kChannelNames.begin(), kChannelNames.end())) {
            throw InputError("dataset manifest: channel order differs from the expected feature order");
        }
        m.seed = j.at("seed").get<std::uint64_t>();
        m.has_truth = j.value("has_truth", false);
        m.split_mode = j.value("split_mode", "random");
        const auto& s = j.at("splits");
        m.train_count = s.at("train").at("count").get<std::size_t>();
        m.val_count = s.at("val").at("count").get<std::size_t>();
        m.test_count = s.at("test").at("count").get<std::size_t>();
        m.train_hours = s.at("train").at("start_hours").get<std::vector<long>>();
        m.val_hours = s.at("val").at("start_hours").get<std::vector<long>>();
        m.test_hours = s.at("test").at("start_hours").get<std::vector<long>>();
        return m;
    }
};

namespace detail {

inline std::string sample_dir(std::size_t i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "sample_%05zu", i);
    return buf;
}

template <typename T, typename Cube, typename Get>
Tensor<T> stack_cubes(const std::vector<Cube>& cubes, Get get) {
    Shape shape{cubes.size()};
    const auto& first = get(cubes.front());
    shape.insert(shape.end(), first.shape().begin(), first.shape().end());
    Tensor<T> out(shape);
    for (std::size_t i = 0; i < cubes.size(); ++i) {
        const auto& t = get(cubes[i]);
        std::copy(t.values().begin(), t.values().end(), out.slab(i).begin());
    }
    return out;
}

template <typename T>
Tensor<T> unstack(const Tensor<T>& stacked, std::size_t i) {
    const auto span = stacked.slab(i);
    return Tensor<T>(Shape(stacked.shape().begin() + 1, stacked.shape().end()), std::vector<T>(span.begin(), span.end()));
}

inline void write_sample(const CubeSample& s, const fs::path& dir) {
    fs::create_directories(dir);
    npy::save(dir / "history.npy", stack_cubes<float>(s.history, [](const FeatureCube& c) -> const auto& { return c.data; }));
    npy::save(dir / "forecast.npy", stack_cubes<float>(s.forecast, [](const FeatureCube& c) -> const auto& { return c.data; }));
    npy::save(dir / "labels.npy", stack_cubes<std::int8_t>(s.targets, [](const LabelCube& c) -> const auto& { return c.labels; }));
    if (!s.truth.empty()) {
        npy::save(dir / "truth.npy", stack_cubes<std::int8_t>(s.truth, [](const LabelCube& c) -> const auto& { return c.labels; }));
    }
}

inline CubeSample read_sample(const fs::path& dir, const RegionSpec& region, long start_hour, bool has_truth) {
    CubeSample s;
    s.start_hour = start_hour;
    const auto history = npy::load<float>(dir / "history.npy");
    const auto forecast = npy::load<float>(dir / "forecast.npy");
    const auto labels = npy::load<std::int8_t>(dir / "labels.npy");
    Shape hshape{region.history_len};
    Shape fshape{region.horizon_len};
    Shape lshape{region.horizon_len};
    for (auto d : region.feature_shape()) hshape.push_back(d), fshape.push_back(d);
    for (auto d : region.label_shape()) lshape.push_back(d);
    if (history.shape() != hshape || forecast.shape() != fshape || labels.shape() != lshape) {
        throw InputError(dir.string() + ": array shapes do not match the manifest region");
    }
    const long n = static_cast<long>(region.history_len);
    for (std::size_t i = 0; i < region.history_len; ++i) {
        s.history.push_back({unstack(history, i), start_hour + static_cast<long>(i), CubeKind::Historical});
    }
    for (std::size_t j = 0; j < region.horizon_len; ++j) {
        const long ts = start_hour + n + static_cast<long>(j);
        s.forecast.push_back({unstack(forecast, j), ts, CubeKind::NwpForecast});
        s.targets.push_back({unstack(labels, j), ts});
    }
    if (has_truth) {
        const auto truth = npy::load<std::int8_t>(dir / "truth.npy");
        if (truth.shape() != lshape) throw InputError(dir.string() + ": truth shape mismatch");
        for (std::size_t j = 0; j < region.horizon_len; ++j) {
            s.truth.push_back({unstack(truth, j), start_hour + n + static_cast<long>(j)});
        }
    }
    return s;
}

} // namespace detail

/// Writes manifest.json plus {train,val,test}/sample_XXXXX/{history,forecast,labels[,truth]}.npy.
inline DatasetManifest write_dataset(const DatasetSplits& splits, const RegionSpec& region, std::uint64_t seed,
                                     const fs::path& dir, SplitMode mode = SplitMode::Random) {
    DatasetManifest m;
    m.region = region;
    m.seed = seed;
    m.split_mode = mode == SplitMode::Random ? "random" : "by_time";
    m.train_count = splits.train.size();
    m.val_count = splits.val.size();
    m.test_count = splits.test.size();
    auto any_truth = [](const std::vector<CubeSample>& v) { return !v.empty() && !v.front().truth.empty(); };
    m.has_truth = any_truth(splits.train) || any_truth(splits.test);
    const std::array<std::pair<const char*, const std::vector<CubeSample>*>, 3> parts{
        std::pair{"train", &splits.train}, std::pair{"val", &splits.val}, std::pair{"test", &splits.test}};
    for (const auto& [name, samples] : parts) {
        std::vector<long>& hours = std::string(name) == "train" ? m.train_hours
                                   : std::string(name) == "val" ? m.val_hours
                                                                : m.test_hours;
        const fs::path split_dir = dir / name;
        fs::create_directories(split_dir);
        for (std::size_t i = 0; i < samples->size(); ++i) {
            const auto& s = (*samples)[i];
            s.validate(region);
            if (m.has_truth && s.truth.size() != region.horizon_len) {
                throw StructuralError("write_dataset: dense truth present for some samples only");
            }
            hours.push_back(s.start_hour);
            detail::write_sample(s, split_dir / detail::sample_dir(i));
        }
    }
    detail::write_json(dir / "manifest.json", m.to_json());
    return m;
}

inline DatasetManifest read_manifest(const fs::path& dir) {
    if (!fs::exists(dir / "manifest.json")) throw InputError("no dataset manifest in " + dir.string());
    try {
        return DatasetManifest::from_json(detail::read_json(dir / "manifest.json"));
    } catch (const json::exception& e) {
        throw InputError("dataset manifest: " + std::string(e.what()));
    }
}

inline std::vector<CubeSample> read_split(const fs::path& dir, const DatasetManifest& m, const std::string& name) {
    const std::vector<long>& hours = name == "train" ? m.train_hours
                                     : name == "val" ? m.val_hours
                                     : name == "test" ? m.test_hours
                                                      : throw UsageError("unknown split '" + name + "'");
    std::vector<CubeSample> out;
    out.reserve(hours.size());
    for (std::size_t i = 0; i < hours.size(); ++i) {
        auto s = detail::read_sample(dir / name / detail::sample_dir(i), m.region, hours[i], m.has_truth);
        s.validate(m.region);
        out.push_back(std::move(s));
    }
    return out;
}

inline DatasetSplits read_dataset(const fs::path& dir, DatasetManifest* manifest = nullptr) {
    const auto m = read_manifest(dir);
    DatasetSplits s{read_split(dir, m, "train"), read_split(dir, m, "val"), read_split(dir, m, "test")};
    if (manifest) *manifest = m;
    return s;
}

} // namespace t2net::data
