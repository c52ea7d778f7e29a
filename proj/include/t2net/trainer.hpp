#pragma once

#include <t2net/datapipe.hpp>
#include <t2net/dlg.hpp>
#include <t2net/error.hpp>
#include <t2net/grid.hpp>
#include <t2net/losses.hpp>
#include <t2net/metrics.hpp>
#include <t2net/nn/checkpoint.hpp>
#include <t2net/nn/optimizer.hpp>
#include <t2net/nn/tdn.hpp>
#include <t2net/nn/tfn.hpp>
#include <t2net/rng.hpp>

#include <nlohmann/json.hpp>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

namespace t2net::train {

namespace fs = std::filesystem;
using json = nlohmann::json;

enum class TrainMode { T2Net, Supervised, HardPseudo };

inline const char* to_string(TrainMode m) {
    switch (m) {
    case TrainMode::T2Net: return "t2net";
    case TrainMode::Supervised: return "supervised";
    case TrainMode::HardPseudo: return "hard-pseudo";
    }
    return "?";
}

inline TrainMode mode_from_string(const std::string& s) {
    if (s == "t2net") return TrainMode::T2Net;
    if (s == "supervised") return TrainMode::Supervised;
    if (s == "hard-pseudo" || s == "hard_pseudo") return TrainMode::HardPseudo;
    throw ConfigError("unknown training mode '" + s + "' (expected t2net, supervised or hard-pseudo)");
}

struct ModelConfig {
    std::size_t hidden = 32;
    nn::KernelSize kernel{3, 3, 3};
    nn::DecoderMode decoder = nn::DecoderMode::FeatureFed;
    std::array<std::size_t, 3> tdn_widths{16, 16, 16};

    nn::TfnShape tfn_shape(const RegionSpec& r) const {
        return {{r.length, r.width, r.height}, r.channels, hidden, kernel, decoder == nn::DecoderMode::LabelFed};
    }
    nn::TdnShape tdn_shape(const RegionSpec& r) const {
        nn::TdnShape s;
        s.grid = {r.length, r.width, r.height};
        s.channels = r.channels;
        s.widths = tdn_widths;
        return s;
    }
};

struct TrainConfig {
    TrainMode mode = TrainMode::T2Net;
    ModelConfig model;
    std::size_t batch_size = 8;
    std::size_t tdn_pretrain_epochs = 5;
    std::size_t cotrain_epochs = 30;
    nn::OptimizerConfig tfn_optimizer;
    nn::OptimizerConfig tdn_optimizer;
    long t1 = 5;
    long t2 = 15;
    double beta = 0.6;
    double temperature = 0.5;
    losses::LossConfig loss;
    double pseudo_threshold = 0.8;
    std::uint64_t seed = 0;
    std::size_t patience = 10;
    std::size_t min_epochs = 15;        ///< early stopping never fires before this epoch
    std::string monitor = "weighted_f1";  ///< or "loss" (validation supervised loss)
    bool alpha_smoothing = true;        ///< add-one class counts, only when a class has no label

    void validate() const {
        if (batch_size == 0) throw ConfigError("train: batch_size must be >= 1");
        if (model.hidden == 0) throw ConfigError("model: hidden size must be >= 1");
        if (!model.kernel.odd()) throw ConfigError("model: kernel extents must be odd");
        for (auto w : model.tdn_widths) {
            if (w == 0) throw ConfigError("model: TDN widths must be >= 1");
        }
        tfn_optimizer.validate();
        tdn_optimizer.validate();
        loss.validate();
        dlg::DlgSchedule{1, t1, t2, beta, RandomStream{}}.validate();
        if (!(temperature > 0.0)) throw ConfigError("train: sharpening temperature must be > 0");
        if (!(pseudo_threshold > 0.0 && pseudo_threshold <= 1.0)) {
            throw ConfigError("train: pseudo_threshold must lie in (0, 1]");
        }
        if (monitor != "weighted_f1" && monitor != "loss") {
            throw ConfigError("train: monitor must be weighted_f1 or loss");
        }
    }

    json to_json() const {
        return {{"mode", to_string(mode)},
                {"hidden", model.hidden},
                {"kernel", {model.kernel.length, model.kernel.width, model.kernel.height}},
                {"decoder", nn::to_string(model.decoder)},
                {"tdn_widths", model.tdn_widths},
                {"batch_size", batch_size},
                {"tdn_pretrain_epochs", tdn_pretrain_epochs},
                {"cotrain_epochs", cotrain_epochs},
                {"optimizer", nn::to_string(tfn_optimizer.kind)},
                {"tfn_learning_rate", tfn_optimizer.learning_rate},
                {"tdn_learning_rate", tdn_optimizer.learning_rate},
                {"adam_beta1", tfn_optimizer.beta1},
                {"adam_beta2", tfn_optimizer.beta2},
                {"adam_epsilon", tfn_optimizer.epsilon},
                {"T1", t1},
                {"T2", t2},
                {"beta", beta},
                {"T", temperature},
                {"lambda", loss.lambda},
                {"gamma", loss.gamma},
                {"focal_epsilon", loss.epsilon},
                {"pseudo_threshold", pseudo_threshold},
                {"seed", seed},
                {"patience", patience},
                {"min_epochs", min_epochs},
                {"monitor", monitor},
                {"alpha_smoothing", alpha_smoothing}};
    }

    static TrainConfig from_json(const json& j) {
        TrainConfig c;
        c.mode = mode_from_string(j.at("mode").get<std::string>());
        c.model.hidden = j.at("hidden").get<std::size_t>();
        const auto k = j.at("kernel").get<std::array<std::size_t, 3>>();
        c.model.kernel = {k[0], k[1], k[2]};
        c.model.decoder = nn::decoder_mode_from_string(j.at("decoder").get<std::string>());
        c.model.tdn_widths = j.at("tdn_widths").get<std::array<std::size_t, 3>>();
        c.batch_size = j.at("batch_size").get<std::size_t>();
        c.tdn_pretrain_epochs = j.at("tdn_pretrain_epochs").get<std::size_t>();
        c.cotrain_epochs = j.at("cotrain_epochs").get<std::size_t>();
        c.tfn_optimizer.kind = c.tdn_optimizer.kind = nn::optimizer_from_string(j.at("optimizer").get<std::string>());
        c.tfn_optimizer.learning_rate = j.at("tfn_learning_rate").get<double>();
        c.tdn_optimizer.learning_rate = j.at("tdn_learning_rate").get<double>();
        c.tfn_optimizer.beta1 = c.tdn_optimizer.beta1 = j.at("adam_beta1").get<double>();
        c.tfn_optimizer.beta2 = c.tdn_optimizer.beta2 = j.at("adam_beta2").get<double>();
        c.tfn_optimizer.epsilon = c.tdn_optimizer.epsilon = j.at("adam_epsilon").get<double>();
        c.t1 = j.at("T1").get<long>();
        c.t2 = j.at("T2").get<long>();
        c.beta = j.at("beta").get<double>();
        c.temperature = j.at("T").get<double>();
        c.loss.lambda = j.at("lambda").get<double>();
        c.loss.gamma = j.at("gamma").get<double>();
        c.loss.epsilon = j.at("focal_epsilon").get<double>();
        c.pseudo_threshold = j.at("pseudo_threshold").get<double>();
        c.seed = j.at("seed").get<std::uint64_t>();
        c.patience = j.at("patience").get<std::size_t>();
        c.min_epochs = j.at("min_epochs").get<std::size_t>();
        c.monitor = j.at("monitor").get<std::string>();
        c.alpha_smoothing = j.at("alpha_smoothing").get<bool>();
        return c;
    }
};

/// Independent reproducible sub-stream seeds (splitmix64 finalizer).
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

enum Stream : std::uint64_t { kTfnInit = 1, kTdnInit = 2, kShuffle = 3, kDlg = 4, kPretrainShuffle = 5 };

/// A sample with normalized float features, ready for the networks.
struct PreparedSample {
    std::vector<Tensor<float>> history;
    std::vector<Tensor<float>> forecast;
    std::vector<LabelCube> targets;
    std::vector<LabelCube> truth;
    long start_hour = 0;
};

inline std::vector<PreparedSample> prepare(const std::vector<CubeSample>& samples, const data::FeatureNormalizer& norm) {
    std::vector<PreparedSample> out;
    out.reserve(samples.size());
    for (const auto& s : samples) {
        PreparedSample p;
        p.start_hour = s.start_hour;
        for (const auto& c : s.history) p.history.push_back(norm.apply(c.data));
        for (const auto& c : s.forecast) p.forecast.push_back(norm.apply(c.data));
        p.targets = s.targets;
        p.truth = s.truth;
        out.push_back(std::move(p));
    }
    return out;
}

struct TrainingData {
    RegionSpec region;
    data::FeatureNormalizer normalizer;
    std::vector<PreparedSample> train, val, test;
};

/// Fits the normalizer on the training split and prepares every split.
inline TrainingData prepare_data(const data::DatasetSplits& splits, const RegionSpec& region) {
    if (splits.train.empty()) throw ConfigError("training split is empty");
    TrainingData d;
    d.region = region;
    d.normalizer = data::FeatureNormalizer::fit(splits.train);
    d.train = prepare(splits.train, d.normalizer);
    d.val = prepare(splits.val, d.normalizer);
    d.test = prepare(splits.test, d.normalizer);
    return d;
}

inline std::vector<LabelCube> training_label_cubes(const std::vector<PreparedSample>& train) {
    std::vector<LabelCube> cubes;
    for (const auto& s : train) cubes.insert(cubes.end(), s.targets.begin(), s.targets.end());
    return cubes;
}

/// Class weights from the training split's labeled cells; add-one counts only
/// when some class is absent and smoothing is enabled.
inline losses::ClassWeights training_class_weights(const std::vector<PreparedSample>& train, bool smoothing) {
    const auto cubes = training_label_cubes(train);
    std::array<std::int64_t, kNumClasses> counts{};
    for (const auto& c : cubes) {
        for (auto v : c.labels.values()) {
            if (v >= 0) ++counts[static_cast<std::size_t>(v)];
        }
    }
    const bool missing = std::find(counts.begin(), counts.end(), 0) != counts.end();
    return losses::class_weights(cubes, smoothing && missing);
}

// ------------------------------------------------------------------ forecast

struct Forecast {
    Tensor<float> probs;                          ///< [p,L,W,H,4]
    std::vector<Tensor<std::int8_t>> classes;     ///< p argmax cubes
};

/// Feature-fed decoding; per-cell class is the argmax.
inline Forecast forecast(const nn::TfnParams<float>& params, const std::vector<Tensor<float>>& history,
                         const std::vector<Tensor<float>>& forecast_features) {
    const auto shape = params.shape();
    const Shape expected{shape.grid.length, shape.grid.width, shape.grid.height, shape.channels};
    for (const auto* seq : {&history, &forecast_features}) {
        for (const auto& t : *seq) require_same_shape(t.shape(), expected, "forecast: feature cube");
    }
    Forecast f;
    f.probs = nn::tfn_forward(params, history, forecast_features, nn::DecoderMode::FeatureFed);
    const std::size_t cells = shape.grid.cells();
    for (std::size_t j = 0; j < forecast_features.size(); ++j) {
        Tensor<std::int8_t> cls({shape.grid.length, shape.grid.width, shape.grid.height});
        const auto slab = f.probs.slab(j);
        for (std::size_t c = 0; c < cells; ++c) {
            const auto* p = slab.data() + c * kNumClasses;
            cls[c] = static_cast<std::int8_t>(std::max_element(p, p + kNumClasses) - p);
        }
        f.classes.push_back(std::move(cls));
    }
    return f;
}

enum class LabelSource { Sparse, Truth };

/// Forecast every sample and score against sparse labels or dense truth.
inline metrics::EvalReport evaluate_tfn(const nn::TfnParams<float>& params, const std::vector<PreparedSample>& samples,
                                        LabelSource source, double* mean_focal = nullptr,
                                        const losses::LossConfig& loss = {}) {
    std::vector<std::vector<Tensor<std::int8_t>>> preds;
    std::vector<std::vector<LabelCube>> targets;
    double focal = 0.0;
    for (const auto& s : samples) {
        if (source == LabelSource::Truth && s.truth.empty()) {
            throw InputError("evaluation against dense truth requested but the dataset has none");
        }
        auto f = forecast(params, s.history, s.forecast);
        if (mean_focal) focal += losses::supervised_loss_sample(f.probs, s.targets, loss, 1.0 / s.targets.size());
        preds.push_back(std::move(f.classes));
        targets.push_back(source == LabelSource::Truth ? s.truth : s.targets);
    }
    if (mean_focal) *mean_focal = samples.empty() ? 0.0 : focal / static_cast<double>(samples.size());
    auto report = metrics::evaluate_sequences(preds, targets);
    report.label_source = source == LabelSource::Truth ? "dense_truth" : "sparse_labels";
    return report;
}

// ---------------------------------------------------------------- pretraining

/// Supervised focal-loss training of the detection network on
/// (forecast cube, label cube) pairs. Returns the per-epoch mean batch loss.
inline nn::TdnParams<float> pretrain_tdn(const TrainConfig& cfg, const RegionSpec& region,
                                         const std::vector<PreparedSample>& train,
                                         std::vector<double>* epoch_losses = nullptr) {
    cfg.validate();
    if (train.empty()) throw ConfigError("pretrain_tdn: training split is empty");
    std::size_t labeled = 0;
    for (const auto& s : train) {
        for (const auto& c : s.targets) {
            for (auto v : c.labels.values()) labeled += v >= 0;
        }
    }
    if (labeled == 0) throw ConfigError("pretrain_tdn: the training split has no labeled cells");
    RandomStream init(derive_seed(cfg.seed, kTdnInit));
    auto tdn = nn::TdnParams<float>::create(cfg.model.tdn_shape(region), init);
    nn::Optimizer<nn::TdnParams<float>> opt(cfg.tdn_optimizer, tdn);
    RandomStream shuffle(derive_seed(cfg.seed, kPretrainShuffle));
    std::vector<std::size_t> order(train.size());
    for (std::size_t e = 0; e < cfg.tdn_pretrain_epochs; ++e) {
        std::iota(order.begin(), order.end(), 0);
        shuffle_with(order, shuffle);
        double total = 0.0;
        std::size_t batches = 0;
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const std::size_t end = std::min(order.size(), start + cfg.batch_size);
            auto grads = tdn;
            nn::zero_parameters(grads);
            double loss = 0.0;
            for (std::size_t b = start; b < end; ++b) {
                const auto& s = train[order[b]];
                const double scale = 1.0 / static_cast<double>((end - start) * s.forecast.size());
                for (std::size_t j = 0; j < s.forecast.size(); ++j) {
                    nn::TdnCache<float> cache;
                    const auto probs = nn::tdn_forward(tdn, s.forecast[j], &cache);
                    Tensor<float> d(probs.shape(), 0.0f);
                    loss += losses::supervised_loss_sample(probs, {s.targets[j]}, cfg.loss, scale, &d);
                    nn::tdn_backward(tdn, cache, d, grads);
                }
            }
            if (!std::isfinite(loss)) throw NumericalError("pretrain_tdn: non-finite detection focal loss");
            opt.step(tdn, grads);
            total += loss;
            ++batches;
        }
        if (epoch_losses) epoch_losses->push_back(total / static_cast<double>(batches));
    }
    nn::require_finite(tdn, "pretrain_tdn");
    return tdn;
}

/// Detection accuracy of the TDN over labeled cells.
inline double tdn_labeled_accuracy(const nn::TdnParams<float>& tdn, const std::vector<PreparedSample>& samples) {
    std::vector<Tensor<std::int8_t>> preds;
    std::vector<LabelCube> targets;
    for (const auto& s : samples) {
        for (std::size_t j = 0; j < s.forecast.size(); ++j) {
            const auto probs = nn::tdn_forward(tdn, s.forecast[j]);
            Tensor<std::int8_t> cls(s.targets[j].labels.shape());
            for (std::size_t c = 0; c < cls.size(); ++c) {
                const float* p = probs.data() + c * kNumClasses;
                cls[c] = static_cast<std::int8_t>(std::max_element(p, p + kNumClasses) - p);
            }
            preds.push_back(std::move(cls));
            targets.push_back(s.targets[j]);
        }
    }
    return metrics::evaluate(preds, targets).accuracy;
}

// ------------------------------------------------------------------ co-training

struct BatchLosses {
    double supervised = 0.0;    ///< L_s
    double unsupervised = 0.0;  ///< L_u (hard-pseudo loss in that mode)
    double total = 0.0;         ///< L_s + lambda L_u
    double detection = 0.0;     ///< TDN focal loss
    std::size_t pseudo_cells = 0;
};

struct EpochRecord {
    long epoch = 0;
    double tau = 0.0;
    double supervised = 0.0;
    double unsupervised = 0.0;
    double total = 0.0;
    double detection = 0.0;
    double val_accuracy = std::numeric_limits<double>::quiet_NaN();
    double val_weighted_f1 = std::numeric_limits<double>::quiet_NaN();
    double val_loss = std::numeric_limits<double>::quiet_NaN();
    double wall_time = 0.0;
    bool improved = false;

    json to_json() const {
        auto num = [](double v) { return std::isfinite(v) ? json(v) : json(nullptr); };
        return {{"epoch", epoch},
                {"tau", tau},
                {"L_s", supervised},
                {"L_u", unsupervised},
                {"L", total},
                {"L_tdn", detection},
                {"val_accuracy", num(val_accuracy)},
                {"val_weighted_f1", num(val_weighted_f1)},
                {"val_loss", num(val_loss)},
                {"wall_time", wall_time},
                {"improved", improved}};
    }

    static EpochRecord from_json(const json& j) {
        auto num = [](const json& v) { return v.is_null() ? std::numeric_limits<double>::quiet_NaN() : v.get<double>(); };
        EpochRecord r;
        r.epoch = j.at("epoch").get<long>();
        r.tau = j.at("tau").get<double>();
        r.supervised = j.at("L_s").get<double>();
        r.unsupervised = j.at("L_u").get<double>();
        r.total = j.at("L").get<double>();
        r.detection = j.at("L_tdn").get<double>();
        r.val_accuracy = num(j.at("val_accuracy"));
        r.val_weighted_f1 = num(j.at("val_weighted_f1"));
        r.val_loss = num(j.at("val_loss"));
        r.wall_time = j.at("wall_time").get<double>();
        r.improved = j.at("improved").get<bool>();
        return r;
    }
};

inline constexpr int kCheckpointVersion = 1;

/// Owns both networks, their optimizers and every random stream of a run.
/// Batches are drawn from a per-epoch seeded permutation; the epoch counter drives tau.
class CoTrainer {
public:
    CoTrainer(TrainConfig cfg, const TrainingData& data, nn::TfnParams<float> tfn, nn::TdnParams<float> tdn)
        : cfg_(std::move(cfg)), data_(&data), tfn_(std::move(tfn)), tdn_(std::move(tdn)), best_tfn_(tfn_),
          tfn_opt_(cfg_.tfn_optimizer, tfn_), tdn_opt_(cfg_.tdn_optimizer, tdn_),
          shuffle_(derive_seed(cfg_.seed, kShuffle)) {
        cfg_.validate();
        if (data.train.empty()) throw ConfigError("cotrain: training split is empty");
        schedule_ = dlg::DlgSchedule{1, cfg_.t1, cfg_.t2, cfg_.beta, RandomStream(derive_seed(cfg_.seed, kDlg))};
        weights_ = cfg_.mode == TrainMode::T2Net ? training_class_weights(data.train, cfg_.alpha_smoothing)
                                                 : losses::ClassWeights::uniform();
    }

    /// Fresh run: seeded TFN initialization, TDN pretraining in t2net mode.
    static CoTrainer create(const TrainConfig& cfg, const TrainingData& data) {
        cfg.validate();
        RandomStream init(derive_seed(cfg.seed, kTfnInit));
        auto tfn = nn::TfnParams<float>::create(cfg.model.tfn_shape(data.region), init);
        nn::TdnParams<float> tdn;
        if (cfg.mode == TrainMode::T2Net) {
            tdn = pretrain_tdn(cfg, data.region, data.train);
        } else {
            RandomStream tdn_init(derive_seed(cfg.seed, kTdnInit));
            tdn = nn::TdnParams<float>::create(cfg.model.tdn_shape(data.region), tdn_init);
        }
        return CoTrainer(cfg, data, std::move(tfn), std::move(tdn));
    }

    const TrainConfig& config() const noexcept { return cfg_; }
    const nn::TfnParams<float>& tfn() const noexcept { return tfn_; }
    const nn::TdnParams<float>& tdn() const noexcept { return tdn_; }
    const nn::TfnParams<float>& best_tfn() const noexcept { return best_tfn_; }
    const losses::ClassWeights& class_weights() const noexcept { return weights_; }
    const std::vector<EpochRecord>& log() const noexcept { return log_; }
    long epoch() const noexcept { return epoch_; }
    long best_epoch() const noexcept { return best_epoch_; }
    std::size_t cursor() const noexcept { return cursor_; }
    bool stopped_early() const noexcept { return stopped_; }
    bool done() const noexcept { return stopped_ || epoch_ > static_cast<long>(cfg_.cotrain_epochs); }
    bool epoch_finished() const noexcept { return !order_.empty() && cursor_ >= order_.size(); }
    double tau() const {
        auto s = schedule_;
        s.epoch = epoch_;
        return dlg::tau(s);
    }

    /// One optimizer step on the next batch of the current epoch.
    BatchLosses train_batch() {
        if (done()) throw UsageError("cotrain: training already finished");
        if (epoch_finished()) throw UsageError("cotrain: epoch finished, call finish_epoch()");
        const auto t0 = std::chrono::steady_clock::now();
        const auto& train = data_->train;
        if (order_.empty()) {
            order_.resize(train.size());
            std::iota(order_.begin(), order_.end(), 0);
            shuffle_with(order_, shuffle_);
        }
        const std::size_t end = std::min(order_.size(), cursor_ + cfg_.batch_size);
        const std::size_t steps = train.front().targets.size();
        const double scale = 1.0 / static_cast<double>((end - cursor_) * steps);
        const double lambda = cfg_.loss.lambda;
        const bool t2net = cfg_.mode == TrainMode::T2Net;
        const bool hard = cfg_.mode == TrainMode::HardPseudo && epoch_ >= cfg_.t1;
        const bool label_fed = cfg_.model.decoder == nn::DecoderMode::LabelFed;
        schedule_.epoch = epoch_;

        auto g_tfn = tfn_;
        nn::zero_parameters(g_tfn);
        auto g_tdn = tdn_;
        if (t2net) nn::zero_parameters(g_tdn);

        BatchLosses out;
        for (std::size_t b = cursor_; b < end; ++b) {
            const auto& s = train[order_[b]];
            nn::TfnCache<float> cache;
            const auto p_tfn = nn::tfn_forward(tfn_, s.history, s.forecast, cfg_.model.decoder,
                                               label_fed ? &s.targets : nullptr, &cache);
            Tensor<float> d(p_tfn.shape(), 0.0f);
            out.supervised += losses::supervised_loss_sample(p_tfn, s.targets, cfg_.loss, scale, &d);
            if (t2net) {
                std::vector<nn::TdnCache<float>> tcache(steps);
                Tensor<float> p_tdn(p_tfn.shape());
                for (std::size_t j = 0; j < steps; ++j) {
                    const auto pj = nn::tdn_forward(tdn_, s.forecast[j], &tcache[j]);
                    std::copy(pj.values().begin(), pj.values().end(), p_tdn.slab(j).begin());
                }
                const auto pseudo = dlg::guess_labels(p_tdn, p_tfn, s.targets, schedule_, cfg_.temperature);
                out.pseudo_cells += pseudo.unlabeled_cells;
                Tensor<float> du(p_tfn.shape(), 0.0f);
                out.unsupervised += losses::unsupervised_loss_sample(p_tfn, pseudo, s.targets, weights_, scale, &du);
                for (std::size_t i = 0; i < d.size(); ++i) d[i] += static_cast<float>(lambda) * du[i];
                for (std::size_t j = 0; j < steps; ++j) {
                    Tensor<float> dt(tcache[j].probs.shape(), 0.0f);
                    out.detection +=
                        losses::supervised_loss_sample(tcache[j].probs, {s.targets[j]}, cfg_.loss, scale, &dt);
                    nn::tdn_backward(tdn_, tcache[j], dt, g_tdn);
                }
            } else if (hard) {
                Tensor<float> du(p_tfn.shape(), 0.0f);
                out.unsupervised += losses::hard_pseudo_loss_sample(p_tfn, s.targets, cfg_.pseudo_threshold, cfg_.loss,
                                                                    scale, &du, &out.pseudo_cells);
                for (std::size_t i = 0; i < d.size(); ++i) d[i] += static_cast<float>(lambda) * du[i];
            }
            nn::tfn_backward(tfn_, cache, d, g_tfn);
        }
        out.total = losses::total_loss(out.supervised, out.unsupervised, lambda);
        const long batch_no = static_cast<long>(cursor_ / cfg_.batch_size) + 1;
        auto where = [&] { return " (epoch " + std::to_string(epoch_) + ", batch " + std::to_string(batch_no) + ")"; };
        if (!std::isfinite(out.supervised)) throw NumericalError("non-finite supervised loss L_s" + where());
        if (!std::isfinite(out.unsupervised)) throw NumericalError("non-finite unsupervised loss L_u" + where());
        if (!std::isfinite(out.detection)) throw NumericalError("non-finite TDN detection loss" + where());
        nn::require_finite(g_tfn, "TFN gradient" + where());
        tfn_opt_.step(tfn_, g_tfn);
        if (t2net) {
            nn::require_finite(g_tdn, "TDN gradient" + where());
            tdn_opt_.step(tdn_, g_tdn);
        }

        cursor_ = end;
        sums_.supervised += out.supervised;
        sums_.unsupervised += out.unsupervised;
        sums_.total += out.total;
        sums_.detection += out.detection;
        ++batches_;
        wall_ += std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        return out;
    }

    /// Validation, logging and early-stopping bookkeeping for the finished epoch.
    EpochRecord finish_epoch() {
        if (!epoch_finished()) throw UsageError("cotrain: epoch not finished");
        const auto t0 = std::chrono::steady_clock::now();
        EpochRecord r;
        r.epoch = epoch_;
        r.tau = tau();
        const double nb = static_cast<double>(std::max<std::size_t>(batches_, 1));
        r.supervised = sums_.supervised / nb;
        r.unsupervised = sums_.unsupervised / nb;
        r.total = sums_.total / nb;
        r.detection = sums_.detection / nb;
        if (!data_->val.empty()) {
            try {
                double vloss = 0.0;
                const auto report = evaluate_tfn(tfn_, data_->val, LabelSource::Sparse, &vloss, cfg_.loss);
                r.val_accuracy = report.accuracy;
                r.val_weighted_f1 = report.weighted_f1;
                r.val_loss = vloss;
            } catch (const EmptyReportError&) {
            }
        }
        const double score = cfg_.monitor == "loss" ? -r.val_loss : r.val_weighted_f1;
        if (std::isfinite(score) && (best_epoch_ == 0 || score > best_score_)) {
            best_score_ = score;
            best_epoch_ = epoch_;
            best_tfn_ = tfn_;
            bad_epochs_ = 0;
            r.improved = true;
        } else {
            ++bad_epochs_;
        }
        if (best_epoch_ == 0) best_tfn_ = tfn_;
        wall_ += std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        r.wall_time = wall_;
        log_.push_back(r);
        if (static_cast<std::size_t>(epoch_) >= cfg_.min_epochs && bad_epochs_ >= cfg_.patience) stopped_ = true;
        ++epoch_;
        cursor_ = 0;
        order_.clear();
        sums_ = {};
        batches_ = 0;
        return r;
    }

    /// Runs to completion (or early stop), calling `on_epoch` after each epoch.
    void run(const std::function<void(const EpochRecord&)>& on_epoch = {}) {
        while (!done()) {
            while (!epoch_finished()) train_batch();
            const auto r = finish_epoch();
            if (on_epoch) on_epoch(r);
        }
    }

    /// Complete training state: parameters, moments, streams, cursor and log.
    void save(const fs::path& dir) const {
        fs::create_directories(dir);
        nn::save_parameters(tfn_, dir / "tfn");
        nn::save_parameters(tdn_, dir / "tdn");
        nn::save_parameters(best_tfn_, dir / "best_tfn");
        nn::save_parameters(tfn_opt_.first_moment(), dir / "tfn_adam_m");
        nn::save_parameters(tfn_opt_.second_moment(), dir / "tfn_adam_v");
        nn::save_parameters(tdn_opt_.first_moment(), dir / "tdn_adam_m");
        nn::save_parameters(tdn_opt_.second_moment(), dir / "tdn_adam_v");
        json log = json::array();
        for (const auto& r : log_) log.push_back(r.to_json());
        json state = {{"format_version", kCheckpointVersion},
                      {"kind", "training_state"},
                      {"config", cfg_.to_json()},
                      {"region", region_json(data_->region)},
                      {"normalizer", data_->normalizer.to_json()},
                      {"class_weights", {{"alpha", weights_.alpha}, {"counts", weights_.counts}}},
                      {"epoch", epoch_},
                      {"cursor", cursor_},
                      {"order", order_},
                      {"rng", {{"shuffle", shuffle_.serialize()}, {"dlg", schedule_.rng.serialize()}}},
                      {"optimizer_steps", {{"tfn", tfn_opt_.steps()}, {"tdn", tdn_opt_.steps()}}},
                      {"epoch_sums",
                       {sums_.supervised, sums_.unsupervised, sums_.total, sums_.detection, static_cast<double>(batches_)}},
                      {"wall_time", wall_},
                      {"best", {{"score", std::isfinite(best_score_) ? json(best_score_) : json(nullptr)}, {"epoch", best_epoch_}, {"bad_epochs", bad_epochs_}}},
                      {"stopped", stopped_},
                      {"log", log}};
        data::detail::write_json(dir / "state.json", state);
    }

    /// Restores a state written by save(); the trainer must have been built
    /// with the same configuration and data.
    void load(const fs::path& dir) {
        const json state = data::detail::read_json(dir / "state.json");
        if (state.value("format_version", 0) != kCheckpointVersion || state.value("kind", "") != "training_state") {
            throw InputError(dir.string() + " is not a training-state checkpoint");
        }
        if (state.at("config") != cfg_.to_json()) throw InputError("checkpoint configuration differs from this run");
        nn::load_parameters(tfn_, dir / "tfn");
        nn::load_parameters(tdn_, dir / "tdn");
        nn::load_parameters(best_tfn_, dir / "best_tfn");
        nn::load_parameters(tfn_opt_.first_moment(), dir / "tfn_adam_m");
        nn::load_parameters(tfn_opt_.second_moment(), dir / "tfn_adam_v");
        nn::load_parameters(tdn_opt_.first_moment(), dir / "tdn_adam_m");
        nn::load_parameters(tdn_opt_.second_moment(), dir / "tdn_adam_v");
        const auto& cw = state.at("class_weights");
        weights_.alpha = cw.at("alpha").get<losses::Probs>();
        weights_.counts = cw.at("counts").get<std::array<std::int64_t, kNumClasses>>();
        weights_.total = std::accumulate(weights_.counts.begin(), weights_.counts.end(), std::int64_t{0});
        epoch_ = state.at("epoch").get<long>();
        cursor_ = state.at("cursor").get<std::size_t>();
        order_ = state.at("order").get<std::vector<std::size_t>>();
        if (!order_.empty() && order_.size() != data_->train.size()) {
            throw InputError("checkpoint was written for a training split of different size");
        }
        shuffle_.deserialize(state.at("rng").at("shuffle").get<std::string>());
        schedule_.rng.deserialize(state.at("rng").at("dlg").get<std::string>());
        tfn_opt_.set_steps(state.at("optimizer_steps").at("tfn").get<long>());
        tdn_opt_.set_steps(state.at("optimizer_steps").at("tdn").get<long>());
        const auto sums = state.at("epoch_sums").get<std::array<double, 5>>();
        sums_ = {sums[0], sums[1], sums[2], sums[3], 0};
        batches_ = static_cast<std::size_t>(sums[4]);
        wall_ = state.at("wall_time").get<double>();
        const auto& score = state.at("best").at("score");
        best_score_ = score.is_null() ? -std::numeric_limits<double>::infinity() : score.get<double>();
        best_epoch_ = state.at("best").at("epoch").get<long>();
        bad_epochs_ = state.at("best").at("bad_epochs").get<std::size_t>();
        stopped_ = state.at("stopped").get<bool>();
        log_.clear();
        for (const auto& r : state.at("log")) log_.push_back(EpochRecord::from_json(r));
    }

    static json region_json(const RegionSpec& r) {
        return {{"length", r.length},
                {"width", r.width},
                {"height", r.height},
                {"channels", r.channels},
                {"history_len", r.history_len},
                {"horizon_len", r.horizon_len}};
    }

private:
    TrainConfig cfg_;
    const TrainingData* data_;
    nn::TfnParams<float> tfn_;
    nn::TdnParams<float> tdn_;
    nn::TfnParams<float> best_tfn_;
    nn::Optimizer<nn::TfnParams<float>> tfn_opt_;
    nn::Optimizer<nn::TdnParams<float>> tdn_opt_;
    RandomStream shuffle_;
    dlg::DlgSchedule schedule_;
    losses::ClassWeights weights_;
    long epoch_ = 1;
    std::size_t cursor_ = 0;
    std::vector<std::size_t> order_;
    BatchLosses sums_;
    std::size_t batches_ = 0;
    double wall_ = 0.0;
    double best_score_ = -std::numeric_limits<double>::infinity();
    long best_epoch_ = 0;
    std::size_t bad_epochs_ = 0;
    bool stopped_ = false;
    std::vector<EpochRecord> log_;
};

// --------------------------------------------------------------- model files

/// Everything needed to forecast: TFN, TDN, normalizer and the producing config.
struct SavedModel {
    nn::TfnParams<float> tfn;
    nn::TdnParams<float> tdn;
    data::FeatureNormalizer normalizer;
    RegionSpec region;
    TrainConfig config;
    long epoch = 0;
};

inline void save_model(const fs::path& dir, const nn::TfnParams<float>& tfn, const nn::TdnParams<float>& tdn,
                       const TrainingData& data, const TrainConfig& cfg, long epoch) {
    fs::create_directories(dir);
    nn::save_parameters(tfn, dir / "tfn");
    nn::save_parameters(tdn, dir / "tdn");
    json state = {{"format_version", kCheckpointVersion},
                  {"kind", "model"},
                  {"config", cfg.to_json()},
                  {"region", CoTrainer::region_json(data.region)},
                  {"normalizer", data.normalizer.to_json()},
                  {"epoch", epoch}};
    data::detail::write_json(dir / "state.json", state);
}

/// Loads a model from either a model directory or a training-state checkpoint.
inline SavedModel load_model(const fs::path& dir) {
    if (!fs::exists(dir / "state.json")) throw InputError("no checkpoint in " + dir.string());
    const json state = data::detail::read_json(dir / "state.json");
    if (state.value("format_version", 0) != kCheckpointVersion) throw InputError("unsupported checkpoint version");
    try {
        SavedModel m;
        m.config = TrainConfig::from_json(state.at("config"));
        const auto& r = state.at("region");
        m.region.length = r.at("length").get<std::size_t>();
        m.region.width = r.at("width").get<std::size_t>();
        m.region.height = r.at("height").get<std::size_t>();
        m.region.channels = r.at("channels").get<std::size_t>();
        m.region.history_len = r.at("history_len").get<std::size_t>();
        m.region.horizon_len = r.at("horizon_len").get<std::size_t>();
        m.normalizer = data::FeatureNormalizer::from_json(state.at("normalizer"));
        m.epoch = state.at("epoch").get<long>();
        m.tfn = nn::TfnParams<float>::zeros(m.config.model.tfn_shape(m.region));
        m.tdn = nn::TdnParams<float>::zeros(m.config.model.tdn_shape(m.region));
        nn::load_parameters(m.tfn, dir / "tfn");
        nn::load_parameters(m.tdn, dir / "tdn");
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw InputError("checkpoint state.json: " + std::string(e.what()));
    }
}

} // namespace t2net::train
