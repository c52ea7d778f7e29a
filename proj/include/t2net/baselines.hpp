#pragma once

// End-to-end runs: T2-Net, the supervised ConvLSTM baseline and hard pseudo-labeling.

#include <t2net/metrics.hpp>
#include <t2net/trainer.hpp>

#include <functional>

namespace t2net::baselines {

struct RunResult {
    train::TrainConfig config;
    std::vector<train::EpochRecord> log;
    nn::TfnParams<float> best_tfn;
    nn::TdnParams<float> tdn;
    long best_epoch = 0;
    metrics::EvalReport test_report;
};

/// Trains in the configured mode and scores the best-validation TFN on the test split.
inline RunResult run_training(const train::TrainConfig& cfg, const train::TrainingData& data,
                              train::LabelSource test_labels,
                              const std::function<void(const train::EpochRecord&)>& on_epoch = {}) {
    auto trainer = train::CoTrainer::create(cfg, data);
    trainer.run(on_epoch);
    RunResult r;
    r.config = cfg;
    r.log = trainer.log();
    r.best_tfn = trainer.best_tfn();
    r.tdn = trainer.tdn();
    r.best_epoch = trainer.best_epoch();
    r.test_report = train::evaluate_tfn(r.best_tfn, data.test, test_labels);
    r.test_report.config = cfg.to_json();
    return r;
}

inline RunResult run_t2net(train::TrainConfig cfg, const train::TrainingData& data, train::LabelSource test_labels,
                           const std::function<void(const train::EpochRecord&)>& on_epoch = {}) {
    cfg.mode = train::TrainMode::T2Net;
    return run_training(cfg, data, test_labels, on_epoch);
}

/// Same TFN constructor and seed, trained on labeled cells only (lambda = 0, no TDN, no label guessing).
inline RunResult run_supervised_baseline(train::TrainConfig cfg, const train::TrainingData& data,
                                         train::LabelSource test_labels,
                                         const std::function<void(const train::EpochRecord&)>& on_epoch = {}) {
    cfg.mode = train::TrainMode::Supervised;
    cfg.loss.lambda = 0.0;
    return run_training(cfg, data, test_labels, on_epoch);
}

/// Single-model self-training on thresholded argmax pseudo-labels.
inline RunResult run_hard_pseudo_baseline(train::TrainConfig cfg, const train::TrainingData& data,
                                          train::LabelSource test_labels,
                                          const std::function<void(const train::EpochRecord&)>& on_epoch = {}) {
    cfg.mode = train::TrainMode::HardPseudo;
    return run_training(cfg, data, test_labels, on_epoch);
}

} // namespace t2net::baselines
