#pragma once

// JSON run configuration shared by every subcommand. Unknown keys are rejected.

#include <t2net/datapipe.hpp>
#include <t2net/error.hpp>
#include <t2net/grid.hpp>
#include <t2net/synthetic.hpp>
#include <t2net/trainer.hpp>

#include <nlohmann/json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>

namespace t2net::config {

using json = nlohmann::json;

struct RunConfig {
    std::uint64_t seed = 7;
    RegionSpec region;
    data::SyntheticConfig synthetic;
    bool split_by_time = false;
    train::TrainConfig train;
    std::string data_dir;
    std::string out_dir;

    void validate() const {
        region.validate();
        if (region.channels != kNumChannels) throw ConfigError("region: channels must be " + std::to_string(kNumChannels));
        synthetic.validate(region);
        train.validate();
    }
};

namespace detail {

inline void require_keys(const json& obj, const std::string& section, const std::set<std::string>& allowed) {
    if (!obj.is_object()) throw ConfigError("config: '" + section + "' must be an object");
    for (const auto& [key, value] : obj.items()) {
        if (!allowed.count(key)) throw ConfigError("config: unknown key '" + key + "' in " + section);
    }
}

template <typename T>
void read(const json& obj, const char* key, T& out) {
    if (!obj.contains(key)) return;
    try {
        out = obj.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: bad value for '") + key + "': " + e.what());
    }
}

} // namespace detail

inline json to_json(const RunConfig& c) {
    const auto& t = c.train;
    const auto& s = c.synthetic;
    return {{"seed", c.seed},
            {"region",
             {{"length", c.region.length},
              {"width", c.region.width},
              {"height", c.region.height},
              {"history_len", c.region.history_len},
              {"horizon_len", c.region.horizon_len}}},
            {"synthetic",
             {{"hours", s.hours},
              {"label_rate", s.label_rate},
              {"smoothness", s.smoothness},
              {"vertical_smoothness", s.vertical_smoothness},
              {"time_correlation", s.time_correlation},
              {"thresholds", s.thresholds},
              {"noise", s.noise},
              {"level_heights_ft", s.level_heights_ft},
              {"cell_spacing", s.cell_spacing}}},
            {"split", {{"by_time", c.split_by_time}}},
            {"model",
             {{"hidden", t.model.hidden},
              {"kernel", {t.model.kernel.length, t.model.kernel.width, t.model.kernel.height}},
              {"decoder", nn::to_string(t.model.decoder)},
              {"tdn_widths", t.model.tdn_widths}}},
            {"train",
             {{"mode", train::to_string(t.mode)},
              {"batch_size", t.batch_size},
              {"tdn_pretrain_epochs", t.tdn_pretrain_epochs},
              {"cotrain_epochs", t.cotrain_epochs},
              {"optimizer", nn::to_string(t.tfn_optimizer.kind)},
              {"tfn_learning_rate", t.tfn_optimizer.learning_rate},
              {"tdn_learning_rate", t.tdn_optimizer.learning_rate},
              {"adam_beta1", t.tfn_optimizer.beta1},
              {"adam_beta2", t.tfn_optimizer.beta2},
              {"adam_epsilon", t.tfn_optimizer.epsilon},
              {"T1", t.t1},
              {"T2", t.t2},
              {"beta", t.beta},
              {"T", t.temperature},
              {"pseudo_threshold", t.pseudo_threshold},
              {"patience", t.patience},
              {"min_epochs", t.min_epochs},
              {"monitor", t.monitor},
              {"alpha_smoothing", t.alpha_smoothing}}},
            {"loss", {{"gamma", t.loss.gamma}, {"lambda", t.loss.lambda}, {"epsilon", t.loss.epsilon}}},
            {"paths", {{"data", c.data_dir}, {"out", c.out_dir}}}};
}

/// Applies a (possibly partial) JSON document on top of the defaults.
inline RunConfig from_json(const json& j) {
    using detail::read;
    RunConfig c;
    detail::require_keys(j, "top level", {"seed", "region", "synthetic", "split", "model", "train", "loss", "paths"});
    read(j, "seed", c.seed);
    if (j.contains("region")) {
        const auto& r = j["region"];
        detail::require_keys(r, "region", {"length", "width", "height", "history_len", "horizon_len"});
        read(r, "length", c.region.length);
        read(r, "width", c.region.width);
        read(r, "height", c.region.height);
        read(r, "history_len", c.region.history_len);
        read(r, "horizon_len", c.region.horizon_len);
    }
    if (j.contains("synthetic")) {
        const auto& s = j["synthetic"];
        detail::require_keys(s, "synthetic",
                             {"hours", "label_rate", "smoothness", "vertical_smoothness", "time_correlation",
                              "thresholds", "noise", "level_heights_ft", "cell_spacing"});
        read(s, "hours", c.synthetic.hours);
        read(s, "label_rate", c.synthetic.label_rate);
        read(s, "smoothness", c.synthetic.smoothness);
        read(s, "vertical_smoothness", c.synthetic.vertical_smoothness);
        read(s, "time_correlation", c.synthetic.time_correlation);
        read(s, "thresholds", c.synthetic.thresholds);
        read(s, "noise", c.synthetic.noise);
        read(s, "level_heights_ft", c.synthetic.level_heights_ft);
        read(s, "cell_spacing", c.synthetic.cell_spacing);
    }
    if (j.contains("split")) {
        detail::require_keys(j["split"], "split", {"by_time"});
        read(j["split"], "by_time", c.split_by_time);
    }
    auto& t = c.train;
    if (j.contains("model")) {
        const auto& m = j["model"];
        detail::require_keys(m, "model", {"hidden", "kernel", "decoder", "tdn_widths"});
        read(m, "hidden", t.model.hidden);
        if (m.contains("kernel")) {
            std::array<std::size_t, 3> k{};
            read(m, "kernel", k);
            t.model.kernel = {k[0], k[1], k[2]};
        }
        if (m.contains("decoder")) t.model.decoder = nn::decoder_mode_from_string(m["decoder"].get<std::string>());
        read(m, "tdn_widths", t.model.tdn_widths);
    }
    if (j.contains("train")) {
        const auto& s = j["train"];
        detail::require_keys(s, "train",
                             {"mode", "batch_size", "tdn_pretrain_epochs", "cotrain_epochs", "optimizer",
                              "tfn_learning_rate", "tdn_learning_rate", "adam_beta1", "adam_beta2", "adam_epsilon", "T1",
                              "T2", "beta", "T", "pseudo_threshold", "patience", "min_epochs", "monitor",
                              "alpha_smoothing"});
        if (s.contains("mode")) t.mode = train::mode_from_string(s["mode"].get<std::string>());
        read(s, "batch_size", t.batch_size);
        read(s, "tdn_pretrain_epochs", t.tdn_pretrain_epochs);
        read(s, "cotrain_epochs", t.cotrain_epochs);
        if (s.contains("optimizer")) {
            t.tfn_optimizer.kind = t.tdn_optimizer.kind = nn::optimizer_from_string(s["optimizer"].get<std::string>());
        }
        read(s, "tfn_learning_rate", t.tfn_optimizer.learning_rate);
        read(s, "tdn_learning_rate", t.tdn_optimizer.learning_rate);
        read(s, "adam_beta1", t.tfn_optimizer.beta1);
        read(s, "adam_beta2", t.tfn_optimizer.beta2);
        read(s, "adam_epsilon", t.tfn_optimizer.epsilon);
        t.tdn_optimizer.beta1 = t.tfn_optimizer.beta1;
        t.tdn_optimizer.beta2 = t.tfn_optimizer.beta2;
        t.tdn_optimizer.epsilon = t.tfn_optimizer.epsilon;
        read(s, "T1", t.t1);
        read(s, "T2", t.t2);
        read(s, "beta", t.beta);
        read(s, "T", t.temperature);
        read(s, "pseudo_threshold", t.pseudo_threshold);
        read(s, "patience", t.patience);
        read(s, "min_epochs", t.min_epochs);
        read(s, "monitor", t.monitor);
        read(s, "alpha_smoothing", t.alpha_smoothing);
    }
    if (j.contains("loss")) {
        const auto& l = j["loss"];
        detail::require_keys(l, "loss", {"gamma", "lambda", "epsilon"});
        read(l, "gamma", t.loss.gamma);
        read(l, "lambda", t.loss.lambda);
        read(l, "epsilon", t.loss.epsilon);
    }
    if (j.contains("paths")) {
        const auto& p = j["paths"];
        detail::require_keys(p, "paths", {"data", "out"});
        read(p, "data", c.data_dir);
        read(p, "out", c.out_dir);
    }
    c.synthetic.seed = c.seed;
    t.seed = c.seed;
    c.synthetic.length = c.region.length;
    c.synthetic.width = c.region.width;
    return c;
}

/// Sets the run seed everywhere it is consumed.
inline void set_seed(RunConfig& c, std::uint64_t seed) {
    c.seed = seed;
    c.synthetic.seed = seed;
    c.train.seed = seed;
}

/// T2NET_SEED, when set, replaces the configured seed.
inline void apply_environment(RunConfig& c) {
    if (const char* env = std::getenv("T2NET_SEED"); env && *env) {
        char* end = nullptr;
        const unsigned long long v = std::strtoull(env, &end, 10);
        if (end == env || *end != '\0') throw ConfigError(std::string("T2NET_SEED is not an integer: ") + env);
        set_seed(c, v);
    }
}

/// Reads a config file (empty path means defaults), applies T2NET_SEED and validates.
inline RunConfig load(const std::filesystem::path& path) {
    json j = json::object();
    if (!path.empty()) {
        std::ifstream in(path);
        if (!in) throw InputError("cannot open config " + path.string());
        try {
            j = json::parse(in);
        } catch (const json::exception& e) {
            throw ConfigError("config " + path.string() + ": " + e.what());
        }
    }
    RunConfig c = from_json(j);
    apply_environment(c);
    c.validate();
    return c;
}

} // namespace t2net::config
