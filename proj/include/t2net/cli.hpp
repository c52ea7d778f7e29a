#pragma once

// Single-binary command line: synth, indexes, train, eval, forecast, sweep.

#include <t2net/baselines.hpp>
#include <t2net/config.hpp>
#include <t2net/datapipe.hpp>
#include <t2net/error.hpp>
#include <t2net/metrics.hpp>
#include <t2net/npy.hpp>
#include <t2net/synthetic.hpp>
#include <t2net/trainer.hpp>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <spawn.h>
#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

extern char** environ;

namespace t2net::cli {

namespace fs = std::filesystem;
using json = nlohmann::json;

/// Stable process exit codes.
enum ExitCode : int { kOk = 0, kInternal = 1, kInput = 2, kNumerical = 3 };

/// Maps a library exception to its exit code.
inline int exit_code_for(const std::exception& e) {
    if (dynamic_cast<const NumericalError*>(&e)) return kNumerical;
    if (dynamic_cast<const InputError*>(&e) || dynamic_cast<const ConfigError*>(&e) ||
        dynamic_cast<const ValidationError*>(&e) || dynamic_cast<const StructuralError*>(&e) ||
        dynamic_cast<const GeometryError*>(&e) || dynamic_cast<const UsageError*>(&e)) {
        return kInput;
    }
    return kInternal;
}

struct SynthOptions {
    std::string config;
    std::string out;
    std::optional<double> label_rate;
    bool write_raw = false;
    bool split_by_time = false;
};

struct IndexesOptions {
    std::string config;
    std::string raw;
    std::string out;
    bool split_by_time = false;
};

struct TrainOptions {
    std::string config;
    std::string data;
    std::string out;
    std::string mode;
    bool resume = false;
    std::size_t max_epochs = 0;  ///< stop after this many epochs in this invocation (0 = no limit)
};

struct EvalOptions {
    std::string checkpoint;
    std::string data;
    std::string split = "test";
    std::string labels = "sparse";
    std::string out;
};

struct ForecastOptions {
    std::string checkpoint;
    std::string data;
    std::string split = "test";
    std::size_t index = 0;
    std::string out;
};

struct SweepOptions {
    std::string config;
    std::string data;
    std::string out;
    std::string param;
    std::string mode;
    std::size_t parallel = 1;
    bool single = false;  ///< child process of a parallel sweep: one value, written straight into out
};

namespace detail {

inline void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write " + path.string());
    out << text;
    if (!out) throw InputError("failed writing " + path.string());
}

inline fs::path require_out(const std::string& out, const std::string& fallback, const char* command) {
    const std::string dir = out.empty() ? fallback : out;
    if (dir.empty()) throw UsageError(std::string(command) + ": no output directory (--out or paths.out)");
    fs::create_directories(dir);
    return dir;
}

inline data::SplitMode split_mode(const config::RunConfig& cfg) {
    return cfg.split_by_time ? data::SplitMode::ByTime : data::SplitMode::Random;
}

/// Windows, splits and writes a dataset from hourly series.
inline data::DatasetManifest write_series(const data::HourlySeries& series, const config::RunConfig& cfg,
                                          const fs::path& out) {
    std::string diagnostic;
    auto samples = data::sliding_windows(series, cfg.region, &diagnostic);
    if (samples.empty()) throw InputError("no training windows: " + diagnostic);
    const auto splits = data::split(std::move(samples), cfg.seed, split_mode(cfg));
    return data::write_dataset(splits, cfg.region, cfg.seed, out, split_mode(cfg));
}

inline data::DatasetSplits synthesize_splits(const config::RunConfig& cfg) {
    const auto series = data::build_hourly_series(data::generate_synthetic(cfg.synthetic, cfg.region));
    std::string diagnostic;
    auto samples = data::sliding_windows(series, cfg.region, &diagnostic);
    if (samples.empty()) throw InputError("no training windows: " + diagnostic);
    return data::split(std::move(samples), cfg.seed, split_mode(cfg));
}

/// Loads the dataset named on the command line or in the config; an empty
/// path falls back to an in-memory synthetic dataset when allowed.
inline train::TrainingData load_data(const config::RunConfig& cfg, const std::string& flag, bool allow_synthetic,
                                     bool* has_truth) {
    const std::string dir = flag.empty() ? cfg.data_dir : flag;
    if (dir.empty()) {
        if (!allow_synthetic) throw InputError("no dataset given (--data or paths.data)");
        if (has_truth) *has_truth = true;
        return train::prepare_data(synthesize_splits(cfg), cfg.region);
    }
    data::DatasetManifest manifest;
    const auto splits = data::read_dataset(dir, &manifest);
    if (has_truth) *has_truth = manifest.has_truth;
    return train::prepare_data(splits, manifest.region);
}

inline void apply_mode(config::RunConfig& cfg, const std::string& mode) {
    if (mode.empty()) return;
    cfg.train.mode = train::mode_from_string(mode);
    if (cfg.train.mode == train::TrainMode::Supervised) cfg.train.loss.lambda = 0.0;
}

inline json log_header(const train::TrainConfig& c, const RegionSpec& region) {
    return {{"type", "header"},
            {"mode", train::to_string(c.mode)},
            {"beta", c.beta},
            {"T1", c.t1},
            {"T2", c.t2},
            {"T", c.temperature},
            {"lambda", c.loss.lambda},
            {"gamma", c.loss.gamma},
            {"seed", c.seed},
            {"region", train::CoTrainer::region_json(region)},
            {"config", c.to_json()}};
}

inline json epoch_line(const train::EpochRecord& r) {
    json j = r.to_json();
    j["type"] = "epoch";
    return j;
}

/// Scores a model on one split; the report carries the label source.
inline metrics::EvalReport score(const nn::TfnParams<float>& tfn, const std::vector<train::PreparedSample>& samples,
                                 train::LabelSource source) {
    return train::evaluate_tfn(tfn, samples, source);
}

inline std::string format_value(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
}

inline void set_swept(config::RunConfig& cfg, const std::string& name, double value) {
    auto& t = cfg.train;
    if (name == "beta") {
        t.beta = value;
    } else if (name == "T") {
        t.temperature = value;
    } else if (name == "lambda") {
        t.loss.lambda = value;
    } else if (name == "gamma") {
        t.loss.gamma = value;
    } else {
        throw UsageError("sweep: unknown parameter '" + name + "' (expected beta, T, lambda or gamma)");
    }
}

struct SweepSpec {
    std::string name;
    std::vector<double> values;
};

inline SweepSpec parse_sweep(const std::string& text) {
    const auto eq = text.find('=');
    if (eq == std::string::npos || eq == 0) throw UsageError("sweep: --param must look like name=v1,v2,...");
    SweepSpec s{text.substr(0, eq), {}};
    config::RunConfig probe;
    set_swept(probe, s.name, 0.0);
    std::stringstream in(text.substr(eq + 1));
    std::string item;
    while (std::getline(in, item, ',')) {
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(item, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used == 0 || used != item.size()) throw UsageError("sweep: bad value '" + item + "'");
        s.values.push_back(v);
    }
    if (s.values.empty()) throw UsageError("sweep: no values given");
    return s;
}

inline const std::vector<std::string>& csv_columns() {
    static const std::vector<std::string> cols{"param",        "value",      "accuracy",   "weighted_precision",
                                               "weighted_recall", "weighted_f1", "best_epoch", "label_source"};
    return cols;
}

/// One train + eval for a swept value; writes log, report and point.json into dir.
inline json sweep_point(config::RunConfig cfg, const train::TrainingData& data, bool has_truth,
                        const std::string& name, double value, const fs::path& dir) {
    set_swept(cfg, name, value);
    cfg.validate();
    fs::create_directories(dir);
    std::ofstream log(dir / "train_log.jsonl");
    log << log_header(cfg.train, data.region).dump() << '\n';
    const auto result = baselines::run_training(
        cfg.train, data, has_truth ? train::LabelSource::Truth : train::LabelSource::Sparse,
        [&](const train::EpochRecord& r) { log << epoch_line(r).dump() << '\n' << std::flush; });
    data::detail::write_json(dir / "report.json", metrics::to_json(result.test_report));
    const auto& r = result.test_report;
    json point = {{"param", name},
                  {"value", value},
                  {"accuracy", r.accuracy},
                  {"weighted_precision", r.weighted_precision},
                  {"weighted_recall", r.weighted_recall},
                  {"weighted_f1", r.weighted_f1},
                  {"best_epoch", result.best_epoch},
                  {"label_source", r.label_source}};
    data::detail::write_json(dir / "point.json", point);
    return point;
}

inline std::string csv_row(const json& point) {
    std::ostringstream os;
    os.precision(10);
    const auto& cols = csv_columns();
    for (std::size_t i = 0; i < cols.size(); ++i) {
        if (i) os << ',';
        const auto& v = point.at(cols[i]);
        if (v.is_string()) {
            os << v.get<std::string>();
        } else if (v.is_number_integer()) {
            os << v.get<long>();
        } else {
            os << v.get<double>();
        }
    }
    return os.str();
}

/// Runs child sweeps as separate processes of this executable, at most `width` at a time.
inline void run_children(const std::vector<std::vector<std::string>>& commands, std::size_t width) {
    const std::string exe = fs::read_symlink("/proc/self/exe").string();
    std::vector<pid_t> running;
    auto reap = [&](pid_t pid) {
        int status = 0;
        if (waitpid(pid, &status, 0) < 0) throw Error("sweep: waitpid failed");
        if (!WIFEXITED(status) || WEXITSTATUS(status) != 0) {
            const int code = WIFEXITED(status) ? WEXITSTATUS(status) : kInternal;
            if (code == kNumerical) throw NumericalError("sweep: a child run hit a numerical failure");
            if (code == kInput) throw InputError("sweep: a child run rejected its input");
            throw Error("sweep: a child run failed");
        }
    };
    for (const auto& args : commands) {
        if (running.size() >= width) {
            reap(running.front());
            running.erase(running.begin());
        }
        std::vector<std::string> full{exe};
        full.insert(full.end(), args.begin(), args.end());
        std::vector<char*> argv;
        for (auto& a : full) argv.push_back(a.data());
        argv.push_back(nullptr);
        pid_t pid = 0;
        if (posix_spawn(&pid, exe.c_str(), nullptr, nullptr, argv.data(), environ) != 0) {
            throw Error("sweep: cannot spawn child process");
        }
        running.push_back(pid);
    }
    for (pid_t pid : running) reap(pid);
}

} // namespace detail

// ---------------------------------------------------------------- commands

inline void cmd_synth(const SynthOptions& o, std::ostream& log) {
    auto cfg = config::load(o.config);
    cfg.split_by_time = cfg.split_by_time || o.split_by_time;
    if (o.label_rate) {
        cfg.synthetic.label_rate = *o.label_rate;
        cfg.validate();
    }
    const fs::path out = detail::require_out(o.out, cfg.out_dir, "synth");
    const auto raw = data::generate_synthetic(cfg.synthetic, cfg.region);
    if (o.write_raw) data::save_raw(raw, out / "raw");
    const auto manifest = detail::write_series(data::build_hourly_series(raw), cfg, out);
    data::detail::write_json(out / "config.json", config::to_json(cfg));
    log << "synth: " << manifest.train_count << " train / " << manifest.val_count << " val / " << manifest.test_count
        << " test samples written to " << out.string() << '\n';
}

inline void cmd_indexes(const IndexesOptions& o, std::ostream& log) {
    auto cfg = config::load(o.config);
    cfg.split_by_time = cfg.split_by_time || o.split_by_time;
    if (o.raw.empty()) throw UsageError("indexes: --raw is required");
    const fs::path out = detail::require_out(o.out, cfg.out_dir, "indexes");
    const auto manifest = detail::write_series(data::build_hourly_series(data::load_raw(o.raw)), cfg, out);
    log << "indexes: " << manifest.total() << " samples with " << kNumChannels << " channels written to "
        << out.string() << '\n';
}

inline void cmd_train(const TrainOptions& o, std::ostream& log) {
    auto cfg = config::load(o.config);
    detail::apply_mode(cfg, o.mode);
    cfg.validate();
    bool has_truth = false;
    const auto data = detail::load_data(cfg, o.data, false, &has_truth);
    const fs::path out = detail::require_out(o.out, cfg.out_dir, "train");
    const fs::path state_dir = out / "checkpoint";

    std::optional<train::CoTrainer> trainer;
    if (o.resume) {
        if (!fs::exists(state_dir / "state.json")) throw InputError("train: nothing to resume in " + state_dir.string());
        trainer.emplace(cfg.train, data, nn::TfnParams<float>::zeros(cfg.train.model.tfn_shape(data.region)),
                        nn::TdnParams<float>::zeros(cfg.train.model.tdn_shape(data.region)));
        trainer->load(state_dir);
        log << "train: resuming at epoch " << trainer->epoch() << '\n';
    } else {
        trainer.emplace(train::CoTrainer::create(cfg.train, data));
    }

    const fs::path log_path = out / "train_log.jsonl";
    {
        std::ofstream f(log_path, std::ios::trunc);
        if (!f) throw InputError("cannot write " + log_path.string());
        f << detail::log_header(cfg.train, data.region).dump() << '\n';
        for (const auto& r : trainer->log()) f << detail::epoch_line(r).dump() << '\n';
    }
    std::ofstream f(log_path, std::ios::app);
    std::size_t ran = 0;
    while (!trainer->done()) {
        if (o.max_epochs && ran == o.max_epochs) {
            log << "train: stopped after " << ran << " epochs; continue with --resume\n";
            return;
        }
        while (!trainer->epoch_finished()) trainer->train_batch();
        const auto r = trainer->finish_epoch();
        ++ran;
        f << detail::epoch_line(r).dump() << '\n' << std::flush;
        trainer->save(state_dir);
        log << "epoch " << r.epoch << "  tau " << r.tau << "  L " << r.total << "  L_s " << r.supervised << "  L_u "
            << r.unsupervised << "  val wF1 " << r.val_weighted_f1 << (r.improved ? "  *" : "") << '\n';
    }

    train::save_model(out / "final", trainer->tfn(), trainer->tdn(), data, cfg.train, trainer->epoch() - 1);
    train::save_model(out / "best", trainer->best_tfn(), trainer->tdn(), data, cfg.train, trainer->best_epoch());
    json summary = {{"mode", train::to_string(cfg.train.mode)},
                    {"epochs", trainer->log().size()},
                    {"best_epoch", trainer->best_epoch()},
                    {"stopped_early", trainer->stopped_early()}};
    if (!data.val.empty()) {
        summary["validation"] = metrics::to_json(detail::score(trainer->best_tfn(), data.val, train::LabelSource::Sparse));
    }
    if (!data.test.empty()) {
        summary["test"] = metrics::to_json(detail::score(trainer->best_tfn(), data.test, train::LabelSource::Sparse));
        if (has_truth) {
            summary["test_dense_truth"] =
                metrics::to_json(detail::score(trainer->best_tfn(), data.test, train::LabelSource::Truth));
        }
    }
    data::detail::write_json(out / "summary.json", summary);
    log << "train: best epoch " << trainer->best_epoch() << ", models in " << (out / "best").string() << " and "
        << (out / "final").string() << '\n';
}

inline void cmd_eval(const EvalOptions& o, std::ostream& log) {
    if (o.checkpoint.empty() || o.data.empty()) throw UsageError("eval: --checkpoint and --data are required");
    const auto model = train::load_model(o.checkpoint);
    const auto manifest = data::read_manifest(o.data);
    if (!(manifest.region == model.region)) throw InputError("eval: dataset region does not match the checkpoint");
    train::LabelSource source = train::LabelSource::Sparse;
    if (o.labels == "truth") {
        source = train::LabelSource::Truth;
    } else if (o.labels != "sparse") {
        throw UsageError("eval: --labels must be sparse or truth");
    }
    const auto samples = train::prepare(data::read_split(o.data, manifest, o.split), model.normalizer);
    auto report = detail::score(model.tfn, samples, source);
    report.config = model.config.to_json();
    const fs::path out = detail::require_out(o.out, "", "eval");
    auto j = metrics::to_json(report);
    j["split"] = o.split;
    j["checkpoint_epoch"] = model.epoch;
    data::detail::write_json(out / "report.json", j);
    detail::write_text(out / "report.txt", metrics::to_text(report));
    detail::write_text(out / "horizon_f1.svg", metrics::horizon_plot(report));
    log << metrics::to_text(report);
}

inline void cmd_forecast(const ForecastOptions& o, std::ostream& log) {
    if (o.checkpoint.empty() || o.data.empty()) throw UsageError("forecast: --checkpoint and --data are required");
    const auto model = train::load_model(o.checkpoint);
    const auto manifest = data::read_manifest(o.data);
    if (!(manifest.region == model.region)) throw InputError("forecast: dataset region does not match the checkpoint");
    const auto samples = data::read_split(o.data, manifest, o.split);
    if (o.index >= samples.size()) {
        throw UsageError("forecast: sample index " + std::to_string(o.index) + " out of range for split " + o.split);
    }
    const auto prepared = train::prepare({samples[o.index]}, model.normalizer);
    const auto f = train::forecast(model.tfn, prepared.front().history, prepared.front().forecast);
    const auto& r = model.region;
    Tensor<std::int8_t> classes({f.classes.size(), r.length, r.width, r.height});
    for (std::size_t j = 0; j < f.classes.size(); ++j) {
        std::copy(f.classes[j].values().begin(), f.classes[j].values().end(), classes.slab(j).begin());
    }
    const fs::path out = detail::require_out(o.out, "", "forecast");
    npy::save(out / "probs.npy", f.probs);
    npy::save(out / "classes.npy", classes);
    json counts = json::array();
    for (const auto& c : f.classes) {
        std::array<std::size_t, kNumClasses> n{};
        for (auto v : c.values()) ++n[static_cast<std::size_t>(v)];
        counts.push_back(n);
    }
    data::detail::write_json(out / "forecast.json", {{"split", o.split},
                                                     {"index", o.index},
                                                     {"start_hour", samples[o.index].start_hour},
                                                     {"first_forecast_hour", samples[o.index].start_hour +
                                                                                 static_cast<long>(r.history_len)},
                                                     {"class_counts_per_step", counts}});
    log << "forecast: " << f.classes.size() << " steps written to " << out.string() << '\n';
}

inline void cmd_sweep(const SweepOptions& o, std::ostream& log) {
    auto cfg = config::load(o.config);
    detail::apply_mode(cfg, o.mode);
    const auto spec = detail::parse_sweep(o.param);
    const fs::path out = detail::require_out(o.out, cfg.out_dir, "sweep");
    if (o.single) {
        if (spec.values.size() != 1) throw UsageError("sweep: a single-point run takes exactly one value");
        bool has_truth = false;
        const auto data = detail::load_data(cfg, o.data, true, &has_truth);
        detail::sweep_point(cfg, data, has_truth, spec.name, spec.values.front(), out);
        return;
    }
    auto point_dir = [&](double v) { return out / (spec.name + "_" + detail::format_value(v)); };
    std::vector<json> points;
    if (o.parallel > 1) {
        std::vector<std::vector<std::string>> commands;
        for (double v : spec.values) {
            std::vector<std::string> args{"sweep", "--single", "--param", spec.name + "=" + detail::format_value(v),
                                          "--out", point_dir(v).string()};
            if (!o.config.empty()) args.insert(args.end(), {"--config", o.config});
            if (!o.data.empty()) args.insert(args.end(), {"--data", o.data});
            if (!o.mode.empty()) args.insert(args.end(), {"--mode", o.mode});
            commands.push_back(std::move(args));
        }
        detail::run_children(commands, o.parallel);
        for (double v : spec.values) points.push_back(data::detail::read_json(point_dir(v) / "point.json"));
    } else {
        bool has_truth = false;
        const auto data = detail::load_data(cfg, o.data, true, &has_truth);
        for (double v : spec.values) {
            log << "sweep: " << spec.name << " = " << detail::format_value(v) << '\n';
            points.push_back(detail::sweep_point(cfg, data, has_truth, spec.name, v, point_dir(v)));
        }
    }
    std::ostringstream csv;
    const auto& cols = detail::csv_columns();
    for (std::size_t i = 0; i < cols.size(); ++i) csv << (i ? "," : "") << cols[i];
    csv << '\n';
    for (const auto& p : points) csv << detail::csv_row(p) << '\n';
    detail::write_text(out / "sweep.csv", csv.str());
    log << csv.str();
}

// ---------------------------------------------------------------- entry point

/// Parses arguments (without the program name) and runs one subcommand.
/// Returns the process exit code; never throws.
inline int run(const std::vector<std::string>& args, std::ostream& log = std::cout, std::ostream& err = std::cerr) {
    CLI::App app{"Turbulence forecasting with dual-network co-training", "t2net"};
    app.require_subcommand(1);

    SynthOptions synth;
    auto* s = app.add_subcommand("synth", "Generate a synthetic dataset");
    s->add_option("--config", synth.config, "JSON run configuration");
    s->add_option("--out", synth.out, "Output dataset directory");
    s->add_option("--label-rate", synth.label_rate, "Override the revealed-label fraction")->check(CLI::Range(0.0, 1.0));
    s->add_flag("--raw", synth.write_raw, "Also write the raw-grid adapter format under out/raw");
    s->add_flag("--split-by-time", synth.split_by_time, "Contiguous time blocks instead of a random split");

    IndexesOptions idx;
    auto* i = app.add_subcommand("indexes", "Compute turbulence indexes for a raw-grid dataset");
    i->add_option("--config", idx.config, "JSON run configuration");
    i->add_option("--raw", idx.raw, "Raw-grid dataset directory")->required();
    i->add_option("--out", idx.out, "Output dataset directory");
    i->add_flag("--split-by-time", idx.split_by_time, "Contiguous time blocks instead of a random split");

    TrainOptions tr;
    auto* t = app.add_subcommand("train", "Train T2-Net or a baseline");
    t->add_option("--config", tr.config, "JSON run configuration");
    t->add_option("--data", tr.data, "Dataset directory");
    t->add_option("--out", tr.out, "Output directory for checkpoints and logs");
    t->add_option("--mode", tr.mode, "t2net, supervised or hard-pseudo")
        ->check(CLI::IsMember({"t2net", "supervised", "hard-pseudo"}));
    t->add_flag("--resume", tr.resume, "Continue from out/checkpoint");
    t->add_option("--max-epochs", tr.max_epochs, "Stop after this many epochs in this invocation");

    EvalOptions ev;
    auto* e = app.add_subcommand("eval", "Evaluate a checkpoint on a dataset split");
    e->add_option("--checkpoint", ev.checkpoint, "Model or training-state directory")->required();
    e->add_option("--data", ev.data, "Dataset directory")->required();
    e->add_option("--split", ev.split, "train, val or test")->check(CLI::IsMember({"train", "val", "test"}));
    e->add_option("--labels", ev.labels, "sparse or truth")->check(CLI::IsMember({"sparse", "truth"}));
    e->add_option("--out", ev.out, "Report directory")->required();

    ForecastOptions fc;
    auto* f = app.add_subcommand("forecast", "Forecast one sample and write probability cubes");
    f->add_option("--checkpoint", fc.checkpoint, "Model or training-state directory")->required();
    f->add_option("--data", fc.data, "Dataset directory")->required();
    f->add_option("--split", fc.split, "train, val or test")->check(CLI::IsMember({"train", "val", "test"}));
    f->add_option("--index", fc.index, "Sample index within the split");
    f->add_option("--out", fc.out, "Output directory")->required();

    SweepOptions sw;
    auto* w = app.add_subcommand("sweep", "Train and evaluate once per value of one hyperparameter");
    w->add_option("--config", sw.config, "JSON run configuration");
    w->add_option("--data", sw.data, "Dataset directory (default: synthesize from the config)");
    w->add_option("--out", sw.out, "Output directory");
    w->add_option("--param", sw.param, "name=v1,v2,... with name in beta, T, lambda, gamma")->required();
    w->add_option("--mode", sw.mode, "t2net, supervised or hard-pseudo")
        ->check(CLI::IsMember({"t2net", "supervised", "hard-pseudo"}));
    w->add_option("--parallel", sw.parallel, "Number of concurrent processes")->check(CLI::PositiveNumber);
    w->add_flag("--single", sw.single)->group("");

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        log << app.help();
        return kOk;
    } catch (const CLI::CallForAllHelp&) {
        log << app.help("", CLI::AppFormatMode::All);
        return kOk;
    } catch (const CLI::ParseError& ex) {
        err << "t2net: " << ex.what() << '\n' << "Run with --help for usage.\n";
        return kInput;
    }

    try {
        if (*s) cmd_synth(synth, log);
        if (*i) cmd_indexes(idx, log);
        if (*t) cmd_train(tr, log);
        if (*e) cmd_eval(ev, log);
        if (*f) cmd_forecast(fc, log);
        if (*w) cmd_sweep(sw, log);
    } catch (const std::exception& ex) {
        err << "t2net: error: " << ex.what() << '\n';
        return exit_code_for(ex);
    }
    return kOk;
}

} // namespace t2net::cli
