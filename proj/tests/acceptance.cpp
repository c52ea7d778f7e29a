// Acceptance runner: prints one PASS/FAIL line per criterion and exits
// non-zero if any criterion fails. `acceptance 3 5` runs only criteria 3 and 5.

#include "grad_check.hpp"
#include "index_oracle.hpp"

#include <t2net/baselines.hpp>
#include <t2net/dlg.hpp>
#include <t2net/indexes.hpp>
#include <t2net/losses.hpp>
#include <t2net/metrics.hpp>
#include <t2net/nn/convlstm.hpp>
#include <t2net/nn/tfn.hpp>
#include <t2net/synthetic.hpp>
#include <t2net/trainer.hpp>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

using namespace t2net;
namespace fs = std::filesystem;
using clock_type = std::chrono::steady_clock;

namespace {

double seconds_since(clock_type::time_point t0) {
    return std::chrono::duration<double>(clock_type::now() - t0).count();
}

/// Collects named sub-checks; a criterion passes when all of them do.
struct Checks {
    std::vector<std::string> failures;
    std::ostringstream notes;

    void expect(bool ok, const std::string& what) {
        if (!ok) failures.push_back(what);
    }
    void near(double got, double want, double tol, const std::string& what) {
        std::ostringstream os;
        os << std::setprecision(10) << what << ": got " << got << ", want " << want << " +- " << tol;
        expect(std::abs(got - want) <= tol, os.str());
    }
};

// ------------------------------------------------------------ criterion 1

Checks closed_form() {
    Checks c;
    const auto t0 = clock_type::now();
    const auto s = dlg::sharpen(ClassDistribution({0.4, 0.3, 0.2, 0.1}), 0.5);
    const std::array<double, 4> want{0.5333, 0.3, 0.1333, 0.0333};
    for (std::size_t i = 0; i < 4; ++i) c.near(s[i], want[i], 1e-4, "sharpen[" + std::to_string(i) + "]");

    const std::array<long, 3> epochs{3, 10, 20};
    const std::array<double, 3> taus{0.0, 0.3, 0.6};
    for (std::size_t i = 0; i < 3; ++i) {
        const double t = dlg::tau(dlg::DlgSchedule{epochs[i], 5, 15, 0.6, RandomStream{}});
        c.expect(t == taus[i], "tau(5,15,0.6) at t=" + std::to_string(epochs[i]) + " is not exact");
    }

    c.near(dlg::label_quality(ClassDistribution({0.7, 0.1, 0.1, 0.1}), ClassDistribution::uniform()), 0.6403, 1e-4,
           "label quality vs uniform");

    RandomStream rng(11);
    for (int i = 0; i < 50; ++i) {
        std::array<double, 4> p{};
        double sum = 0.0;
        for (auto& v : p) sum += (v = rng.uniform(0.01, 1.0));
        for (auto& v : p) v /= sum;
        const std::size_t k = rng.below(4);
        losses::Probs one_hot{};
        one_hot[k] = 1.0;
        c.near(losses::focal_loss(ClassDistribution(p), one_hot, 0.0), -std::log(p[k]), 1e-9, "focal gamma=0 vs CE");
    }

    const auto w = losses::ClassWeights::from_counts({70, 20, 7, 3});
    const std::array<double, 4> alpha{0.02643, 0.09251, 0.26428, 0.61678};
    for (std::size_t i = 0; i < 4; ++i) c.near(w.alpha[i], alpha[i], 1e-4, "alpha[" + std::to_string(i) + "]");

    c.near(losses::weighted_l2(ClassDistribution({1, 0, 0, 0}), ClassDistribution({0, 1, 0, 0}),
                               losses::ClassWeights::uniform()),
           0.7071, 1e-4, "weighted-L2 uniform disagreement");
    c.near(losses::weighted_l2(ClassDistribution({1, 0, 0, 0}), ClassDistribution({0, 1, 0, 0}),
                               losses::ClassWeights::uniform()),
           std::sqrt(0.5), 1e-6, "weighted-L2 uniform disagreement (exact)");

    // The per-module example suites.
    for (const char* suite : {"test_grid", "test_indexes", "test_dlg", "test_losses", "test_metrics", "test_nn"}) {
        const std::string cmd = std::string("\"") + T2NET_TEST_DIR + "/" + suite + "\" > /dev/null 2>&1";
        c.expect(std::system(cmd.c_str()) == 0, std::string(suite) + " has failing examples");
    }
    const double elapsed = seconds_since(t0);
    c.expect(elapsed < 120.0, "closed-form suite took more than 2 minutes");
    c.notes << "runtime " << std::fixed << std::setprecision(1) << elapsed << " s";
    return c;
}

// ------------------------------------------------------------ criterion 2

Checks schedule_sampling() {
    Checks c;
    const auto t0 = clock_type::now();
    dlg::DlgSchedule schedule{10, 5, 15, 0.6, RandomStream(2024)};
    const double t = dlg::tau(schedule);
    c.expect(t == 0.3, "tau at epoch 10 is not 0.3");
    const auto tdn = ClassDistribution({1, 0, 0, 0});
    const auto tfn = ClassDistribution({0, 1, 0, 0});
    std::size_t chosen_tfn = 0;
    const std::size_t draws = 100000;
    for (std::size_t i = 0; i < draws; ++i) chosen_tfn += dlg::binary_sample(tdn, tfn, schedule)[1] == 1.0;
    const double freq = static_cast<double>(chosen_tfn) / static_cast<double>(draws);
    const double elapsed = seconds_since(t0);
    c.near(freq, 0.3, 0.01, "TFN selection frequency");
    c.expect(elapsed < 10.0, "sampling took more than 10 s");
    c.notes << "frequency " << std::setprecision(5) << freq << " in " << std::setprecision(3) << elapsed << " s";
    return c;
}

// ------------------------------------------------------------ criterion 3

template <typename Params>
void randomize(Params& p, RandomStream& rng, double scale = 0.5) {
    p.visit("", [&](const std::string&, Tensor<double>& t) {
        for (auto& v : t.values()) v = rng.uniform(-scale, scale);
    });
}

Tensor<double> random_tensor(Shape shape, RandomStream& rng) {
    Tensor<double> t(std::move(shape));
    for (auto& v : t.values()) v = rng.uniform(-1.0, 1.0);
    return t;
}

Checks gradient_oracle() {
    using namespace t2net::nn;
    Checks c;
    const auto t0 = clock_type::now();
    double worst = 0.0;

    {  // ConvLSTM cell, two unrolled steps
        RandomStream rng(3);
        auto params = ConvLstmCellParams<double>::zeros({2, 2, 2}, {3, 3, 3}, 2, 2);
        randomize(params, rng);
        const auto x1 = random_tensor({2, 2, 2, 2}, rng), x2 = random_tensor({2, 2, 2, 2}, rng);
        const auto w_h = random_tensor({2, 2, 2, 2}, rng), w_o = random_tensor({2, 2, 2, 2}, rng);
        ConvLstmState<double> init{random_tensor({2, 2, 2, 2}, rng), random_tensor({2, 2, 2, 2}, rng)};
        auto loss = [&] {
            auto s1 = convlstm_step(params, x1, init);
            auto s2 = convlstm_step(params, x2, s1.state);
            double l = 0.0;
            for (std::size_t e = 0; e < w_h.size(); ++e) l += w_h[e] * s2.state.hidden[e] + w_o[e] * s2.output[e];
            return l;
        };
        ConvLstmStepCache<double> c1, c2;
        auto s1 = convlstm_step(params, x1, init, &c1);
        convlstm_step(params, x2, s1.state, &c2);
        auto grads = params;
        zero_parameters(grads);
        auto b2 = convlstm_step_backward(params, c2, w_o, ConvLstmState<double>{w_h, {}}, grads);
        convlstm_step_backward(params, c1, Tensor<double>{}, b2.d_state, grads);
        for (const auto& r : gradcheck::compare(params, grads, loss)) {
            worst = std::max(worst, r.relative_error);
            c.expect(r.relative_error < 1e-4, "ConvLSTM " + r.name + " relative error " + std::to_string(r.relative_error));
        }
    }

    {  // TFN forward + supervised focal + weighted-L2 unsupervised loss
        RandomStream rng(2);
        TfnShape shape{{2, 2, 2}, 2, 2, {3, 3, 3}, false};
        auto params = TfnParams<double>::create(shape, rng);
        randomize(params, rng);
        std::vector<Tensor<double>> hist, fut;
        for (int i = 0; i < 2; ++i) {
            hist.push_back(random_tensor({2, 2, 2, 2}, rng));
            fut.push_back(random_tensor({2, 2, 2, 2}, rng));
        }
        std::vector<LabelCube> targets(2, LabelCube{Tensor<std::int8_t>({2, 2, 2}, std::int8_t{-1}), 0});
        targets[0].labels[0] = 1;
        targets[0].labels[5] = 3;
        targets[1].labels[2] = 0;
        const auto weights = losses::ClassWeights::from_counts({70, 20, 7, 3});
        losses::LossConfig cfg;
        dlg::DlgSchedule schedule{10, 5, 15, 0.6, RandomStream(3)};
        Tensor<double> tdn_pred({2, 2, 2, 2, 4});
        for (auto& v : tdn_pred.values()) v = rng.uniform(0.1, 1.0);
        for (std::size_t r = 0; r < 16; ++r) {
            double s = 0;
            for (int k = 0; k < 4; ++k) s += tdn_pred[r * 4 + k];
            for (int k = 0; k < 4; ++k) tdn_pred[r * 4 + k] /= s;
        }
        const auto pseudo = dlg::guess_labels(tdn_pred, tfn_forward(params, hist, fut), targets, schedule, 0.5);
        auto loss = [&] {
            auto p = tfn_forward(params, hist, fut);
            return losses::total_loss(losses::supervised_loss_sample(p, targets, cfg, 0.5),
                                      losses::unsupervised_loss_sample(p, pseudo, targets, weights, 0.5), cfg.lambda);
        };
        TfnCache<double> cache;
        auto p = tfn_forward(params, hist, fut, DecoderMode::FeatureFed, nullptr, &cache);
        Tensor<double> dp(p.shape(), 0.0), du(p.shape(), 0.0);
        losses::supervised_loss_sample(p, targets, cfg, 0.5, &dp);
        losses::unsupervised_loss_sample(p, pseudo, targets, weights, 0.5, &du);
        for (std::size_t i = 0; i < dp.size(); ++i) dp[i] += cfg.lambda * du[i];
        auto grads = params;
        zero_parameters(grads);
        tfn_backward(params, cache, dp, grads);
        for (const auto& r : gradcheck::compare(params, grads, loss)) {
            worst = std::max(worst, r.relative_error);
            c.expect(r.relative_error < 1e-4, "pipeline " + r.name + " relative error " + std::to_string(r.relative_error));
        }
    }
    const double elapsed = seconds_since(t0);
    c.expect(elapsed < 60.0, "gradient oracle took more than 1 minute");
    c.notes << "worst relative error " << std::scientific << std::setprecision(2) << worst << std::fixed << " in "
            << std::setprecision(2) << elapsed << " s";
    return c;
}

// ------------------------------------------------------------ criterion 4

Checks mask_semantics() {
    Checks c;
    RandomStream rng(8);
    const Shape pshape{3, 4, 4, 2, 4};
    auto random_probs = [&] {
        Tensor<double> t(pshape);
        for (std::size_t r = 0; r < t.size() / 4; ++r) {
            double s = 0;
            for (int k = 0; k < 4; ++k) s += (t[r * 4 + k] = rng.uniform(0.05, 1.0));
            for (int k = 0; k < 4; ++k) t[r * 4 + k] /= s;
        }
        return t;
    };
    std::vector<LabelCube> targets(3, LabelCube{Tensor<std::int8_t>({4, 4, 2}, std::int8_t{-1}), 0});
    for (auto& t : targets) {
        for (int n = 0; n < 5; ++n) t.labels[rng.below(32)] = static_cast<std::int8_t>(rng.below(4));
    }
    const auto p_tfn = random_probs(), p_tdn = random_probs();
    losses::LossConfig cfg;

    // L_s ignores unlabeled cells bit for bit.
    auto perturbed = p_tfn;
    const auto fresh = random_probs();
    std::size_t unlabeled_rows = 0, labeled_rows = 0;
    for (std::size_t t = 0; t < 3; ++t) {
        for (std::size_t cell = 0; cell < 32; ++cell) {
            if (targets[t].labels[cell] != kUnknownLabel) continue;
            ++unlabeled_rows;
            for (int k = 0; k < 4; ++k) perturbed[(t * 32 + cell) * 4 + k] = fresh[(t * 32 + cell) * 4 + k];
        }
    }
    const double ls = losses::supervised_loss_sample(p_tfn, targets, cfg);
    c.expect(ls == losses::supervised_loss_sample(perturbed, targets, cfg), "L_s changed under unlabeled perturbation");

    // Pseudo-label targets ignore TFN predictions at labeled cells bit for bit.
    auto perturbed_labeled = p_tfn;
    for (std::size_t t = 0; t < 3; ++t) {
        for (std::size_t cell = 0; cell < 32; ++cell) {
            if (targets[t].labels[cell] == kUnknownLabel) continue;
            ++labeled_rows;
            for (int k = 0; k < 4; ++k) perturbed_labeled[(t * 32 + cell) * 4 + k] = fresh[(t * 32 + cell) * 4 + k];
        }
    }
    dlg::DlgSchedule s1{10, 5, 15, 0.6, RandomStream(4)}, s2 = s1;
    const auto a = dlg::guess_labels(p_tdn, p_tfn, targets, s1, 0.5);
    const auto b = dlg::guess_labels(p_tdn, perturbed_labeled, targets, s2, 0.5);
    c.expect(a.labels == b.labels, "pseudo-label targets changed under labeled-cell perturbation");
    c.expect(a.quality == b.quality, "label quality changed under labeled-cell perturbation");
    const auto w = losses::ClassWeights::from_counts({70, 20, 7, 3});
    c.expect(losses::unsupervised_loss_sample(p_tfn, a, targets, w) ==
                 losses::unsupervised_loss_sample(perturbed_labeled, b, targets, w),
             "L_u changed under labeled-cell perturbation");
    c.notes << unlabeled_rows << " unlabeled and " << labeled_rows << " labeled cells perturbed";
    return c;
}

// ------------------------------------------------------------ criterion 5

Checks metric_oracle() {
    Checks c;
    auto from_matrix = [](const std::array<std::array<int, 4>, 4>& m) {
        std::vector<std::int8_t> truth, pred;
        for (int i = 0; i < 4; ++i) {
            for (int j = 0; j < 4; ++j) {
                for (int n = 0; n < m[i][j]; ++n) truth.push_back(std::int8_t(i)), pred.push_back(std::int8_t(j));
            }
        }
        const Shape s{std::max<std::size_t>(truth.size(), 1), 1, 1};
        return std::pair{Tensor<std::int8_t>(s, pred), LabelCube{Tensor<std::int8_t>(s, truth), 0}};
    };
    const auto [pred, labels] = from_matrix({{{3, 1, 0, 0}, {0, 2, 0, 0}, {1, 0, 2, 0}, {0, 0, 0, 1}}});
    const auto r = metrics::evaluate({pred}, {labels});
    c.near(r.accuracy, 0.8, 1e-15, "10-cell accuracy");
    c.near(r.weighted_f1, 0.8, 1e-12, "10-cell weighted F1");

    RandomStream rng(77);
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        std::array<std::array<int, 4>, 4> m{};
        int total = 0;
        for (auto& row : m) {
            for (auto& v : row) total += (v = static_cast<int>(rng.below(rng.below(2) ? 40 : 5)));
        }
        if (total == 0) m[0][0] = 1;
        const auto [p, l] = from_matrix(m);
        const auto rep = metrics::evaluate({p}, {l});
        worst = std::max(worst, std::abs(rep.weighted_recall - rep.accuracy));
        c.expect(std::abs(rep.weighted_recall - rep.accuracy) <= 1e-12,
                 "weighted recall differs from accuracy in trial " + std::to_string(trial));
    }
    c.notes << "10-cell example accuracy " << r.accuracy << ", weighted F1 " << std::setprecision(12) << r.weighted_f1
            << "; worst |wR - acc| over 100 matrices " << std::scientific << std::setprecision(1) << worst;
    return c;
}

// ------------------------------------------------------------ criterion 6

/// Settings of the directional end-to-end comparison.
struct EndToEnd {
    std::uint64_t data_seed = 7;
    std::size_t hours = 505;  ///< 500 windows with n = p = 3, about 300 for training
    std::vector<std::uint64_t> seeds{0, 1, 2};
    std::size_t hidden = 8;
    std::size_t cotrain_epochs = 20;
    std::size_t pretrain_epochs = 5;
    double budget_seconds = 30 * 60;
};

Checks directional(const EndToEnd& e) {
    Checks c;
    const auto t0 = clock_type::now();
    data::SyntheticConfig syn;
    syn.seed = e.data_seed;
    syn.hours = e.hours;
    syn.label_rate = 0.02;
    RegionSpec region;
    region.history_len = region.horizon_len = 3;
    const auto series = data::build_hourly_series(data::generate_synthetic(syn, region));
    const auto data = train::prepare_data(data::split(data::sliding_windows(series, region), e.data_seed), region);
    c.notes << "dataset " << data.train.size() << "/" << data.val.size() << "/" << data.test.size()
            << " samples; hidden " << e.hidden << ", " << e.cotrain_epochs << " epochs, " << e.pretrain_epochs
            << " TDN pretraining epochs\n";

    double sum_t2 = 0, sum_sup = 0, sum_hard = 0;
    for (auto seed : e.seeds) {
        train::TrainConfig cfg;
        cfg.seed = seed;
        cfg.model.hidden = e.hidden;
        cfg.cotrain_epochs = e.cotrain_epochs;
        cfg.tdn_pretrain_epochs = e.pretrain_epochs;
        try {
            const auto t2 = baselines::run_t2net(cfg, data, train::LabelSource::Truth);
            const auto sup = baselines::run_supervised_baseline(cfg, data, train::LabelSource::Truth);
            const auto hard = baselines::run_hard_pseudo_baseline(cfg, data, train::LabelSource::Truth);
            sum_t2 += t2.test_report.weighted_f1;
            sum_sup += sup.test_report.weighted_f1;
            sum_hard += hard.test_report.weighted_f1;
            c.notes << std::fixed << std::setprecision(4) << "      seed " << seed << ": t2net "
                    << t2.test_report.weighted_f1 << " (epoch " << t2.best_epoch << "), supervised "
                    << sup.test_report.weighted_f1 << " (epoch " << sup.best_epoch << "), hard-pseudo "
                    << hard.test_report.weighted_f1 << " (epoch " << hard.best_epoch << ")\n";
        } catch (const NumericalError& ex) {
            c.expect(false, std::string("non-finite loss: ") + ex.what());
            return c;
        }
    }
    const double n = static_cast<double>(e.seeds.size());
    const double t2 = sum_t2 / n, sup = sum_sup / n, hard = sum_hard / n;
    const double elapsed = seconds_since(t0);
    std::ostringstream paired;
    paired << std::fixed << std::setprecision(4) << "mean test weighted-F1 (dense truth): t2net " << t2
           << ", supervised " << sup << ", hard-pseudo " << hard << "; margin over supervised " << std::showpos
           << t2 - sup << std::noshowpos;
    c.notes << "      " << paired.str() << "; runtime " << std::setprecision(0) << elapsed << " s";
    c.expect(t2 >= sup + 0.02, "t2net does not beat supervised by 0.02: " + paired.str());
    c.expect(t2 >= hard, "t2net does not match or beat hard pseudo-labeling: " + paired.str());
    c.expect(elapsed <= e.budget_seconds, "runtime above 30 minutes");
    return c;
}

// ------------------------------------------------------------ criterion 7

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

Checks reproducibility() {
    Checks c;
    const auto root = fs::temp_directory_path() / "t2net_acceptance_repro";
    fs::remove_all(root);
    fs::create_directories(root);
    const auto config = root / "config.json";
    std::ofstream(config) << R"({"seed": 7,
        "region": {"history_len": 3, "horizon_len": 3},
        "synthetic": {"hours": 505, "label_rate": 0.02},
        "model": {"hidden": 4, "tdn_widths": [4, 4, 4]},
        "train": {"cotrain_epochs": 2, "tdn_pretrain_epochs": 1}})";
    // Separate processes started from different working directories, so heap layout differs between runs.
    const auto elsewhere = root / "elsewhere";
    fs::create_directories(elsewhere);
    auto run = [&](const fs::path& cwd, const std::string& args) {
        const std::string cmd = "cd \"" + cwd.string() + "\" && \"" + T2NET_CLI + "\" " + args + " > /dev/null 2>&1";
        return std::system(cmd.c_str());
    };
    const auto a = root / "data_a", b = root / "data_b";
    const std::string cfg = " --config \"" + config.string() + "\"";
    c.expect(run(root, "synth" + cfg + " --out data_a") == 0, "first synth failed");
    c.expect(run(elsewhere, "synth" + cfg + " --out \"" + b.string() + "\"") == 0, "second synth failed");
    std::size_t files = 0, differing = 0;
    for (const auto& entry : fs::recursive_directory_iterator(a)) {
        if (!entry.is_regular_file()) continue;
        ++files;
        differing += slurp(entry.path()) != slurp(b / fs::relative(entry.path(), a));
    }
    c.expect(files > 0 && differing == 0, std::to_string(differing) + " of " + std::to_string(files) + " dataset files differ");

    const auto r1 = root / "run_1", r2 = root / "run_2";
    c.expect(run(root, "train" + cfg + " --data data_a --out run_1") == 0, "first train failed");
    c.expect(run(elsewhere, "train" + cfg + " --data \"" + a.string() + "\" --out \"" + r2.string() + "\"") == 0,
             "second train failed");
    const auto s1 = slurp(r1 / "summary.json"), s2 = slurp(r2 / "summary.json");
    c.expect(!s1.empty() && s1 == s2, "final metrics differ between runs");
    std::size_t tensors = 0;
    for (const char* net : {"tfn", "tdn"}) {
        for (const auto& entry : fs::directory_iterator(r1 / "final" / net)) {
            ++tensors;
            c.expect(slurp(entry.path()) == slurp(r2 / "final" / net / entry.path().filename()),
                     std::string("final parameter ") + net + "/" + entry.path().filename().string() + " differs");
        }
    }
    c.notes << files << " dataset files byte-identical; summary and " << tensors
            << " parameter tensors identical across two processes";
    fs::remove_all(root);
    return c;
}

// ------------------------------------------------------------ criterion 8

Checks index_oracle() {
    Checks c;
    RandomStream rng(31);
    const auto g = oracle::random_grid(rng, 10, 10, 7);
    const std::array<Tensor<double>, 6> vectorized{indexes::richardson_number(g),  indexes::colson_panofsky(g),
                                                   indexes::ellrod_ti1(g),         indexes::wind_speed(g),
                                                   indexes::horiz_temp_gradient(g), indexes::mos_cat_predictor(g)};
    const std::array<const char*, 6> names{"richardson", "colson_panofsky", "ellrod_ti1",
                                           "wind_speed", "horiz_temp_gradient", "mos_cat"};
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const oracle::Cell cell{rng.below(10), rng.below(10), rng.below(7)};
        const auto scalar = oracle::derived(g, cell);
        const std::size_t at = g.index(cell.i, cell.j, cell.k);
        for (std::size_t k = 0; k < 6; ++k) {
            const double err = std::abs(vectorized[k][at] - scalar[k]) / std::max(1.0, std::abs(scalar[k]));
            worst = std::max(worst, err);
            if (err > 1e-9) c.expect(false, std::string(names[k]) + " disagrees at trial " + std::to_string(trial));
        }
    }
    c.notes << "600 comparisons, worst scaled difference " << std::scientific << std::setprecision(1) << worst;
    return c;
}

} // namespace

int main(int argc, char** argv) {
    std::set<int> only;
    for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));
    const std::vector<std::pair<const char*, std::function<Checks()>>> criteria{
        {"closed-form unit suite", closed_form},
        {"stochastic schedule check", schedule_sampling},
        {"gradient oracle", gradient_oracle},
        {"mask semantics", mask_semantics},
        {"metric oracle", metric_oracle},
        {"end-to-end directional claim", [] { return directional(EndToEnd{}); }},
        {"reproducibility", reproducibility},
        {"index oracle", index_oracle},
    };
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const int number = static_cast<int>(i) + 1;
        if (!only.empty() && !only.count(number)) continue;
        Checks result;
        try {
            result = criteria[i].second();
        } catch (const std::exception& ex) {
            result.failures.push_back(std::string("exception: ") + ex.what());
        }
        const bool ok = result.failures.empty();
        failed += !ok;
        std::cout << (ok ? "PASS" : "FAIL") << " criterion " << number << " (" << criteria[i].first << ")";
        const auto notes = result.notes.str();
        if (!notes.empty()) std::cout << ": " << notes;
        std::cout << '\n';
        for (const auto& f : result.failures) std::cout << "      " << f << '\n';
        std::cout.flush();
    }
    return failed == 0 ? 0 : 1;
}
