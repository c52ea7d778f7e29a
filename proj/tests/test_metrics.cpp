#include <catch_amalgamated.hpp>

#include <t2net/metrics.hpp>
#include <t2net/rng.hpp>

using namespace t2net;
using Catch::Approx;

namespace {

/// Expands a confusion matrix into flat (label, prediction) cubes.
std::pair<Tensor<std::int8_t>, LabelCube> cells_from_matrix(const std::array<std::array<int, 4>, 4>& m) {
    std::vector<std::int8_t> truth, pred;
    for (int i = 0; i < 4; ++i) {
        for (int j = 0; j < 4; ++j) {
            for (int n = 0; n < m[i][j]; ++n) truth.push_back(static_cast<std::int8_t>(i)), pred.push_back(static_cast<std::int8_t>(j));
        }
    }
    const Shape s{truth.size(), 1, 1};
    return {Tensor<std::int8_t>(s, pred), LabelCube{Tensor<std::int8_t>(s, truth), 0}};
}

/// Textbook F1 for one class straight from the matrix.
double oracle_f1(const std::array<std::array<int, 4>, 4>& m, int k) {
    double tp = m[k][k], col = 0, row = 0;
    for (int i = 0; i < 4; ++i) col += m[i][k], row += m[k][i];
    const double p = col > 0 ? tp / col : 0.0, r = row > 0 ? tp / row : 0.0;
    return p + r > 0 ? 2 * p * r / (p + r) : 0.0;
}

} // namespace

TEST_CASE("perfect predictions score 1") {
    const auto [pred, labels] = cells_from_matrix({{{5, 0, 0, 0}, {0, 3, 0, 0}, {0, 0, 2, 0}, {0, 0, 0, 1}}});
    const auto r = metrics::evaluate({pred}, {labels});
    CHECK(r.accuracy == 1.0);
    CHECK(r.weighted_f1 == Approx(1.0).margin(1e-15));
    CHECK(r.weighted_precision == Approx(1.0).margin(1e-15));
}

TEST_CASE("ten-cell confusion example") {
    const std::array<std::array<int, 4>, 4> m{{{3, 1, 0, 0}, {0, 2, 0, 0}, {1, 0, 2, 0}, {0, 0, 0, 1}}};
    const auto [pred, labels] = cells_from_matrix(m);
    const auto r = metrics::evaluate({pred}, {labels});
    CHECK(r.cells == 10);
    CHECK(r.accuracy == Approx(0.8).margin(1e-15));
    CHECK(r.per_class[0].f1 == Approx(0.75).margin(1e-12));
    CHECK(r.per_class[1].f1 == Approx(0.8).margin(1e-12));
    CHECK(r.per_class[2].f1 == Approx(0.8).margin(1e-12));
    CHECK(r.per_class[3].f1 == Approx(1.0).margin(1e-12));
    const double expected = (4 * oracle_f1(m, 0) + 2 * oracle_f1(m, 1) + 3 * oracle_f1(m, 2) + 1 * oracle_f1(m, 3)) / 10.0;
    CHECK(expected == Approx(0.8).margin(1e-12));
    CHECK(r.weighted_f1 == Approx(0.8).margin(1e-12));
    CHECK(r.confusion.counts[2][0] == 1);
}

TEST_CASE("unknown cells never affect the metrics") {
    Tensor<std::int8_t> truth({6, 1, 1}, std::vector<std::int8_t>{0, 1, -1, 2, -1, 3});
    Tensor<std::int8_t> pred_a({6, 1, 1}, std::vector<std::int8_t>{0, 1, 3, 2, 0, 1});
    Tensor<std::int8_t> pred_b({6, 1, 1}, std::vector<std::int8_t>{0, 1, 0, 2, 2, 1});
    const LabelCube labels{truth, 0};
    const auto a = metrics::evaluate({pred_a}, {labels});
    const auto b = metrics::evaluate({pred_b}, {labels});
    CHECK(a.cells == 4);
    CHECK(a.confusion == b.confusion);
    CHECK(a.weighted_f1 == b.weighted_f1);
}

TEST_CASE("zero labeled cells is an explicit error") {
    Tensor<std::int8_t> truth({3, 1, 1}, std::int8_t{-1});
    CHECK_THROWS_AS(metrics::evaluate({Tensor<std::int8_t>({3, 1, 1}, std::int8_t{0})}, {LabelCube{truth, 0}}),
                    EmptyReportError);
}

TEST_CASE("empty denominators report zero with a flag") {
    const auto [pred, labels] = cells_from_matrix({{{3, 0, 0, 0}, {2, 0, 0, 0}, {0, 0, 0, 0}, {0, 0, 0, 0}}});
    const auto r = metrics::evaluate({pred}, {labels});
    CHECK(r.per_class[1].precision_undefined);
    CHECK(r.per_class[1].precision == 0.0);
    CHECK(r.per_class[2].recall_undefined);
    CHECK(r.per_class[2].recall == 0.0);
    CHECK(r.per_class[2].f1 == 0.0);
    CHECK_FALSE(r.per_class[0].precision_undefined);
}

TEST_CASE("invalid predicted class is rejected") {
    Tensor<std::int8_t> truth({1, 1, 1}, std::int8_t{0});
    CHECK_THROWS_AS(metrics::evaluate({Tensor<std::int8_t>({1, 1, 1}, std::int8_t{4})}, {LabelCube{truth, 0}}),
                    ValidationError);
    CHECK_THROWS_AS(metrics::evaluate({Tensor<std::int8_t>({2, 1, 1}, std::int8_t{0})}, {LabelCube{truth, 0}}),
                    StructuralError);
}

TEST_CASE("random confusion matrices: weighted recall equals accuracy, scores bounded") {
    RandomStream rng(2024);
    for (int trial = 0; trial < 100; ++trial) {
        std::array<std::array<int, 4>, 4> m{};
        int total = 0;
        for (auto& row : m) {
            for (auto& v : row) total += (v = static_cast<int>(rng.below(rng.below(2) ? 30 : 4)));
        }
        if (total == 0) m[0][0] = 1;
        const auto [pred, labels] = cells_from_matrix(m);
        const auto r = metrics::evaluate({pred}, {labels});
        CHECK(r.weighted_recall == Approx(r.accuracy).margin(1e-12));
        for (const auto& s : r.per_class) {
            CHECK(s.f1 >= 0.0);
            CHECK(s.f1 <= 1.0);
        }
        for (double v : {r.weighted_f1, r.weighted_precision, r.weighted_recall, r.accuracy}) {
            CHECK(v >= 0.0);
            CHECK(v <= 1.0 + 1e-12);
        }
        for (int k = 0; k < 4; ++k) CHECK(r.per_class[static_cast<std::size_t>(k)].f1 == Approx(oracle_f1(m, k)).margin(1e-12));

        // Cell order does not matter.
        std::vector<std::size_t> perm(pred.size());
        std::iota(perm.begin(), perm.end(), 0);
        shuffle_with(perm, rng);
        Tensor<std::int8_t> p2(pred.shape()), l2(pred.shape());
        for (std::size_t i = 0; i < perm.size(); ++i) p2[i] = pred[perm[i]], l2[i] = labels.labels[perm[i]];
        const auto r2 = metrics::evaluate({p2}, {LabelCube{l2, 0}});
        CHECK(r2.confusion == r.confusion);
        CHECK(r2.weighted_f1 == r.weighted_f1);
    }
}

TEST_CASE("horizon-stratified reports sum to the pooled report") {
    const auto [p0, l0] = cells_from_matrix({{{3, 1, 0, 0}, {0, 2, 0, 0}, {0, 0, 0, 0}, {0, 0, 0, 0}}});
    const auto [p1, l1] = cells_from_matrix({{{1, 0, 0, 0}, {0, 0, 1, 0}, {0, 0, 1, 0}, {0, 0, 0, 2}}});
    const auto r = metrics::evaluate_sequences({{p0, p1}}, {{l0, l1}});
    REQUIRE(r.by_horizon.size() == 2);
    CHECK(r.by_horizon[0].cells == 6);
    CHECK(r.by_horizon[1].cells == 5);
    CHECK(r.cells == 11);
    auto sum = r.by_horizon[0].confusion;
    sum += r.by_horizon[1].confusion;
    CHECK(sum == r.confusion);
}

TEST_CASE("report serialization") {
    const auto [pred, labels] = cells_from_matrix({{{3, 1, 0, 0}, {0, 2, 0, 0}, {1, 0, 2, 0}, {0, 0, 0, 1}}});
    const auto r = metrics::evaluate_sequences({{pred}}, {{labels}});
    const auto j = metrics::to_json(r);
    for (const char* key : {"accuracy", "weighted_precision", "weighted_recall", "weighted_f1", "confusion_matrix",
                            "per_class", "by_horizon", "pooling"}) {
        CHECK(j.contains(key));
    }
    CHECK(j["cells"] == 10);
    const auto text = metrics::to_text(r);
    CHECK(text.find("weighted F1") != std::string::npos);
    CHECK(text.find("Severe") != std::string::npos);
    const auto svg = metrics::horizon_plot(r);
    CHECK(svg.rfind("<svg", 0) == 0);
    CHECK(svg.find("polyline") != std::string::npos);
}
