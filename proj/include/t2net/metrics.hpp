#pragma once

#include <t2net/error.hpp>
#include <t2net/grid.hpp>
#include <t2net/tensor.hpp>

#include <nlohmann/json.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <iomanip>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace t2net::metrics {

using json = nlohmann::json;

/// Rows are true classes, columns predicted classes.
struct ConfusionMatrix {
    std::array<std::array<std::size_t, kNumClasses>, kNumClasses> counts{};

    void add(std::size_t truth, std::size_t predicted, std::size_t n = 1) { counts.at(truth).at(predicted) += n; }

    ConfusionMatrix& operator+=(const ConfusionMatrix& o) {
        for (std::size_t i = 0; i < kNumClasses; ++i) {
            for (std::size_t j = 0; j < kNumClasses; ++j) counts[i][j] += o.counts[i][j];
        }
        return *this;
    }

    std::size_t total() const {
        std::size_t t = 0;
        for (const auto& row : counts) {
            for (auto v : row) t += v;
        }
        return t;
    }
    std::size_t support(std::size_t k) const {
        std::size_t t = 0;
        for (auto v : counts[k]) t += v;
        return t;
    }
    std::size_t predicted(std::size_t k) const {
        std::size_t t = 0;
        for (const auto& row : counts) t += row[k];
        return t;
    }

    friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;
};

struct ClassScores {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    std::size_t support = 0;
    std::size_t predicted = 0;
    bool precision_undefined = false;  ///< no cell predicted as this class
    bool recall_undefined = false;     ///< no labeled cell of this class
};

struct EvalReport {
    ConfusionMatrix confusion;
    double accuracy = 0.0;
    std::array<ClassScores, kNumClasses> per_class{};
    double weighted_precision = 0.0;
    double weighted_recall = 0.0;
    double weighted_f1 = 0.0;
    std::size_t cells = 0;
    std::vector<EvalReport> by_horizon;  ///< one report per forecast step, when computed from sequences
    json config;                         ///< echo of the producing configuration
    std::string label_source = "labels";
};

/// Metrics from a confusion matrix. Empty denominators give 0 and raise the
/// matching flag. Throws EmptyReportError when no labeled cell was evaluated.
inline EvalReport report_from_confusion(const ConfusionMatrix& cm) {
    EvalReport r;
    r.confusion = cm;
    r.cells = cm.total();
    if (r.cells == 0) throw EmptyReportError("evaluation: zero labeled cells, metrics are undefined");
    const double n = static_cast<double>(r.cells);
    std::size_t correct = 0;
    for (std::size_t k = 0; k < kNumClasses; ++k) correct += cm.counts[k][k];
    r.accuracy = static_cast<double>(correct) / n;
    for (std::size_t k = 0; k < kNumClasses; ++k) {
        auto& s = r.per_class[k];
        s.support = cm.support(k);
        s.predicted = cm.predicted(k);
        const double tp = static_cast<double>(cm.counts[k][k]);
        s.precision_undefined = s.predicted == 0;
        s.recall_undefined = s.support == 0;
        s.precision = s.precision_undefined ? 0.0 : tp / static_cast<double>(s.predicted);
        s.recall = s.recall_undefined ? 0.0 : tp / static_cast<double>(s.support);
        s.f1 = s.precision + s.recall > 0.0 ? 2.0 * s.precision * s.recall / (s.precision + s.recall) : 0.0;
        const double w = static_cast<double>(s.support) / n;
        r.weighted_precision += w * s.precision;
        r.weighted_recall += w * s.recall;
        r.weighted_f1 += w * s.f1;
    }
    // Support-weighted recall is the accuracy whenever every labeled cell has a prediction.
    if (std::abs(r.weighted_recall - r.accuracy) > 1e-12) {
        throw Error("evaluation: weighted recall " + std::to_string(r.weighted_recall) + " differs from accuracy " +
                    std::to_string(r.accuracy));
    }
    return r;
}

/// Confusion counts over cells whose label is known. Predictions at unknown cells are ignored.
inline ConfusionMatrix confusion(const Tensor<std::int8_t>& predicted, const LabelCube& target) {
    require_same_shape(predicted.shape(), target.labels.shape(), "evaluate: prediction vs label cube");
    ConfusionMatrix cm;
    for (std::size_t c = 0; c < predicted.size(); ++c) {
        const int y = target.labels[c];
        if (y == kUnknownLabel) continue;
        const int p = predicted[c];
        if (y < 0 || y >= static_cast<int>(kNumClasses)) throw ValidationError("evaluate: invalid label code");
        if (p < 0 || p >= static_cast<int>(kNumClasses)) {
            throw ValidationError("evaluate: predicted class " + std::to_string(p) + " outside 0..3");
        }
        cm.add(static_cast<std::size_t>(y), static_cast<std::size_t>(p));
    }
    return cm;
}

/// Pooled metrics over a collection of argmax cubes and their label cubes.
inline EvalReport evaluate(const std::vector<Tensor<std::int8_t>>& predictions, const std::vector<LabelCube>& targets) {
    if (predictions.size() != targets.size()) throw StructuralError("evaluate: prediction and label counts differ");
    ConfusionMatrix cm;
    for (std::size_t i = 0; i < predictions.size(); ++i) cm += confusion(predictions[i], targets[i]);
    return report_from_confusion(cm);
}

/// Pooled metrics plus one report per forecast step. Outer index is the
/// sample, inner index the step. Steps with no labeled cell get an empty report.
inline EvalReport evaluate_sequences(const std::vector<std::vector<Tensor<std::int8_t>>>& predictions,
                                     const std::vector<std::vector<LabelCube>>& targets) {
    if (predictions.size() != targets.size()) throw StructuralError("evaluate: sample counts differ");
    std::vector<ConfusionMatrix> steps;
    ConfusionMatrix pooled;
    for (std::size_t s = 0; s < predictions.size(); ++s) {
        if (predictions[s].size() != targets[s].size()) throw StructuralError("evaluate: step counts differ");
        if (steps.size() < predictions[s].size()) steps.resize(predictions[s].size());
        for (std::size_t j = 0; j < predictions[s].size(); ++j) {
            const auto cm = confusion(predictions[s][j], targets[s][j]);
            steps[j] += cm;
            pooled += cm;
        }
    }
    EvalReport report = report_from_confusion(pooled);
    for (const auto& cm : steps) {
        if (cm.total() == 0) {
            EvalReport empty;
            empty.confusion = cm;
            report.by_horizon.push_back(empty);
        } else {
            report.by_horizon.push_back(report_from_confusion(cm));
        }
    }
    return report;
}

namespace detail {

inline json headline(const EvalReport& r) {
    json per_class = json::array();
    for (std::size_t k = 0; k < kNumClasses; ++k) {
        const auto& s = r.per_class[k];
        per_class.push_back({{"class", kClassNames[k]},
                             {"precision", s.precision},
                             {"recall", s.recall},
                             {"f1", s.f1},
                             {"support", s.support},
                             {"predicted", s.predicted},
                             {"precision_undefined", s.precision_undefined},
                             {"recall_undefined", s.recall_undefined}});
    }
    json cm = json::array();
    for (const auto& row : r.confusion.counts) cm.push_back(row);
    return {{"cells", r.cells},
            {"accuracy", r.accuracy},
            {"weighted_precision", r.weighted_precision},
            {"weighted_recall", r.weighted_recall},
            {"weighted_f1", r.weighted_f1},
            {"confusion_matrix", cm},
            {"per_class", per_class}};
}

} // namespace detail

inline json to_json(const EvalReport& r) {
    json j = detail::headline(r);
    j["pooling"] = "pooled_cells";
    j["label_source"] = r.label_source;
    j["zero_division_convention"] = "undefined precision or recall counts as 0 and is flagged";
    json horizons = json::array();
    for (std::size_t h = 0; h < r.by_horizon.size(); ++h) {
        json entry = r.by_horizon[h].cells ? detail::headline(r.by_horizon[h]) : json{{"cells", 0}};
        entry["step"] = h + 1;
        horizons.push_back(entry);
    }
    j["by_horizon"] = horizons;
    if (!r.config.is_null()) j["config"] = r.config;
    return j;
}

/// Aligned plain-text rendering of the report.
inline std::string to_text(const EvalReport& r) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(4);
    os << "cells evaluated: " << r.cells << " (" << r.label_source << ", pooled over horizon steps)\n";
    os << "accuracy          " << r.accuracy << "\n";
    os << "weighted precision " << r.weighted_precision << "\n";
    os << "weighted recall   " << r.weighted_recall << "\n";
    os << "weighted F1       " << r.weighted_f1 << "\n\n";
    os << std::left << std::setw(10) << "class" << std::right << std::setw(11) << "precision" << std::setw(9) << "recall"
       << std::setw(9) << "f1" << std::setw(10) << "support" << "\n";
    for (std::size_t k = 0; k < kNumClasses; ++k) {
        const auto& s = r.per_class[k];
        os << std::left << std::setw(10) << kClassNames[k] << std::right << std::setw(10) << s.precision
           << (s.precision_undefined ? "*" : " ") << std::setw(8) << s.recall << (s.recall_undefined ? "*" : " ")
           << std::setw(9) << s.f1 << std::setw(10) << s.support << "\n";
    }
    os << "(* undefined, reported as 0)\n\nconfusion matrix (rows true, columns predicted)\n";
    for (std::size_t i = 0; i < kNumClasses; ++i) {
        os << std::left << std::setw(10) << kClassNames[i] << std::right;
        for (auto v : r.confusion.counts[i]) os << std::setw(9) << v;
        os << "\n";
    }
    if (!r.by_horizon.empty()) {
        os << "\nstep  cells   accuracy  weighted_f1\n";
        for (std::size_t h = 0; h < r.by_horizon.size(); ++h) {
            const auto& s = r.by_horizon[h];
            os << std::setw(4) << h + 1 << std::setw(7) << s.cells << std::setw(11) << s.accuracy << std::setw(13)
               << s.weighted_f1 << "\n";
        }
    }
    return os.str();
}

/// A named polyline for svg_line_plot.
struct PlotSeries {
    std::string name;
    std::vector<std::pair<double, double>> points;
};

/// Minimal static SVG line chart.
inline std::string svg_line_plot(const std::string& title, const std::string& x_label, const std::string& y_label,
                                 const std::vector<PlotSeries>& series) {
    const double width = 640, height = 400, left = 60, right = 150, top = 40, bottom = 50;
    double x0 = 1e300, x1 = -1e300, y0 = 1e300, y1 = -1e300;
    for (const auto& s : series) {
        for (const auto& [x, y] : s.points) {
            x0 = std::min(x0, x), x1 = std::max(x1, x), y0 = std::min(y0, y), y1 = std::max(y1, y);
        }
    }
    if (x0 > x1) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
    if (x1 - x0 < 1e-12) x0 -= 0.5, x1 += 0.5;
    if (y1 - y0 < 1e-12) y0 -= 0.05, y1 += 0.05;
    const double pw = width - left - right, ph = height - top - bottom;
    auto sx = [&](double x) { return left + (x - x0) / (x1 - x0) * pw; };
    auto sy = [&](double y) { return top + ph - (y - y0) / (y1 - y0) * ph; };
    static const char* colours[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};
    std::ostringstream os;
    os << std::setprecision(6);
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height << "\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    os << "<text x=\"" << width / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" << title << "</text>\n";
    os << "<line x1=\"" << left << "\" y1=\"" << top + ph << "\" x2=\"" << left + pw << "\" y2=\"" << top + ph
       << "\" stroke=\"black\"/>\n";
    os << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\"" << top + ph
       << "\" stroke=\"black\"/>\n";
    for (int t = 0; t <= 4; ++t) {
        const double xv = x0 + (x1 - x0) * t / 4.0, yv = y0 + (y1 - y0) * t / 4.0;
        os << "<text x=\"" << sx(xv) << "\" y=\"" << top + ph + 16 << "\" text-anchor=\"middle\" font-size=\"11\">"
           << xv << "</text>\n";
        os << "<text x=\"" << left - 6 << "\" y=\"" << sy(yv) + 4 << "\" text-anchor=\"end\" font-size=\"11\">" << yv
           << "</text>\n";
    }
    os << "<text x=\"" << left + pw / 2 << "\" y=\"" << height - 10 << "\" text-anchor=\"middle\" font-size=\"12\">"
       << x_label << "</text>\n";
    os << "<text x=\"14\" y=\"" << top + ph / 2 << "\" transform=\"rotate(-90 14 " << top + ph / 2
       << ")\" text-anchor=\"middle\" font-size=\"12\">" << y_label << "</text>\n";
    for (std::size_t i = 0; i < series.size(); ++i) {
        const char* colour = colours[i % 6];
        os << "<polyline fill=\"none\" stroke=\"" << colour << "\" stroke-width=\"2\" points=\"";
        for (const auto& [x, y] : series[i].points) os << sx(x) << "," << sy(y) << " ";
        os << "\"/>\n";
        for (const auto& [x, y] : series[i].points) {
            os << "<circle cx=\"" << sx(x) << "\" cy=\"" << sy(y) << "\" r=\"3\" fill=\"" << colour << "\"/>\n";
        }
        const double ly = top + 14 + 18.0 * static_cast<double>(i);
        os << "<line x1=\"" << left + pw + 12 << "\" y1=\"" << ly << "\" x2=\"" << left + pw + 32 << "\" y2=\"" << ly
           << "\" stroke=\"" << colour << "\" stroke-width=\"2\"/>\n";
        os << "<text x=\"" << left + pw + 38 << "\" y=\"" << ly + 4 << "\" font-size=\"12\">" << series[i].name
           << "</text>\n";
    }
    os << "</svg>\n";
    return os.str();
}

/// Accuracy and weighted-F1 against forecast step.
inline std::string horizon_plot(const EvalReport& r) {
    PlotSeries acc{"accuracy", {}}, f1{"weighted F1", {}};
    for (std::size_t h = 0; h < r.by_horizon.size(); ++h) {
        if (r.by_horizon[h].cells == 0) continue;
        acc.points.emplace_back(static_cast<double>(h + 1), r.by_horizon[h].accuracy);
        f1.points.emplace_back(static_cast<double>(h + 1), r.by_horizon[h].weighted_f1);
    }
    return svg_line_plot("metrics by forecast step", "forecast step (hours)", "score", {acc, f1});
}

} // namespace t2net::metrics
