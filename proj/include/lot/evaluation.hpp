#pragma once

// Per-class and macro-averaged F1 over the three stance labels, plus the
// gold-by-predicted confusion matrix. Any 0/0 quotient (precision, recall,
// F1) is defined as 0, and the macro average always spans exactly the three
// classes, whether or not they appear in the golds.

#include <array>
#include <iomanip>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "lot/labels.hpp"

namespace lot {

struct LabeledPrediction {
    StanceLabel label;
    bool was_invalid = false;
};

struct EvalReport {
    std::array<double, 3> per_class_f1{};        // indexed by label_index
    double macro_f1 = 0.0;
    std::array<std::array<long long, 3>, 3> confusion{}; // [gold][predicted]
    std::size_t n = 0;
    std::size_t invalid_count = 0;

    double f1(StanceLabel l) const { return per_class_f1[static_cast<std::size_t>(label_index(l))]; }

    nlohmann::json to_json() const {
        nlohmann::json per_class;
        for (StanceLabel l : kAllLabels) per_class[encode_label(l)] = f1(l);
        nlohmann::json rows = nlohmann::json::array();
        for (const auto& row : confusion) rows.push_back(row);
        return {{"per_class_f1", per_class}, {"macro_f1", macro_f1}, {"confusion", rows},
                {"n", n}, {"invalid_count", invalid_count}};
    }

    std::string render_table() const {
        std::ostringstream os;
        os << std::fixed << std::setprecision(4);
        os << "class      F1\n";
        for (StanceLabel l : kAllLabels) {
            os << std::left << std::setw(11) << encode_label(l) << f1(l) << '\n';
        }
        os << std::left << std::setw(11) << "macro" << macro_f1 << '\n';
        os << "n=" << n << " invalid=" << invalid_count << '\n';
        os << "confusion (rows gold, cols predicted; order positive/negative/neutral):\n";
        for (const auto& row : confusion) {
            for (auto v : row) os << std::setw(7) << v;
            os << '\n';
        }
        return os.str();
    }
};

inline EvalReport evaluate(const std::vector<LabeledPrediction>& preds,
                           const std::vector<StanceLabel>& golds) {
    if (preds.size() != golds.size()) {
        throw std::runtime_error("evaluate: " + std::to_string(preds.size()) + " predictions vs " +
                                 std::to_string(golds.size()) + " golds");
    }
    if (preds.empty()) throw std::runtime_error("evaluate: empty input");

    EvalReport report;
    report.n = preds.size();
    for (std::size_t i = 0; i < preds.size(); ++i) {
        ++report.confusion[static_cast<std::size_t>(label_index(golds[i]))]
                          [static_cast<std::size_t>(label_index(preds[i].label))];
        if (preds[i].was_invalid) ++report.invalid_count;
    }

    double sum = 0.0;
    for (std::size_t c = 0; c < 3; ++c) {
        long long tp = report.confusion[c][c];
        long long fp = 0;
        long long fn = 0;
        for (std::size_t other = 0; other < 3; ++other) {
            if (other == c) continue;
            fp += report.confusion[other][c];
            fn += report.confusion[c][other];
        }
        const double precision = (tp + fp) == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fp);
        const double recall = (tp + fn) == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fn);
        const double f1 = (precision + recall) == 0.0 ? 0.0 : 2.0 * precision * recall / (precision + recall);
        report.per_class_f1[c] = f1;
        sum += f1;
    }
    report.macro_f1 = sum / 3.0;
    return report;
}

} // namespace lot
