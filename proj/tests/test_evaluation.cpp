#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <random>

#include "lot/evaluation.hpp"
#include "support/eval_oracle.hpp"

using namespace lot;
using lot_test::brute_force_macro_f1;

namespace {

std::vector<LabeledPrediction> wrap(const std::vector<StanceLabel>& labels) {
    std::vector<LabeledPrediction> out;
    out.reserve(labels.size());
    for (auto l : labels) out.push_back({l, false});
    return out;
}

constexpr auto P = StanceLabel::positive;
constexpr auto N = StanceLabel::negative;
constexpr auto U = StanceLabel::neutral;

} // namespace

TEST_CASE("perfect predictions score macro 1 with a diagonal confusion") {
    const std::vector<StanceLabel> golds = {P, N, U, P, N, U};
    auto report = evaluate(wrap(golds), golds);
    CHECK(report.macro_f1 == 1.0);
    for (StanceLabel l : kAllLabels) CHECK(report.f1(l) == 1.0);
    for (int g = 0; g < 3; ++g) {
        for (int p = 0; p < 3; ++p) {
            if (g != p) CHECK(report.confusion[g][p] == 0);
        }
    }
    CHECK(report.n == 6);
}

TEST_CASE("all-wrong predictions with no true positives score macro 0") {
    const std::vector<StanceLabel> golds = {P, N, U};
    const std::vector<StanceLabel> preds = {N, U, P};
    auto report = evaluate(wrap(preds), golds);
    CHECK(report.macro_f1 == 0.0);
}

TEST_CASE("hand-derived mixed example scores 7/9") {
    const std::vector<StanceLabel> golds = {P, P, N, U};
    const std::vector<StanceLabel> preds = {P, N, N, U};
    auto report = evaluate(wrap(preds), golds);
    CHECK_THAT(report.f1(P), Catch::Matchers::WithinAbs(2.0 / 3.0, 1e-12));
    CHECK_THAT(report.f1(N), Catch::Matchers::WithinAbs(2.0 / 3.0, 1e-12));
    CHECK_THAT(report.f1(U), Catch::Matchers::WithinAbs(1.0, 1e-12));
    CHECK_THAT(report.macro_f1, Catch::Matchers::WithinAbs(7.0 / 9.0, 1e-12));

    // Agreement with the independent oracle on the same example.
    auto oracle = brute_force_macro_f1(preds, golds);
    CHECK_THAT(report.macro_f1, Catch::Matchers::WithinAbs(oracle.macro_f1, 1e-12));
}

TEST_CASE("macro_f1 is the unweighted mean of the three per-class scores") {
    std::mt19937 rng(11);
    std::uniform_int_distribution<int> pick(0, 2);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<StanceLabel> golds;
        std::vector<StanceLabel> preds;
        for (int i = 0; i < 12; ++i) {
            golds.push_back(label_from_index(pick(rng)));
            preds.push_back(label_from_index(pick(rng)));
        }
        auto report = evaluate(wrap(preds), golds);
        const double mean = (report.f1(P) + report.f1(N) + report.f1(U)) / 3.0;
        CHECK_THAT(report.macro_f1, Catch::Matchers::WithinAbs(mean, 1e-12));
        CHECK(report.macro_f1 >= 0.0);
        CHECK(report.macro_f1 <= 1.0);
    }
}

TEST_CASE("report is invariant under joint permutation of the pairs") {
    std::vector<StanceLabel> golds = {P, P, N, U, N, U, P, N};
    std::vector<StanceLabel> preds = {P, N, N, U, U, U, N, N};
    auto base = evaluate(wrap(preds), golds);

    std::vector<std::size_t> order(golds.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::mt19937 rng(3);
    for (int trial = 0; trial < 20; ++trial) {
        std::shuffle(order.begin(), order.end(), rng);
        std::vector<StanceLabel> g2;
        std::vector<StanceLabel> p2;
        for (auto i : order) {
            g2.push_back(golds[i]);
            p2.push_back(preds[i]);
        }
        auto shuffled = evaluate(wrap(p2), g2);
        CHECK(shuffled.macro_f1 == base.macro_f1);
        CHECK(shuffled.per_class_f1 == base.per_class_f1);
        CHECK(shuffled.confusion == base.confusion);
    }
}

TEST_CASE("label symmetry: permuting labels permutes per-class scores, macro unchanged") {
    const std::vector<StanceLabel> golds = {P, P, N, U, N, U, P, P};
    const std::vector<StanceLabel> preds = {P, N, N, U, U, U, N, P};
    auto base = evaluate(wrap(preds), golds);

    // Cyclic permutation positive->negative->neutral->positive.
    auto sigma = [](StanceLabel l) { return label_from_index((label_index(l) + 1) % 3); };
    std::vector<StanceLabel> g2;
    std::vector<StanceLabel> p2;
    for (auto l : golds) g2.push_back(sigma(l));
    for (auto l : preds) p2.push_back(sigma(l));
    auto permuted = evaluate(wrap(p2), g2);

    CHECK_THAT(permuted.macro_f1, Catch::Matchers::WithinAbs(base.macro_f1, 1e-12));
    for (StanceLabel l : kAllLabels) {
        CHECK_THAT(permuted.f1(sigma(l)), Catch::Matchers::WithinAbs(base.f1(l), 1e-12));
    }
}

TEST_CASE("evaluate matches the brute-force oracle exhaustively for n <= 3") {
    for (int n = 1; n <= 3; ++n) {
        long cases = 1;
        for (int i = 0; i < 2 * n; ++i) cases *= 3;
        for (long code = 0; code < cases; ++code) {
            long c = code;
            std::vector<StanceLabel> golds;
            std::vector<StanceLabel> preds;
            for (int i = 0; i < n; ++i) {
                golds.push_back(label_from_index(static_cast<int>(c % 3)));
                c /= 3;
            }
            for (int i = 0; i < n; ++i) {
                preds.push_back(label_from_index(static_cast<int>(c % 3)));
                c /= 3;
            }
            auto report = evaluate(wrap(preds), golds);
            auto oracle = brute_force_macro_f1(preds, golds);
            REQUIRE_THAT(report.macro_f1, Catch::Matchers::WithinAbs(oracle.macro_f1, 1e-9));
            for (int cls = 0; cls < 3; ++cls) {
                REQUIRE_THAT(report.per_class_f1[static_cast<std::size_t>(cls)],
                             Catch::Matchers::WithinAbs(oracle.per_class_f1[cls], 1e-9));
            }
        }
    }
}

TEST_CASE("invalid flags are counted, confusion sums to n") {
    std::vector<LabeledPrediction> preds = {{P, false}, {U, true}, {U, true}, {N, false}};
    std::vector<StanceLabel> golds = {P, N, U, N};
    auto report = evaluate(preds, golds);
    CHECK(report.invalid_count == 2);
    long long total = 0;
    for (const auto& row : report.confusion) {
        for (auto v : row) total += v;
    }
    CHECK(total == 4);
}

TEST_CASE("evaluate rejects mismatched or empty inputs") {
    CHECK_THROWS_WITH(evaluate(wrap({P}), {P, N}),
                      Catch::Matchers::ContainsSubstring("1 predictions vs 2 golds"));
    CHECK_THROWS_WITH(evaluate({}, {}), Catch::Matchers::ContainsSubstring("empty"));
}

TEST_CASE("report serializes all fields") {
    auto report = evaluate(wrap({P, N}), {P, P});
    auto j = report.to_json();
    CHECK(j.at("n") == 2);
    CHECK(j.at("per_class_f1").contains("positive"));
    CHECK(j.at("confusion").size() == 3);
    CHECK(j.contains("macro_f1"));
    CHECK(j.contains("invalid_count"));

    auto table = report.render_table();
    CHECK(table.find("macro") != std::string::npos);
    CHECK(table.find("positive") != std::string::npos);
}
