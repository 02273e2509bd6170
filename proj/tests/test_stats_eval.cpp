#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "myomap/error.hpp"
#include "myomap/stats_eval.hpp"
#include "oracles.hpp"
#include "temp_dir.hpp"

using namespace myomap;
using namespace myomap::stats;

namespace {

template <typename F>
ErrorCode code_of(F&& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    return ErrorCode::InvalidArgument;
}

ClassificationReport report_from(const std::vector<int>& correct, const std::string& name) {
    std::vector<SubjectOutcome> out;
    for (std::size_t i = 0; i < correct.size(); ++i) {
        const bool truth = i % 2 == 0;
        out.push_back({"S" + std::to_string(100 + i), correct[i] ? truth : !truth, truth});
    }
    return make_report(name, {"t1_uq"}, std::nullopt, name, "test", out);
}

}  // namespace

TEST(Confusion, HandCounts) {
    const std::vector<bool> all(5, true);
    EXPECT_EQ(confusion(all, all), (ConfusionCounts{5, 0, 0, 0}));
    const std::vector<bool> t = {true, false, true, false}, p = {true, true, false, false};
    EXPECT_EQ(confusion(p, t), (ConfusionCounts{1, 1, 1, 1}));
    std::vector<bool> inv;
    for (bool b : t) {
        inv.push_back(!b);
    }
    const auto c = confusion(inv, t);
    EXPECT_EQ(c.tp, 0u);
    EXPECT_EQ(c.tn, 0u);
    EXPECT_EQ(code_of([&] { confusion(p, all); }), ErrorCode::LengthMismatch);
}

TEST(Confusion, PermutationInvariant) {
    std::mt19937_64 gen(12);
    std::vector<bool> p(40), t(40);
    for (std::size_t i = 0; i < 40; ++i) {
        p[i] = gen() % 2;
        t[i] = gen() % 2;
    }
    const auto base = confusion(p, t);
    EXPECT_EQ(base.total(), 40u);
    std::vector<std::size_t> idx(40);
    std::iota(idx.begin(), idx.end(), 0);
    std::shuffle(idx.begin(), idx.end(), gen);
    std::vector<bool> p2, t2;
    for (auto i : idx) {
        p2.push_back(p[i]);
        t2.push_back(t[i]);
    }
    EXPECT_EQ(confusion(p2, t2), base);
}

TEST(PrecisionRecall, RandomForestRowShape) {
    const auto m = precision_recall_f1({19, 3, 7, 0});
    EXPECT_NEAR(m.precision, 19.0 / 22.0, 1e-12);
    EXPECT_EQ(m.recall, 1.0);
    EXPECT_NEAR(m.f1, 2 * m.precision / (m.precision + 1), 1e-12);
    EXPECT_NEAR(m.f1, 0.9268, 1e-4);
    EXPECT_NEAR(m.precision, 0.864, 1e-3);
}

TEST(PrecisionRecall, PerfectAndDegenerate) {
    const auto perfect = precision_recall_f1({4, 0, 5, 0});
    EXPECT_EQ(perfect.precision, 1.0);
    EXPECT_EQ(perfect.f1, 1.0);
    const auto none = precision_recall_f1({0, 0, 5, 3});
    EXPECT_TRUE(none.precision_undefined);
    EXPECT_EQ(none.precision, 0.0);
    EXPECT_EQ(none.recall, 0.0);
    EXPECT_EQ(none.f1, 0.0);
    const auto no_pos = precision_recall_f1({0, 2, 5, 0});
    EXPECT_TRUE(no_pos.recall_undefined);
}

TEST(Reports, F1IdentityAndJsonRoundTrip) {
    auto a = report_from({1, 1, 0, 1, 1, 0, 1, 1}, "cutoff");
    a.cutoff = 1034.0;
    a.features = {"t1_uq"};
    const auto b = report_from({1, 1, 1, 1, 1, 1, 1, 0}, "rf");
    for (const auto& r : {a, b}) {
        if (r.precision + r.recall > 0) {
            EXPECT_NEAR(r.f1, 2 * r.precision * r.recall / (r.precision + r.recall), 1e-9);
        }
        EXPECT_EQ(r.confusion.total(), r.outcomes.size());
    }
    testutil::TempDir dir;
    write_reports_json(dir / "r.json", {a, b});
    const auto back = read_reports_json(dir / "r.json");
    ASSERT_EQ(back.size(), 2u);
    EXPECT_EQ(back[0], a);
    EXPECT_EQ(back[1], b);
}

TEST(Wilcoxon, NoDifferencesIsDegenerate) {
    const std::vector<double> a = {1, 2, 3};
    const auto r = wilcoxon_signed_rank(a, a);
    EXPECT_EQ(r.n_effective, 0u);
    EXPECT_EQ(r.p_two_sided, 1.0);
    EXPECT_TRUE(r.degenerate);
}

TEST(Wilcoxon, SixPositiveDifferences) {
    const std::vector<double> a = {5, 6, 7, 8, 9, 10}, b = {4.9, 5.7, 6.5, 7.2, 8.1, 8.8};
    const auto r = wilcoxon_signed_rank(a, b);
    EXPECT_EQ(r.method, "wilcoxon-exact");
    EXPECT_EQ(r.n_effective, 6u);
    EXPECT_DOUBLE_EQ(r.statistic, 21.0);
    EXPECT_DOUBLE_EQ(r.p_two_sided, 0.03125);
}

TEST(Wilcoxon, ExactMatchesEnumerationIncludingTies) {
    std::mt19937_64 gen(6);
    for (int t = 0; t < 300; ++t) {
        const std::size_t n = 1 + gen() % 14;
        std::vector<double> a(n), b(n, 0.0);
        for (auto& v : a) {
            // Small integer magnitudes force ties; zeros are dropped.
            v = static_cast<double>(static_cast<int>(gen() % 9) - 4);
        }
        const auto r = wilcoxon_signed_rank(a, b, WilcoxonMethod::Exact);
        // Midranks of nonzero |d| computed by counting.
        std::vector<double> mags, ranks;
        std::vector<bool> pos;
        for (double v : a) {
            if (v != 0) {
                mags.push_back(std::abs(v));
                pos.push_back(v > 0);
            }
        }
        for (double m : mags) {
            double less = 0, equal = 0;
            for (double o : mags) {
                less += o < m;
                equal += o == m;
            }
            ranks.push_back(less + (equal + 1) / 2);
        }
        ASSERT_EQ(r.n_effective, mags.size());
        if (mags.empty()) {
            continue;
        }
        ASSERT_NEAR(r.p_two_sided, oracle::signed_rank_enumeration_p(ranks, pos), 1e-12);
        ASSERT_EQ(r.p_two_sided, wilcoxon_signed_rank(b, a, WilcoxonMethod::Exact).p_two_sided);
    }
}

TEST(Wilcoxon, NormalBranchNearExactAtForty) {
    std::mt19937_64 gen(40);
    std::normal_distribution<double> z(0, 1);
    for (int t = 0; t < 20; ++t) {
        std::vector<double> a(40), b(40);
        for (std::size_t i = 0; i < 40; ++i) {
            a[i] = z(gen) + 0.3;
            b[i] = z(gen);
        }
        const auto normal = wilcoxon_signed_rank(a, b);
        EXPECT_EQ(normal.method, "wilcoxon-normal");
        const double exact = oracle::signed_rank_counting_p(40, std::llround(normal.statistic));
        EXPECT_NEAR(normal.p_two_sided, exact, 0.02);
        EXPECT_NEAR(wilcoxon_signed_rank(a, b, WilcoxonMethod::Exact).p_two_sided, exact, 1e-12);
    }
}

TEST(Wilcoxon, LengthMismatch) {
    EXPECT_EQ(code_of([] { wilcoxon_signed_rank(std::vector<double>{1, 2}, std::vector<double>{1}); }),
              ErrorCode::LengthMismatch);
}

TEST(CompareMethods, SelfComparisonAndOneSidedDisagreement) {
    const auto a = report_from(std::vector<int>(20, 1), "rf");
    EXPECT_EQ(compare_methods(a, a).p_two_sided, 1.0);
    std::vector<int> wrong(20, 1);
    std::fill(wrong.begin(), wrong.begin() + 8, 0);
    const auto b = report_from(wrong, "cutoff");
    const auto r = compare_methods(a, b);
    EXPECT_EQ(r.n_effective, 8u);
    EXPECT_DOUBLE_EQ(r.p_two_sided, 2.0 / 256.0);
    EXPECT_EQ(compare_methods(b, a).p_two_sided, r.p_two_sided);
}

TEST(CompareMethods, PairsBySubjectIdNotPosition) {
    const auto a = report_from({1, 0, 1, 1}, "x");
    auto shuffled = a;
    std::reverse(shuffled.outcomes.begin(), shuffled.outcomes.end());
    EXPECT_EQ(compare_methods(a, shuffled).n_effective, 0u);
}

TEST(CompareMethods, DisjointSubjectsRejected) {
    const auto a = report_from({1, 1}, "x");
    auto b = a;
    b.outcomes[0].subject_id = "Z1";
    EXPECT_EQ(code_of([&] { compare_methods(a, b); }), ErrorCode::SubjectMismatch);
}

TEST(Comparisons, CsvRoundTrip) {
    const auto a = report_from({1, 1, 0, 1, 0, 0, 1}, "a");
    const auto b = report_from({1, 0, 1, 1, 1, 1, 1}, "b");
    const std::vector<Comparison> rows = {{"a", "b", compare_methods(a, b)}, {"a", "a", compare_methods(a, a)}};
    testutil::TempDir dir;
    write_comparisons_csv(dir / "c.csv", rows);
    const auto back = read_comparisons_csv(dir / "c.csv");
    ASSERT_EQ(back.size(), 2u);
    for (std::size_t i = 0; i < 2; ++i) {
        EXPECT_EQ(back[i].method_a, rows[i].method_a);
        EXPECT_EQ(back[i].result.p_two_sided, rows[i].result.p_two_sided);
        EXPECT_EQ(back[i].result.statistic, rows[i].result.statistic);
        EXPECT_EQ(back[i].result.n_effective, rows[i].result.n_effective);
        EXPECT_EQ(back[i].result.method, rows[i].result.method);
    }
}
