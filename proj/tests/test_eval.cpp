#include "gazeclass/eval.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace gazeclass;

namespace {
constexpr auto N = Expertise::Novice;
constexpr auto I = Expertise::Intermediate;
constexpr auto E = Expertise::Expert;
}  // namespace

TEST(Score, PerfectPredictions) {
    const std::vector<Expertise> t{N, I, E, E, N};
    const auto s = score(t, t);
    EXPECT_DOUBLE_EQ(s.accuracy, 1.0);
    for (double r : s.recall) EXPECT_DOUBLE_EQ(r, 1.0);
    EXPECT_DOUBLE_EQ(s.macro_miss_rate, 0.0);
    EXPECT_FALSE(s.binary.has_value());
    EXPECT_EQ(s.confusion.total(), 5u);
    EXPECT_EQ(s.confusion.row_sum(E), 2u);
}

TEST(Score, BinaryFixtureRates) {
    // Intermediates are the negative class (156 = 127 TN + 29 FP), experts
    // the positive class (104 = 102 TP + 2 FN).
    std::vector<Expertise> truth, pred;
    auto add = [&](Expertise t, Expertise p, int n) {
        for (int i = 0; i < n; ++i) {
            truth.push_back(t);
            pred.push_back(p);
        }
    };
    add(I, I, 127);
    add(I, E, 29);
    add(E, E, 102);
    add(E, I, 2);
    const auto s = score(pred, truth);
    ASSERT_TRUE(s.binary.has_value());
    const auto& b = *s.binary;
    EXPECT_EQ(b.positive, E);
    EXPECT_EQ(b.negative, I);
    EXPECT_EQ(b.tp, 102u);
    EXPECT_EQ(b.fn, 2u);
    EXPECT_EQ(b.fp, 29u);
    EXPECT_EQ(b.tn, 127u);
    EXPECT_NEAR(s.accuracy, 0.881, 0.0005);
    EXPECT_NEAR(b.false_positive_rate, 0.186, 0.0005);
    EXPECT_NEAR(b.false_omission_rate, 0.016, 0.0005);
    EXPECT_NEAR(b.false_negative_rate, 2.0 / 104.0, 1e-12);
    EXPECT_NEAR(1.0 - s.accuracy, 0.119, 0.0005);
    EXPECT_TRUE(std::isnan(s.recall[class_index(N)]));
    EXPECT_NEAR(s.macro_miss_rate, 0.5 * (29.0 / 156.0 + 2.0 / 104.0), 1e-12);
}

TEST(Score, AccuracyIsTraceOverTotal) {
    std::mt19937_64 rng(1);
    std::uniform_int_distribution<int> c(0, 2);
    for (int k = 0; k < 20; ++k) {
        std::vector<Expertise> t, p;
        for (int i = 0; i < 50; ++i) {
            t.push_back(kAllClasses[c(rng)]);
            p.push_back(kAllClasses[c(rng)]);
        }
        const auto s = score(p, t);
        std::size_t diag = 0;
        for (std::size_t i = 0; i < 3; ++i) diag += s.confusion.counts[i][i];
        EXPECT_DOUBLE_EQ(s.accuracy, static_cast<double>(diag) / 50.0);
        const auto again = score(s.confusion);
        EXPECT_DOUBLE_EQ(again.accuracy, s.accuracy);
        for (std::size_t i = 0; i < 3; ++i)
            if (!std::isnan(s.recall[i])) EXPECT_NEAR(s.recall[i] + s.miss_rate[i], 1.0, 1e-12);
    }
}

TEST(Score, RandomTernaryIsNearChance) {
    std::mt19937_64 rng(2);
    std::uniform_int_distribution<int> c(0, 2);
    std::vector<Expertise> t, p;
    for (int i = 0; i < 30000; ++i) {
        t.push_back(kAllClasses[c(rng)]);
        p.push_back(kAllClasses[c(rng)]);
    }
    EXPECT_NEAR(score(p, t).accuracy, 1.0 / 3.0, 0.01);
}

TEST(Score, MismatchedLengthsThrow) {
    const std::vector<Expertise> a{N}, b{N, I};
    EXPECT_THROW(score(a, b), Error);
    EXPECT_THROW(score(std::vector<Expertise>{}, std::vector<Expertise>{}), Error);
}

TEST(Confusion, Accumulates) {
    const std::vector<Expertise> t{N, I}, p{I, I};
    auto cm = confusion_matrix(p, t);
    cm += confusion_matrix(p, t);
    EXPECT_EQ(cm.counts[0][1], 2u);
    EXPECT_EQ(cm.counts[1][1], 2u);
    EXPECT_EQ(cm.total(), 4u);
}

TEST(RunSummary, FiveValues) {
    const std::vector<double> v{5, 1, 3, 2, 4};
    const auto d = summarize_runs(v);
    EXPECT_DOUBLE_EQ(d.median, 3.0);
    EXPECT_DOUBLE_EQ(d.q1, 2.0);
    EXPECT_DOUBLE_EQ(d.q3, 4.0);
    EXPECT_DOUBLE_EQ(d.lower_adjacent, 1.0);
    EXPECT_DOUBLE_EQ(d.upper_adjacent, 5.0);
    EXPECT_DOUBLE_EQ(d.mean, 3.0);
}

TEST(RunSummary, ConstantAndOutliers) {
    const std::vector<double> c(10, 0.7);
    const auto d = summarize_runs(c);
    EXPECT_DOUBLE_EQ(d.median, 0.7);
    EXPECT_DOUBLE_EQ(d.lower_adjacent, 0.7);
    EXPECT_DOUBLE_EQ(d.upper_adjacent, 0.7);

    // q1 = 1, q3 = 4.5, lower fence -4.25: 0 stays, -10 is an outlier.
    const std::vector<double> v{-10, 0, 2, 3, 4, 5, 6, std::nan("")};
    const auto o = summarize_runs(v);
    EXPECT_EQ(o.values.size(), 7u);
    EXPECT_DOUBLE_EQ(o.q1, 1.0);
    EXPECT_DOUBLE_EQ(o.q3, 4.5);
    EXPECT_DOUBLE_EQ(o.lower_adjacent, 0.0);
    EXPECT_DOUBLE_EQ(o.upper_adjacent, 6.0);
}

TEST(RunSummary, QuantilesMatchOracle) {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0, 1);
    std::vector<double> v(1000);
    for (auto& x : v) x = u(rng);
    const auto d = summarize_runs(v);
    EXPECT_NEAR(d.median, oracle::quantile7(v, 0.5), 1e-9);
    EXPECT_NEAR(d.q1, oracle::quantile7(v, 0.25), 1e-9);
    EXPECT_NEAR(d.q3, oracle::quantile7(v, 0.75), 1e-9);
    EXPECT_LE(d.lower_adjacent, d.q1);
    EXPECT_GE(d.upper_adjacent, d.q3);
}
