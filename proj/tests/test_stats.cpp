#include <gtest/gtest.h>

#include "spritecheck/error.hpp"
#include "spritecheck/rng.hpp"
#include "spritecheck/stats.hpp"
#include "support/oracles.hpp"

using namespace spritecheck;

namespace {

std::vector<double> sample(SplitMix64& rng, int n, double shift, int levels) {
    std::vector<double> v;
    for (int i = 0; i < n; ++i) v.push_back(static_cast<double>(rng.below(static_cast<std::uint64_t>(levels))) + shift);
    return v;
}

}  // namespace

TEST(Accuracy, DefinitionAndErrors) {
    EXPECT_DOUBLE_EQ(accuracy(240, 0), 1.0);
    EXPECT_NEAR(accuracy(107, 133), 0.4458333, 1e-6);
    EXPECT_DOUBLE_EQ(accuracy(0, 5), 0.0);
    EXPECT_THROW((void)accuracy(0, 0), Error);
}

TEST(Accuracy, PercentRenderingRoundsHalfAway) {
    EXPECT_EQ(format_percent(107, 133), "44.6%");
    EXPECT_EQ(format_percent(80, 160), "33.3%");
    EXPECT_EQ(format_percent(180, 60), "75.0%");
    EXPECT_EQ(format_percent(240, 0), "100.0%");
    EXPECT_EQ(format_percent(0, 7), "0.0%");
    // 1/16 = 6.25% exactly; the tie goes up.
    EXPECT_EQ(format_percent(1, 15), "6.3%");
    EXPECT_EQ(format_percent(2, 1), "66.7%");
}

TEST(MannWhitney, CompleteSeparation) {
    const MannWhitney r = mann_whitney_u({1, 2}, {3, 4});
    EXPECT_EQ(r.u_x, 0.0);
    EXPECT_EQ(r.u_y, 4.0);
}

TEST(MannWhitney, IdenticalSamplesShowNoEvidence) {
    const std::vector<double> x{0.3, 0.1, 0.7, 0.7, 0.2, 0.9};
    EXPECT_GT(mann_whitney_u(x, x).p, 0.9);
    std::vector<double> big;
    for (int i = 0; i < 40; ++i) big.push_back(i % 7);
    EXPECT_GT(mann_whitney_u(big, big).p, 0.9);
    EXPECT_EQ(mann_whitney_u(big, big).method, PValueMethod::normal);
}

TEST(MannWhitney, UStatisticsSumToProductOfSizes) {
    SplitMix64 rng(77);
    for (int trial = 0; trial < 30; ++trial) {
        const auto x = sample(rng, 1 + trial % 9, 0, 5);
        const auto y = sample(rng, 1 + trial % 13, 1, 5);
        const MannWhitney r = mann_whitney_u(x, y);
        EXPECT_DOUBLE_EQ(r.u_x + r.u_y, static_cast<double>(x.size() * y.size()));
        EXPECT_DOUBLE_EQ(r.u_x, oracle::pairwise_u(x, y));
        EXPECT_GE(r.p, 0.0);
        EXPECT_LE(r.p, 1.0);
    }
}

TEST(MannWhitney, SmallSamplesMatchExhaustiveEnumeration) {
    SplitMix64 rng(2024);
    for (int trial = 0; trial < 40; ++trial) {
        const int n1 = 1 + static_cast<int>(rng.below(8));
        const int n2 = 1 + static_cast<int>(rng.below(8));
        // Few levels force ties; the shift varies separation.
        const auto x = sample(rng, n1, 0, 4 + trial % 5);
        const auto y = sample(rng, n2, static_cast<double>(trial % 3), 4 + trial % 5);
        const MannWhitney r = mann_whitney_u(x, y);
        EXPECT_EQ(r.method, PValueMethod::exact);
        EXPECT_NEAR(r.p, oracle::exhaustive_mw_p(x, y), 0.01) << "trial " << trial;
    }
}

TEST(MannWhitney, NormalApproximationTracksExactAtEight) {
    const std::vector<double> x{1.1, 2.4, 3.3, 3.3, 5.0, 6.2, 7.7, 8.1};
    const std::vector<double> y{4.0, 5.5, 6.1, 7.0, 8.8, 9.2, 9.9, 10.4};
    const double exact = oracle::exhaustive_mw_p(x, y);
    EXPECT_NEAR(mann_whitney_u(x, y).p, exact, 1e-9);
    EXPECT_NEAR(mann_whitney_u_normal(x, y).p, exact, 0.02);
}

TEST(MannWhitney, Errors) {
    EXPECT_THROW((void)mann_whitney_u({}, {1.0}), Error);
    EXPECT_THROW((void)mann_whitney_u({1.0}, {}), Error);
    EXPECT_THROW((void)mann_whitney_u({1.0, std::nan("")}, {2.0}), Error);
}

TEST(CliffsDelta, DocumentedCases) {
    EXPECT_EQ(cliffs_delta({1, 2, 3}, {4, 5, 6}), (EffectSize{-1.0, EffectLabel::large}));
    EXPECT_EQ(cliffs_delta({1, 2, 3}, {1, 2, 3}), (EffectSize{0.0, EffectLabel::negligible}));
    EXPECT_EQ(cliffs_delta({1, 3}, {2}), (EffectSize{0.0, EffectLabel::negligible}));
    EXPECT_THROW((void)cliffs_delta({}, {1.0}), Error);
}

TEST(CliffsDelta, MatchesBruteForceAndIsAntisymmetric) {
    SplitMix64 rng(99);
    for (int trial = 0; trial < 50; ++trial) {
        const auto x = sample(rng, 1 + trial % 17, 0, 6);
        const auto y = sample(rng, 1 + trial % 11, trial % 2, 6);
        const double d = cliffs_delta(x, y).d;
        EXPECT_EQ(d, oracle::brute_cliffs(x, y));
        EXPECT_EQ(cliffs_delta(y, x).d, -d);
        EXPECT_LE(std::abs(d), 1.0);
    }
}

TEST(CliffsDelta, LabelBoundariesBelongToLowerLabel) {
    EXPECT_EQ(effect_label(0.147), EffectLabel::negligible);
    EXPECT_EQ(effect_label(std::nextafter(0.147, 1.0)), EffectLabel::small);
    EXPECT_EQ(effect_label(0.33), EffectLabel::small);
    EXPECT_EQ(effect_label(std::nextafter(0.33, 1.0)), EffectLabel::medium);
    EXPECT_EQ(effect_label(0.474), EffectLabel::medium);
    EXPECT_EQ(effect_label(std::nextafter(0.474, 1.0)), EffectLabel::large);
    EXPECT_EQ(effect_label(-0.5), EffectLabel::large);
    EXPECT_EQ(effect_label(-0.2), EffectLabel::small);
    for (EffectLabel l : {EffectLabel::negligible, EffectLabel::small, EffectLabel::medium, EffectLabel::large}) {
        EXPECT_EQ(effect_label_from_string(to_string(l)), l);
    }
}

TEST(Summary, LinearInterpolationQuartiles) {
    const Summary s = summarize({4, 1, 3, 2, 5});
    EXPECT_EQ(s.count, 5);
    EXPECT_EQ(s.min, 1);
    EXPECT_EQ(s.q1, 2);
    EXPECT_EQ(s.median, 3);
    EXPECT_EQ(s.q3, 4);
    EXPECT_EQ(s.max, 5);
    EXPECT_EQ(s.mean, 3);
    const Summary t = summarize({1, 2, 3, 4});
    EXPECT_DOUBLE_EQ(t.q1, 1.75);
    EXPECT_DOUBLE_EQ(t.median, 2.5);
}
