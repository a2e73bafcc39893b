#include <filesystem>
#include <memory>

#include <gtest/gtest.h>

#include "spritecheck/detector.hpp"
#include "spritecheck/metrics.hpp"
#include "support/oracles.hpp"
#include "support/scenes.hpp"

namespace fs = std::filesystem;
using namespace spritecheck;

namespace {

Bitmap perturbed(const Bitmap& src, std::uint64_t seed, int changes) {
    Bitmap out = src;
    SplitMix64 rng(seed);
    for (int k = 0; k < changes; ++k) {
        const int x = static_cast<int>(rng.below(static_cast<std::uint64_t>(src.width())));
        const int y = static_cast<int>(rng.below(static_cast<std::uint64_t>(src.height())));
        Rgba p = out.at(x, y);
        p.g = static_cast<std::uint8_t>(p.g + 1 + rng.below(200));
        out.set(x, y, p);
    }
    return out;
}

MetricScore ms(const std::string& id, MetricKind kind, double v) { return {id, kind, v}; }

}  // namespace

TEST(Metrics, IdenticalImagesScorePerfectly) {
    const Bitmap a = oracle::random_bitmap(1, 24, 24);
    EXPECT_EQ(pct(a, a), 1.0);
    EXPECT_EQ(mse(a, a), 0.0);
    EXPECT_EQ(ssim(a, a), 1.0);
    EXPECT_EQ(esim(a, a, default_provider()), 1.0);
}

TEST(Metrics, AgreeWithNaiveOracles) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const Bitmap a = oracle::random_bitmap(100 + seed, 32, 32);
        const Bitmap b = seed % 2 == 0 ? oracle::random_bitmap(200 + seed, 32, 32) : perturbed(a, seed, 150);
        EXPECT_NEAR(pct(a, b), oracle::naive_pct(a, b), 1e-12);
        EXPECT_NEAR(mse(a, b), oracle::naive_mse(a, b), 1e-9);
        EXPECT_NEAR(ssim(a, b), oracle::naive_ssim(a, b), 1e-9);
    }
}

TEST(Metrics, PctIgnoresAlpha) {
    const Bitmap a(4, 4, {10, 20, 30, 255});
    const Bitmap b(4, 4, {10, 20, 30, 0});
    EXPECT_EQ(pct(a, b), 1.0);
    EXPECT_EQ(mse(a, b), 0.0);
}

TEST(Metrics, MseOfConstantShift) {
    const Bitmap a(5, 3, {10, 20, 30, 255});
    const Bitmap b(5, 3, {13, 16, 30, 255});
    EXPECT_DOUBLE_EQ(mse(a, b), (9.0 + 16.0) / 3.0);
}

TEST(Metrics, ShapeErrors) {
    EXPECT_THROW((void)pct(Bitmap(3, 3), Bitmap(3, 4)), Error);
    EXPECT_THROW((void)mse(Bitmap(), Bitmap()), Error);
    EXPECT_THROW((void)ssim(Bitmap(6, 6), Bitmap(6, 6)), Error);
    SsimParams even;
    even.window = 4;
    EXPECT_THROW((void)ssim(Bitmap(9, 9), Bitmap(9, 9), even), Error);
}

TEST(Metrics, CosineEdgeCases) {
    const std::vector<double> z{0, 0, 0};
    const std::vector<double> u{1, 2, 3};
    const std::vector<double> v{2, 4, 6};
    const std::vector<double> w{-1, -2, -3};
    EXPECT_EQ(cosine_similarity(z, z), 1.0);
    EXPECT_EQ(cosine_similarity(z, u), 0.0);
    EXPECT_NEAR(cosine_similarity(u, v), 1.0, 1e-15);
    EXPECT_NEAR(cosine_similarity(u, w), -1.0, 1e-15);
    EXPECT_THROW((void)cosine_similarity(u, std::vector<double>{1, 2}), Error);
}

TEST(Metrics, DefaultEmbeddingLayout) {
    const Bitmap flat(16, 16, {40, 80, 120, 255});
    const auto e = default_embedding(flat);
    ASSERT_EQ(e.size(), 256u);
    EXPECT_DOUBLE_EQ(e[0], 40.0);
    EXPECT_DOUBLE_EQ(e[63], 40.0);
    EXPECT_DOUBLE_EQ(e[64], 80.0);
    EXPECT_DOUBLE_EQ(e[128], 120.0);
    for (std::size_t i = 192; i < 256; ++i) EXPECT_DOUBLE_EQ(e[i], 0.0);
}

TEST(Metrics, EsimDropsForDifferentContent) {
    const Bitmap a(16, 16, {250, 10, 10, 255});
    const Bitmap b(16, 16, {10, 10, 250, 255});
    EXPECT_LT(esim(a, b, default_provider()), 0.5);
}

TEST(Metrics, ExternalProviderReadsVectorFromStdout) {
    const ExternalEmbeddingProvider p("sh -c 'cat >/dev/null; echo 3 1 2 3'");
    const Bitmap a(8, 8, {1, 2, 3, 255});
    EXPECT_EQ(p.embed(a), (std::vector<double>{1, 2, 3}));
    EXPECT_EQ(p.dimension(), 3);
    EXPECT_DOUBLE_EQ(esim(a, Bitmap(8, 8), p), 1.0);
}

TEST(Metrics, ExternalProviderFailuresAreErrors) {
    const Bitmap a(8, 8);
    EXPECT_THROW((void)ExternalEmbeddingProvider("sh -c 'cat >/dev/null; exit 3'").embed(a), Error);
    EXPECT_THROW((void)ExternalEmbeddingProvider("sh -c 'cat >/dev/null; echo 2 1 oops'").embed(a), Error);
    EXPECT_THROW(ExternalEmbeddingProvider(""), Error);
}

TEST(Metrics, ScoringSkippedPairIsAnError) {
    ImagePair p;
    p.node_id = "n";
    p.skipped = true;
    EXPECT_THROW((void)score(p, MetricKind::PCT), Error);
}

TEST(Metrics, KindNamesRoundTrip) {
    for (MetricKind k : kAllMetrics) EXPECT_EQ(metric_from_string(to_string(k)), k);
    EXPECT_THROW((void)metric_from_string("PSNR"), Error);
    EXPECT_EQ(polarity(MetricKind::MSE), Polarity::lower_is_similar);
    EXPECT_EQ(polarity(MetricKind::SSIM), Polarity::higher_is_similar);
}

TEST(Detector, CalibrationTakesLeastSimilarCleanScore) {
    const std::vector<std::vector<MetricScore>> runs{
        {ms("a", MetricKind::PCT, 0.99), ms("b", MetricKind::PCT, 0.97)},
        {ms("a", MetricKind::PCT, 0.98), ms("a", MetricKind::MSE, 4.0)},
    };
    const Threshold t = calibrate(runs, MetricKind::PCT);
    EXPECT_DOUBLE_EQ(t.value, 0.97);
    EXPECT_EQ(t.calibrated_runs, 2);
    EXPECT_EQ(t.calibrated_scores, 3);
    EXPECT_DOUBLE_EQ(calibrate(runs, MetricKind::MSE).value, 4.0);
    EXPECT_THROW((void)calibrate(runs, MetricKind::SSIM), Error);
    EXPECT_THROW((void)calibrate({}, MetricKind::PCT), Error);
}

TEST(Detector, ThresholdIsInclusive) {
    const Threshold pct_t{MetricKind::PCT, 0.9, 1, 1};
    EXPECT_FALSE(judge_pair(ms("a", MetricKind::PCT, 0.9), pct_t).buggy);
    EXPECT_TRUE(judge_pair(ms("a", MetricKind::PCT, 0.8999), pct_t).buggy);
    const Threshold mse_t{MetricKind::MSE, 2.0, 1, 1};
    EXPECT_FALSE(judge_pair(ms("a", MetricKind::MSE, 2.0), mse_t).buggy);
    EXPECT_TRUE(judge_pair(ms("a", MetricKind::MSE, 2.5), mse_t).buggy);
    EXPECT_THROW((void)judge_pair(ms("a", MetricKind::MSE, 0), pct_t), Error);
}

TEST(Detector, SnapshotAndRunAggregation) {
    const Threshold t{MetricKind::SSIM, 0.95, 1, 1};
    const Verdict clean = detect_snapshot({ms("a", MetricKind::SSIM, 1.0), ms("b", MetricKind::SSIM, 0.96)}, t);
    EXPECT_FALSE(clean.buggy);
    const Verdict bad = detect_snapshot(
        {ms("a", MetricKind::SSIM, 0.5), ms("b", MetricKind::SSIM, 0.9), ms("c", MetricKind::SSIM, 1.0)}, t);
    EXPECT_TRUE(bad.buggy);
    EXPECT_DOUBLE_EQ(bad.worst_score, 0.5);
    EXPECT_EQ(bad.offending, (std::vector<std::string>{"a", "b"}));
    const Verdict run = judge_run({clean, bad});
    EXPECT_TRUE(run.buggy);
    EXPECT_EQ(run.scope, VerdictScope::run);
    EXPECT_DOUBLE_EQ(run.worst_score, 0.5);
    EXPECT_THROW((void)judge_run({}), Error);
}

TEST(Detector, ScorePairsLeavesSmallCropsOutOfSsim) {
    ImagePair big;
    big.node_id = "big";
    big.oracle = big.object = Bitmap(10, 10, {1, 1, 1, 255});
    ImagePair tiny;
    tiny.node_id = "tiny";
    tiny.oracle = tiny.object = Bitmap(5, 12, {1, 1, 1, 255});
    ImagePair gone;
    gone.node_id = "gone";
    gone.skipped = true;
    const auto scores = score_pairs({big, tiny, gone}, {MetricKind::PCT, MetricKind::SSIM});
    EXPECT_EQ(scores.at(MetricKind::PCT).size(), 2u);
    ASSERT_EQ(scores.at(MetricKind::SSIM).size(), 1u);
    EXPECT_EQ(scores.at(MetricKind::SSIM)[0].node_id, "big");
}

TEST(Detector, BaselineComparesWholeScreenshots) {
    const Bitmap a = oracle::random_bitmap(4, 20, 20);
    const Bitmap b = perturbed(a, 9, 40);
    const auto s = baseline_compare({a, a}, {a, b}, MetricKind::MSE);
    ASSERT_EQ(s.size(), 2u);
    EXPECT_EQ(s[0].value, 0.0);
    EXPECT_NEAR(s[1].value, oracle::naive_mse(a, b), 1e-9);
    EXPECT_THROW((void)baseline_compare({a}, {a}, MetricKind::ESIM), Error);
    EXPECT_THROW((void)baseline_compare({a}, {a, b}, MetricKind::PCT), Error);
}

TEST(Detector, ThresholdFileRoundTrip) {
    ThresholdSet set;
    set.approach = Approach::baseline;
    set.provider = "default-grid-256";
    set.thresholds = {{MetricKind::PCT, 0.123456789012345, 10, 100}, {MetricKind::MSE, 984.869, 10, 100}};
    const fs::path path = fs::temp_directory_path() / "spritecheck_test_thresholds.json";
    save_thresholds(set, path);
    EXPECT_EQ(load_thresholds(path), set);
    ASSERT_NE(set.find(MetricKind::MSE), nullptr);
    EXPECT_EQ(set.find(MetricKind::SSIM), nullptr);
    EXPECT_THROW((void)load_thresholds(fs::temp_directory_path() / "spritecheck_no_such_file.json"), Error);
}

TEST(Detector, EndToEndOnFixtureScene) {
    SnapshotBundle b = fixture::overlap_bundle();
    const auto clean = score_pairs(build_pairs(b), {MetricKind::MSE});
    const Threshold t = calibrate({clean.at(MetricKind::MSE)}, MetricKind::MSE);
    EXPECT_EQ(t.value, 0.0);
    for (int x = 10; x < 14; ++x) b.screenshot.set(x, 11, {0, 200, 0, 255});
    const auto buggy = score_pairs(build_pairs(b), {MetricKind::MSE});
    const Verdict v = detect_snapshot(buggy.at(MetricKind::MSE), t);
    EXPECT_TRUE(v.buggy);
    EXPECT_EQ(v.offending, (std::vector<std::string>{"red"}));
}
