#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "spritecheck/bundle.hpp"
#include "spritecheck/metrics.hpp"
#include "spritecheck/oracle.hpp"

namespace spritecheck {

enum class Approach { ours, baseline };

std::string to_string(Approach approach);
Approach approach_from_string(const std::string& name);

struct Threshold {
    MetricKind kind = MetricKind::PCT;
    double value = 0.0;
    int calibrated_runs = 0;
    long long calibrated_scores = 0;

    friend bool operator==(const Threshold&, const Threshold&) = default;
};

enum class VerdictScope { pair, snapshot, run };

struct Verdict {
    VerdictScope scope = VerdictScope::pair;
    MetricKind kind = MetricKind::PCT;
    bool buggy = false;
    double worst_score = 0.0;
    std::vector<std::string> offending;
};

// True if `candidate` is less similar than `current` under the metric's polarity.
bool less_similar(MetricKind kind, double candidate, double current);

// Threshold at the least similar clean score: min for PCT/SSIM/ESIM, max for MSE.
Threshold calibrate(const std::vector<std::vector<MetricScore>>& clean_runs, MetricKind kind);

// Inclusive: a score equal to the threshold passes.
Verdict judge_pair(const MetricScore& score, const Threshold& threshold);
Verdict judge_snapshot(const std::vector<Verdict>& pairs);
Verdict judge_run(const std::vector<Verdict>& snapshots);

// Whole-screenshot snapshot testing: oracle_shots[i] vs test_shots[i].
std::vector<MetricScore> baseline_compare(const std::vector<Bitmap>& oracle_shots, const std::vector<Bitmap>& test_shots,
                                          MetricKind kind, const MetricConfig& config = {});

// Scores every non-skipped pair of one snapshot. Pairs whose crop is smaller
// than the SSIM window are left out of the SSIM list.
std::map<MetricKind, std::vector<MetricScore>> score_pairs(const std::vector<ImagePair>& pairs,
                                                           const std::vector<MetricKind>& kinds,
                                                           const MetricConfig& config = {});

// Our approach on one bundle: pairs, scores, per-pair and snapshot verdicts.
Verdict detect_snapshot(const std::vector<MetricScore>& scores, const Threshold& threshold);

struct ThresholdSet {
    Approach approach = Approach::ours;
    std::string provider;  // embedding provider used for ESIM, if any
    std::vector<Threshold> thresholds;

    [[nodiscard]] const Threshold* find(MetricKind kind) const;
    friend bool operator==(const ThresholdSet&, const ThresholdSet&) = default;
};

void save_thresholds(const ThresholdSet& set, const std::filesystem::path& path);
ThresholdSet load_thresholds(const std::filesystem::path& path);

}  // namespace spritecheck
