#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "spritecheck/detector.hpp"
#include "spritecheck/metrics.hpp"
#include "spritecheck/simulator.hpp"
#include "spritecheck/stats.hpp"

namespace spritecheck {

// Granularity of our approach's score populations in the clean-vs-buggy
// statistics. The baseline always contributes one score per screenshot.
enum class Population { per_pair, per_snapshot };
std::string to_string(Population population);
Population population_from_string(const std::string& name);

struct ExperimentConfig {
    GameConfig game;
    int repetitions = 10;
    int calibration_runs = 10;
    std::uint64_t base_seed = 1;
    std::vector<MetricKind> metrics{MetricKind::PCT, MetricKind::MSE, MetricKind::SSIM, MetricKind::ESIM};
    std::vector<Approach> approaches{Approach::ours, Approach::baseline};
    std::vector<std::string> bug_keys;  // empty selects all 24
    int jobs = 1;
    MetricConfig metric_config;
    Rgba fill = kDefaultFill;
    Population population = Population::per_pair;
    std::function<void(const std::string&)> log;  // progress lines, may be empty
};

// Seed layout. Calibration, oracle, bug and validation seeds never collide
// for counts below 1000.
std::uint64_t calibration_seed(std::uint64_t base, int run);
std::uint64_t oracle_seed(std::uint64_t base);
std::uint64_t bug_seed(std::uint64_t base, int bug_index, int repetition);
std::uint64_t validation_seed(std::uint64_t base, int run);

// The baseline has no ESIM: whole-screenshot embeddings are out of scope.
bool metric_applies(Approach approach, MetricKind kind);

struct RunScores {
    // ours: [snapshot][pair] per metric
    std::map<MetricKind, std::vector<std::vector<MetricScore>>> ours;
    // baseline: one score per snapshot per metric
    std::map<MetricKind, std::vector<MetricScore>> baseline;
    std::vector<double> snapshot_seconds;  // our per-snapshot processing time
};

struct Calibration {
    ThresholdSet ours;
    ThresholdSet baseline;
    std::vector<Bitmap> oracle_shots;  // the baseline's reference run
    std::vector<RunScores> clean_runs;
};

RunScores score_run(const std::vector<SnapshotBundle>& run, const std::vector<Bitmap>* oracle_shots,
                    const ExperimentConfig& config);

Calibration calibrate_experiment(const ExperimentConfig& config);

struct RunVerdict {
    Approach approach = Approach::ours;
    MetricKind metric = MetricKind::PCT;
    Verdict verdict;
};

std::vector<RunVerdict> judge_scores(const RunScores& scores, const Calibration& calibration,
                                     const ExperimentConfig& config);

struct CellResult {
    std::string bug_key;
    Approach approach = Approach::ours;
    MetricKind metric = MetricKind::PCT;
    int detected = 0;
    int repetitions = 0;
    double worst_score = 0.0;
    double threshold = 0.0;
    std::vector<int> detected_by_rep;  // 1 = flagged
    std::string failure;               // empty unless some repetition threw

    friend bool operator==(const CellResult&, const CellResult&) = default;
};

struct AccuracyRow {
    Approach approach = Approach::ours;
    MetricKind metric = MetricKind::PCT;
    long long tp = 0;
    long long fn = 0;
    double accuracy = 0.0;
    std::string formatted;

    friend bool operator==(const AccuracyRow&, const AccuracyRow&) = default;
};

struct Distribution {
    Approach approach = Approach::ours;
    MetricKind metric = MetricKind::PCT;
    std::vector<double> clean;
    std::vector<double> buggy;
    Summary clean_summary;
    Summary buggy_summary;
    MannWhitney mann_whitney;
    EffectSize effect;

    friend bool operator==(const Distribution&, const Distribution&) = default;
};

struct Timing {
    long long snapshots = 0;
    double mean_snapshot_seconds = 0.0;
    double max_snapshot_seconds = 0.0;
    double wall_seconds = 0.0;

    friend bool operator==(const Timing&, const Timing&) = default;
};

struct EvaluationTable {
    int version = 1;
    int repetitions = 0;
    int calibration_runs = 0;
    std::uint64_t base_seed = 0;
    int canvas_w = 0;
    int canvas_h = 0;
    int snapshot_count = 0;
    std::string provider;
    Population population = Population::per_pair;
    std::vector<std::string> bug_keys;
    ThresholdSet ours_thresholds;
    ThresholdSet baseline_thresholds;
    std::vector<CellResult> cells;  // sorted by bug key order, approach, metric
    std::vector<AccuracyRow> accuracies;
    std::vector<Distribution> distributions;
    Timing timing;
    std::vector<std::string> notes;

    [[nodiscard]] const CellResult* cell(const std::string& bug, Approach approach, MetricKind metric) const;
    [[nodiscard]] const AccuracyRow* accuracy_row(Approach approach, MetricKind metric) const;
    [[nodiscard]] const Distribution* distribution(Approach approach, MetricKind metric) const;

    friend bool operator==(const EvaluationTable&, const EvaluationTable&) = default;
};

// Builds the clean-vs-buggy population of one approach and metric.
std::vector<double> population_scores(const RunScores& scores, Approach approach, MetricKind metric,
                                      Population population);

EvaluationTable evaluate_experiment(const ExperimentConfig& config);

}  // namespace spritecheck
