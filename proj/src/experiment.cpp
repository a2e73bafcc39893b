#include "spritecheck/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <exception>
#include <mutex>
#include <thread>

#include "spritecheck/bug_injector.hpp"
#include "spritecheck/oracle.hpp"

namespace spritecheck {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

void log_line(const ExperimentConfig& config, const std::string& line) {
    if (config.log) config.log(line);
}

GameConfig with_seed(const GameConfig& base, std::uint64_t seed) {
    GameConfig c = base;
    c.seed = seed;
    return c;
}

std::vector<Bitmap> screenshots(const std::vector<SnapshotBundle>& run) {
    std::vector<Bitmap> out;
    out.reserve(run.size());
    for (const auto& b : run) out.push_back(b.screenshot);
    return out;
}

bool uses(const ExperimentConfig& config, Approach approach) {
    return std::find(config.approaches.begin(), config.approaches.end(), approach) != config.approaches.end();
}

// Runs fn(i) for i in [0, n) on up to `jobs` threads. Exceptions are
// captured per index by the caller.
void parallel_for(int n, int jobs, const std::function<void(int)>& fn) {
    jobs = std::clamp(jobs, 1, std::max(1, n));
    if (jobs == 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::thread> workers;
    workers.reserve(static_cast<std::size_t>(jobs));
    for (int w = 0; w < jobs; ++w) {
        workers.emplace_back([&] {
            for (int i = next++; i < n; i = next++) fn(i);
        });
    }
    for (auto& t : workers) t.join();
}

int effective_jobs(const ExperimentConfig& config) {
    const auto& p = config.metric_config.provider;
    if (p && !p->concurrent_safe()) return 1;
    return std::max(1, config.jobs);
}

}  // namespace

std::string to_string(Population population) {
    return population == Population::per_pair ? "per_pair" : "per_snapshot";
}

Population population_from_string(const std::string& name) {
    if (name == "per_pair") return Population::per_pair;
    if (name == "per_snapshot") return Population::per_snapshot;
    throw Error("unknown population granularity '" + name + "'");
}

std::uint64_t calibration_seed(std::uint64_t base, int run) { return base + static_cast<std::uint64_t>(run); }
std::uint64_t oracle_seed(std::uint64_t base) { return base + 999; }
std::uint64_t bug_seed(std::uint64_t base, int bug_index, int repetition) {
    return base + 100000 + static_cast<std::uint64_t>(bug_index) * 1000 + static_cast<std::uint64_t>(repetition);
}
std::uint64_t validation_seed(std::uint64_t base, int run) { return base + 50000 + static_cast<std::uint64_t>(run); }

bool metric_applies(Approach approach, MetricKind kind) {
    return approach == Approach::ours || kind != MetricKind::ESIM;
}

RunScores score_run(const std::vector<SnapshotBundle>& run, const std::vector<Bitmap>* oracle_shots,
                    const ExperimentConfig& config) {
    RunScores out;
    if (uses(config, Approach::ours)) {
        for (MetricKind k : config.metrics) out.ours[k].resize(run.size());
        for (std::size_t i = 0; i < run.size(); ++i) {
            const auto start = Clock::now();
            const std::vector<ImagePair> pairs = build_pairs(run[i], config.fill);
            auto scores = score_pairs(pairs, config.metrics, config.metric_config);
            for (auto& [k, list] : scores) out.ours[k][i] = std::move(list);
            out.snapshot_seconds.push_back(seconds_since(start));
        }
    }
    if (uses(config, Approach::baseline) && oracle_shots != nullptr) {
        const std::vector<Bitmap> shots = screenshots(run);
        for (MetricKind k : config.metrics) {
            if (!metric_applies(Approach::baseline, k)) continue;
            out.baseline[k] = baseline_compare(*oracle_shots, shots, k, config.metric_config);
        }
    }
    return out;
}

Calibration calibrate_experiment(const ExperimentConfig& config) {
    if (config.calibration_runs <= 0) throw Error("calibration needs at least one clean run");
    Calibration cal;
    cal.ours.approach = Approach::ours;
    cal.baseline.approach = Approach::baseline;
    const auto& provider = config.metric_config.provider;
    cal.ours.provider = provider ? provider->name() : default_provider().name();
    if (uses(config, Approach::baseline)) {
        cal.oracle_shots = screenshots(run_test_case(with_seed(config.game, oracle_seed(config.base_seed))));
    }
    cal.clean_runs.resize(static_cast<std::size_t>(config.calibration_runs));
    std::vector<std::exception_ptr> errors(cal.clean_runs.size());
    parallel_for(config.calibration_runs, effective_jobs(config), [&](int i) {
        try {
            const auto run = run_test_case(with_seed(config.game, calibration_seed(config.base_seed, i)));
            cal.clean_runs[static_cast<std::size_t>(i)] = score_run(run, &cal.oracle_shots, config);
        } catch (...) {
            errors[static_cast<std::size_t>(i)] = std::current_exception();
        }
    });
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
    for (MetricKind k : config.metrics) {
        if (uses(config, Approach::ours)) {
            std::vector<std::vector<MetricScore>> runs;
            for (const auto& rs : cal.clean_runs) {
                std::vector<MetricScore> flat;
                for (const auto& snap : rs.ours.at(k)) flat.insert(flat.end(), snap.begin(), snap.end());
                runs.push_back(std::move(flat));
            }
            cal.ours.thresholds.push_back(calibrate(runs, k));
        }
        if (uses(config, Approach::baseline) && metric_applies(Approach::baseline, k)) {
            std::vector<std::vector<MetricScore>> runs;
            for (const auto& rs : cal.clean_runs) runs.push_back(rs.baseline.at(k));
            cal.baseline.thresholds.push_back(calibrate(runs, k));
        }
    }
    log_line(config, "calibrated on " + std::to_string(config.calibration_runs) + " clean runs");
    return cal;
}

std::vector<RunVerdict> judge_scores(const RunScores& scores, const Calibration& calibration,
                                     const ExperimentConfig& config) {
    std::vector<RunVerdict> out;
    for (Approach a : config.approaches) {
        const ThresholdSet& set = a == Approach::ours ? calibration.ours : calibration.baseline;
        for (MetricKind k : config.metrics) {
            if (!metric_applies(a, k)) continue;
            const Threshold* t = set.find(k);
            if (t == nullptr) throw Error("no " + to_string(a) + " threshold for " + to_string(k));
            std::vector<Verdict> snapshots;
            if (a == Approach::ours) {
                for (const auto& snap : scores.ours.at(k)) snapshots.push_back(detect_snapshot(snap, *t));
            } else {
                for (const auto& s : scores.baseline.at(k)) {
                    Verdict v = judge_pair(s, *t);
                    v.scope = VerdictScope::snapshot;
                    snapshots.push_back(std::move(v));
                }
            }
            out.push_back({a, k, judge_run(snapshots)});
        }
    }
    return out;
}

std::vector<double> population_scores(const RunScores& scores, Approach approach, MetricKind metric,
                                      Population population) {
    std::vector<double> out;
    if (approach == Approach::baseline) {
        auto it = scores.baseline.find(metric);
        if (it != scores.baseline.end()) {
            for (const auto& s : it->second) out.push_back(s.value);
        }
        return out;
    }
    auto it = scores.ours.find(metric);
    if (it == scores.ours.end()) return out;
    for (const auto& snap : it->second) {
        if (snap.empty()) continue;
        if (population == Population::per_pair) {
            for (const auto& s : snap) out.push_back(s.value);
        } else {
            double worst = snap.front().value;
            for (const auto& s : snap) {
                if (less_similar(metric, s.value, worst)) worst = s.value;
            }
            out.push_back(worst);
        }
    }
    return out;
}

const CellResult* EvaluationTable::cell(const std::string& bug, Approach approach, MetricKind metric) const {
    for (const auto& c : cells) {
        if (c.bug_key == bug && c.approach == approach && c.metric == metric) return &c;
    }
    return nullptr;
}

const AccuracyRow* EvaluationTable::accuracy_row(Approach approach, MetricKind metric) const {
    for (const auto& r : accuracies) {
        if (r.approach == approach && r.metric == metric) return &r;
    }
    return nullptr;
}

const Distribution* EvaluationTable::distribution(Approach approach, MetricKind metric) const {
    for (const auto& d : distributions) {
        if (d.approach == approach && d.metric == metric) return &d;
    }
    return nullptr;
}

EvaluationTable evaluate_experiment(const ExperimentConfig& config) {
    if (config.repetitions <= 0) throw Error("repetitions must be positive");
    const auto wall_start = Clock::now();
    const std::vector<BugSpec> catalog = list_bugs();
    std::vector<std::pair<int, BugSpec>> bugs;  // catalog index, spec
    if (config.bug_keys.empty()) {
        for (int i = 0; i < static_cast<int>(catalog.size()); ++i) bugs.emplace_back(i, catalog[static_cast<std::size_t>(i)]);
    } else {
        for (const auto& key : config.bug_keys) {
            const auto it = std::find_if(catalog.begin(), catalog.end(), [&](const BugSpec& s) { return s.key == key; });
            if (it == catalog.end()) throw Error("unknown bug key '" + key + "'");
            bugs.emplace_back(static_cast<int>(it - catalog.begin()), *it);
        }
    }

    const Calibration cal = calibrate_experiment(config);

    struct TaskResult {
        std::vector<RunVerdict> verdicts;
        std::map<std::pair<Approach, MetricKind>, std::vector<double>> population;
        std::vector<double> snapshot_seconds;
        std::string failure;
    };
    const int reps = config.repetitions;
    const int tasks = static_cast<int>(bugs.size()) * reps;
    std::vector<TaskResult> results(static_cast<std::size_t>(tasks));
    std::atomic<int> done{0};
    std::mutex log_mutex;
    parallel_for(tasks, effective_jobs(config), [&](int t) {
        const auto& [bug_index, spec] = bugs[static_cast<std::size_t>(t / reps)];
        const int rep = t % reps;
        TaskResult& r = results[static_cast<std::size_t>(t)];
        try {
            const auto hook = make_hook(spec);
            const auto run = run_test_case(with_seed(config.game, bug_seed(config.base_seed, bug_index, rep)), hook.get());
            const RunScores scores = score_run(run, &cal.oracle_shots, config);
            r.verdicts = judge_scores(scores, cal, config);
            for (const auto& v : r.verdicts) {
                r.population[{v.approach, v.metric}] = population_scores(scores, v.approach, v.metric, config.population);
            }
            r.snapshot_seconds = scores.snapshot_seconds;
        } catch (const std::exception& e) {
            r.failure = e.what();
        }
        const int n = ++done;
        if (config.log && (n % reps == 0 || !r.failure.empty())) {
            std::lock_guard<std::mutex> lock(log_mutex);
            config.log("bug runs " + std::to_string(n) + "/" + std::to_string(tasks) +
                       (r.failure.empty() ? "" : " (" + spec.key + " failed: " + r.failure + ")"));
        }
    });

    EvaluationTable table;
    table.repetitions = reps;
    table.calibration_runs = config.calibration_runs;
    table.base_seed = config.base_seed;
    table.canvas_w = config.game.canvas_w;
    table.canvas_h = config.game.canvas_h;
    table.snapshot_count = config.game.snapshot_count;
    table.provider = cal.ours.provider;
    table.population = config.population;
    table.ours_thresholds = cal.ours;
    table.baseline_thresholds = cal.baseline;
    for (const auto& [idx, spec] : bugs) table.bug_keys.push_back(spec.key);

    std::vector<double> snapshot_seconds;
    for (const auto& rs : cal.clean_runs) {
        snapshot_seconds.insert(snapshot_seconds.end(), rs.snapshot_seconds.begin(), rs.snapshot_seconds.end());
    }
    for (const auto& r : results) {
        snapshot_seconds.insert(snapshot_seconds.end(), r.snapshot_seconds.begin(), r.snapshot_seconds.end());
    }

    std::map<std::pair<Approach, MetricKind>, std::vector<double>> buggy_pop;
    for (std::size_t b = 0; b < bugs.size(); ++b) {
        const std::string& key = bugs[b].second.key;
        for (Approach a : config.approaches) {
            const ThresholdSet& set = a == Approach::ours ? cal.ours : cal.baseline;
            for (MetricKind k : config.metrics) {
                if (!metric_applies(a, k)) continue;
                CellResult cell;
                cell.bug_key = key;
                cell.approach = a;
                cell.metric = k;
                cell.repetitions = reps;
                cell.threshold = set.find(k)->value;
                bool have_worst = false;
                for (int rep = 0; rep < reps; ++rep) {
                    const TaskResult& r = results[b * static_cast<std::size_t>(reps) + static_cast<std::size_t>(rep)];
                    if (!r.failure.empty()) {
                        cell.detected_by_rep.push_back(0);
                        if (cell.failure.empty()) cell.failure = "repetition " + std::to_string(rep) + ": " + r.failure;
                        continue;
                    }
                    const auto it = std::find_if(r.verdicts.begin(), r.verdicts.end(), [&](const RunVerdict& v) {
                        return v.approach == a && v.metric == k;
                    });
                    const Verdict& v = it->verdict;
                    cell.detected_by_rep.push_back(v.buggy ? 1 : 0);
                    cell.detected += v.buggy ? 1 : 0;
                    if (!have_worst || less_similar(k, v.worst_score, cell.worst_score)) cell.worst_score = v.worst_score;
                    have_worst = true;
                    const auto& pop = r.population.at({a, k});
                    auto& dst = buggy_pop[{a, k}];
                    dst.insert(dst.end(), pop.begin(), pop.end());
                }
                if (!cell.failure.empty()) table.notes.push_back(key + " " + to_string(a) + " " + to_string(k) + ": " + cell.failure);
                table.cells.push_back(std::move(cell));
            }
        }
    }

    for (Approach a : config.approaches) {
        for (MetricKind k : config.metrics) {
            if (!metric_applies(a, k)) continue;
            AccuracyRow row;
            row.approach = a;
            row.metric = k;
            for (const auto& c : table.cells) {
                if (c.approach != a || c.metric != k) continue;
                row.tp += c.detected;
                row.fn += c.repetitions - c.detected;
            }
            if (row.tp + row.fn > 0) {
                row.accuracy = accuracy(row.tp, row.fn);
                row.formatted = format_percent(row.tp, row.fn);
            }
            table.accuracies.push_back(row);

            Distribution d;
            d.approach = a;
            d.metric = k;
            for (const auto& rs : cal.clean_runs) {
                const auto pop = population_scores(rs, a, k, config.population);
                d.clean.insert(d.clean.end(), pop.begin(), pop.end());
            }
            d.buggy = buggy_pop[{a, k}];
            d.clean_summary = summarize(d.clean);
            d.buggy_summary = summarize(d.buggy);
            if (!d.clean.empty() && !d.buggy.empty()) {
                d.mann_whitney = mann_whitney_u(d.clean, d.buggy);
                d.effect = cliffs_delta(d.clean, d.buggy);
            }
            table.distributions.push_back(std::move(d));
        }
    }

    table.timing.snapshots = static_cast<long long>(snapshot_seconds.size());
    if (!snapshot_seconds.empty()) {
        double sum = 0.0;
        for (double s : snapshot_seconds) sum += s;
        table.timing.mean_snapshot_seconds = sum / static_cast<double>(snapshot_seconds.size());
        table.timing.max_snapshot_seconds = *std::max_element(snapshot_seconds.begin(), snapshot_seconds.end());
    }
    table.timing.wall_seconds = seconds_since(wall_start);
    log_line(config, "evaluation finished in " + std::to_string(table.timing.wall_seconds) + " s");
    return table;
}

}  // namespace spritecheck
