#include "spritecheck/detector.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

namespace spritecheck {

using nlohmann::json;

namespace {

Verdict aggregate(const std::vector<Verdict>& children, VerdictScope scope) {
    if (children.empty()) throw Error("cannot aggregate an empty verdict list");
    Verdict v;
    v.scope = scope;
    v.kind = children.front().kind;
    v.worst_score = children.front().worst_score;
    std::set<std::string> seen;
    for (const auto& c : children) {
        if (c.kind != v.kind) throw Error("cannot aggregate verdicts of different metrics");
        v.buggy = v.buggy || c.buggy;
        if (less_similar(v.kind, c.worst_score, v.worst_score)) v.worst_score = c.worst_score;
        for (const auto& id : c.offending) {
            if (seen.insert(id).second) v.offending.push_back(id);
        }
    }
    return v;
}

}  // namespace

std::string to_string(Approach approach) { return approach == Approach::ours ? "ours" : "baseline"; }

Approach approach_from_string(const std::string& name) {
    if (name == "ours") return Approach::ours;
    if (name == "baseline") return Approach::baseline;
    throw Error("unknown approach '" + name + "'");
}

bool less_similar(MetricKind kind, double candidate, double current) {
    return polarity(kind) == Polarity::higher_is_similar ? candidate < current : candidate > current;
}

Threshold calibrate(const std::vector<std::vector<MetricScore>>& clean_runs, MetricKind kind) {
    if (clean_runs.empty()) throw Error("calibrate: no runs");
    Threshold t;
    t.kind = kind;
    t.calibrated_runs = static_cast<int>(clean_runs.size());
    bool any = false;
    for (const auto& run : clean_runs) {
        for (const auto& s : run) {
            if (s.kind != kind) continue;
            if (!any || less_similar(kind, s.value, t.value)) t.value = s.value;
            any = true;
            ++t.calibrated_scores;
        }
    }
    if (!any) throw Error("calibrate: no " + to_string(kind) + " scores");
    return t;
}

Verdict judge_pair(const MetricScore& score, const Threshold& threshold) {
    if (score.kind != threshold.kind) throw Error("judge_pair: metric kind mismatch");
    Verdict v;
    v.scope = VerdictScope::pair;
    v.kind = score.kind;
    v.worst_score = score.value;
    v.buggy = less_similar(score.kind, score.value, threshold.value);
    if (v.buggy) v.offending.push_back(score.node_id);
    return v;
}

Verdict judge_snapshot(const std::vector<Verdict>& pairs) { return aggregate(pairs, VerdictScope::snapshot); }

Verdict judge_run(const std::vector<Verdict>& snapshots) { return aggregate(snapshots, VerdictScope::run); }

std::vector<MetricScore> baseline_compare(const std::vector<Bitmap>& oracle_shots, const std::vector<Bitmap>& test_shots,
                                          MetricKind kind, const MetricConfig& config) {
    if (kind == MetricKind::ESIM) throw Error("baseline_compare supports PCT, MSE and SSIM only");
    if (oracle_shots.size() != test_shots.size()) throw Error("baseline_compare: run length mismatch");
    std::vector<MetricScore> out;
    out.reserve(test_shots.size());
    for (std::size_t i = 0; i < test_shots.size(); ++i) {
        if (oracle_shots[i].width() != test_shots[i].width() || oracle_shots[i].height() != test_shots[i].height()) {
            throw Error("baseline_compare: screenshot dimension mismatch at index " + std::to_string(i));
        }
        out.push_back({"screenshot_" + std::to_string(i), kind, compute_metric(oracle_shots[i], test_shots[i], kind, config)});
    }
    return out;
}

std::map<MetricKind, std::vector<MetricScore>> score_pairs(const std::vector<ImagePair>& pairs,
                                                           const std::vector<MetricKind>& kinds,
                                                           const MetricConfig& config) {
    std::map<MetricKind, std::vector<MetricScore>> out;
    for (MetricKind k : kinds) out[k];
    for (const auto& pair : pairs) {
        if (pair.skipped) continue;
        for (MetricKind k : kinds) {
            if (k == MetricKind::SSIM &&
                (pair.oracle.width() < config.ssim.window || pair.oracle.height() < config.ssim.window)) {
                continue;
            }
            out[k].push_back(score(pair, k, config));
        }
    }
    return out;
}

Verdict detect_snapshot(const std::vector<MetricScore>& scores, const Threshold& threshold) {
    std::vector<Verdict> verdicts;
    verdicts.reserve(scores.size());
    for (const auto& s : scores) {
        if (s.kind == threshold.kind) verdicts.push_back(judge_pair(s, threshold));
    }
    if (verdicts.empty()) {
        Verdict v;
        v.scope = VerdictScope::snapshot;
        v.kind = threshold.kind;
        v.worst_score = polarity(threshold.kind) == Polarity::higher_is_similar ? 1.0 : 0.0;
        return v;
    }
    return judge_snapshot(verdicts);
}

const Threshold* ThresholdSet::find(MetricKind kind) const {
    for (const auto& t : thresholds) {
        if (t.kind == kind) return &t;
    }
    return nullptr;
}

void save_thresholds(const ThresholdSet& set, const std::filesystem::path& path) {
    json j;
    j["format"] = "spritecheck-thresholds";
    j["version"] = 1;
    j["approach"] = to_string(set.approach);
    j["provider"] = set.provider;
    json list = json::array();
    for (const auto& t : set.thresholds) {
        list.push_back({{"metric", to_string(t.kind)},
                        {"value", t.value},
                        {"calibrated_runs", t.calibrated_runs},
                        {"calibrated_scores", t.calibrated_scores}});
    }
    j["thresholds"] = std::move(list);
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw Error("cannot write " + path.string());
    out << j.dump(2) << "\n";
    if (!out) throw Error("cannot write " + path.string());
}

ThresholdSet load_thresholds(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path.string());
    ThresholdSet set;
    try {
        const json j = json::parse(in);
        set.approach = approach_from_string(j.value("approach", std::string("ours")));
        set.provider = j.value("provider", std::string{});
        for (const auto& tj : j.at("thresholds")) {
            Threshold t;
            t.kind = metric_from_string(tj.at("metric").get<std::string>());
            t.value = tj.at("value").get<double>();
            t.calibrated_runs = tj.value("calibrated_runs", 0);
            t.calibrated_scores = tj.value("calibrated_scores", 0LL);
            if (t.calibrated_scores <= 0) throw Error("threshold calibrated from zero scores");
            set.thresholds.push_back(t);
        }
    } catch (const json::exception& e) {
        throw Error("malformed threshold file " + path.string() + ": " + e.what());
    }
    return set;
}

}  // namespace spritecheck
