#include "spritecheck/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "spritecheck/bug_injector.hpp"
#include "spritecheck/bundle.hpp"
#include "spritecheck/detector.hpp"
#include "spritecheck/experiment.hpp"
#include "spritecheck/report.hpp"
#include "spritecheck/simulator.hpp"

namespace spritecheck {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

Rgba parse_fill(const std::string& text) {
    std::vector<int> parts;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            const int v = std::stoi(item, &used);
            if (used != item.size() || v < 0 || v > 255) throw Error("");
            parts.push_back(v);
        } catch (...) {
            throw Error("--fill expects R,G,B,A with components in 0..255");
        }
    }
    if (parts.size() != 4) throw Error("--fill expects R,G,B,A with components in 0..255");
    return {static_cast<std::uint8_t>(parts[0]), static_cast<std::uint8_t>(parts[1]), static_cast<std::uint8_t>(parts[2]),
            static_cast<std::uint8_t>(parts[3])};
}

MetricConfig metric_config(const std::string& provider_command) {
    MetricConfig mc;
    if (!provider_command.empty()) {
        mc.provider = std::make_shared<ExternalEmbeddingProvider>(provider_command);
    } else {
        mc.provider = provider_from_environment();
    }
    return mc;
}

std::vector<MetricKind> parse_metrics(const std::vector<std::string>& names) {
    std::vector<MetricKind> out;
    for (const auto& group : names) {
        std::stringstream ss(group);
        std::string item;
        while (std::getline(ss, item, ',')) {
            if (item.empty()) continue;
            const MetricKind k = metric_from_string(item);
            if (std::find(out.begin(), out.end(), k) == out.end()) out.push_back(k);
        }
    }
    if (out.empty()) out.assign(std::begin(kAllMetrics), std::end(kAllMetrics));
    return out;
}

std::vector<std::string> split_keys(const std::vector<std::string>& groups) {
    std::vector<std::string> out;
    for (const auto& g : groups) {
        std::stringstream ss(g);
        std::string item;
        while (std::getline(ss, item, ',')) {
            if (!item.empty()) out.push_back(item);
        }
    }
    return out;
}

bool needs_provider(const std::vector<MetricKind>& kinds) {
    return std::find(kinds.begin(), kinds.end(), MetricKind::ESIM) != kinds.end();
}

// A bundle directory, or a run directory holding bundle directories.
std::vector<SnapshotBundle> load_bundles(const fs::path& dir) {
    if (fs::exists(dir / "manifest.json")) return {load_bundle(dir)};
    if (!fs::is_directory(dir)) throw Error("no bundle or run directory at " + dir.string());
    auto run = load_run(dir);
    if (run.empty()) throw Error("no bundles found in " + dir.string());
    return run;
}

json verdict_json(const Verdict& v) {
    return {{"buggy", v.buggy}, {"worst_score", v.worst_score}, {"offending", v.offending}};
}

json bug_json(const BugSpec& s) {
    return {{"key", s.key},
            {"type", to_string(s.type)},
            {"description", s.description},
            {"targets", s.targets},
            {"mechanism", to_string(s.mechanism)},
            {"magnitude", describe(s.mechanism, s.magnitude)},
            {"seed", s.seed},
            {"foreground", s.foreground}};
}

struct Options {
    // simulate
    std::uint64_t seed = 1;
    std::string out;
    std::string bug;
    int width = 1280;
    int height = 720;
    int snapshots = 10;
    // calibrate / detect
    std::vector<std::string> runs;
    std::vector<std::string> metrics;
    std::string approach = "ours";
    std::string oracle_run;
    std::string bundle;
    std::string thresholds;
    bool baseline = false;
    std::string fill = "0,0,0,255";
    std::string provider;
    // evaluate
    int reps = 10;
    int calibration_runs = 10;
    int jobs = 1;
    std::string population = "per_pair";
    std::vector<std::string> bugs;
    // report
    std::string in;
    std::string format = "html";
    // list-bugs
    bool markdown = false;
};

class Runner {
public:
    Runner(Options& o, std::ostream& out, std::ostream& err) : o_(o), out_(out), err_(err) {}

    int simulate() {
        GameConfig config;
        config.seed = o_.seed;
        config.canvas_w = o_.width;
        config.canvas_h = o_.height;
        config.snapshot_count = o_.snapshots;
        std::shared_ptr<const BugHook> hook;
        if (!o_.bug.empty()) hook = make_hook(find_bug(o_.bug));
        const auto run = run_test_case(config, hook.get());
        json paths = json::array();
        for (const auto& b : run) {
            std::ostringstream name;
            name << "snapshot_" << std::setw(2) << std::setfill('0') << b.snapshot_index;
            paths.push_back(save_bundle(b, fs::path(o_.out) / name.str()).string());
        }
        err_ << "wrote " << run.size() << " bundles to " << o_.out << "\n";
        out_ << json{{"run_id", run_id_for(config)}, {"seed", o_.seed}, {"bug", o_.bug}, {"bundles", paths}}.dump(2)
             << "\n";
        return kExitPass;
    }

    int calibrate() {
        const Approach approach = approach_from_string(o_.approach);
        std::vector<MetricKind> kinds = parse_metrics(o_.metrics);
        if (approach == Approach::baseline) {
            if (o_.oracle_run.empty()) throw Error("baseline calibration needs --oracle-run");
            kinds.erase(std::remove(kinds.begin(), kinds.end(), MetricKind::ESIM), kinds.end());
        }
        const Rgba fill = parse_fill(o_.fill);
        const MetricConfig mc = needs_provider(kinds) ? metric_config(o_.provider) : MetricConfig{};
        std::vector<Bitmap> oracle_shots;
        if (approach == Approach::baseline) {
            for (const auto& b : load_bundles(o_.oracle_run)) oracle_shots.push_back(b.screenshot);
        }
        std::map<MetricKind, std::vector<std::vector<MetricScore>>> per_kind;
        for (const auto& dir : o_.runs) {
            const auto run = load_bundles(dir);
            std::map<MetricKind, std::vector<MetricScore>> flat;
            if (approach == Approach::ours) {
                for (const auto& b : run) {
                    for (auto& [k, list] : score_pairs(build_pairs(b, fill), kinds, mc)) {
                        flat[k].insert(flat[k].end(), list.begin(), list.end());
                    }
                }
            } else {
                std::vector<Bitmap> shots;
                for (const auto& b : run) shots.push_back(b.screenshot);
                for (MetricKind k : kinds) flat[k] = baseline_compare(oracle_shots, shots, k, mc);
            }
            for (MetricKind k : kinds) per_kind[k].push_back(flat[k]);
            err_ << "scored run " << dir << "\n";
        }
        ThresholdSet set;
        set.approach = approach;
        if (needs_provider(kinds)) set.provider = mc.provider ? mc.provider->name() : default_provider().name();
        for (MetricKind k : kinds) set.thresholds.push_back(calibrate_thresholds(per_kind[k], k));
        save_thresholds(set, o_.out);
        json list = json::array();
        for (const auto& t : set.thresholds) {
            list.push_back({{"metric", to_string(t.kind)}, {"value", t.value}, {"calibrated_scores", t.calibrated_scores}});
        }
        out_ << json{{"thresholds", o_.out}, {"approach", to_string(approach)}, {"values", list}}.dump(2) << "\n";
        return kExitPass;
    }

    int detect() {
        const ThresholdSet set = load_thresholds(o_.thresholds);
        const Approach approach = o_.baseline ? Approach::baseline : set.approach;
        std::vector<MetricKind> kinds;
        for (const auto& t : set.thresholds) kinds.push_back(t.kind);
        if (!o_.metrics.empty()) {
            const auto wanted = parse_metrics(o_.metrics);
            std::erase_if(kinds, [&](MetricKind k) { return std::find(wanted.begin(), wanted.end(), k) == wanted.end(); });
        }
        if (kinds.empty()) throw Error("no thresholds to judge against");
        const Rgba fill = parse_fill(o_.fill);
        const MetricConfig mc = needs_provider(kinds) ? metric_config(o_.provider) : MetricConfig{};
        if (needs_provider(kinds) && !set.provider.empty()) {
            const std::string name = mc.provider ? mc.provider->name() : default_provider().name();
            if (name != set.provider) {
                err_ << "warning: thresholds were calibrated with provider " << set.provider << ", scoring with " << name
                     << "\n";
            }
        }
        const auto bundles = load_bundles(o_.bundle);
        std::map<int, Bitmap> oracle_by_index;
        if (approach == Approach::baseline) {
            if (o_.oracle_run.empty()) throw Error("baseline detection needs --oracle-run");
            for (const auto& b : load_bundles(o_.oracle_run)) oracle_by_index[b.snapshot_index] = b.screenshot;
        }

        std::map<MetricKind, std::vector<Verdict>> snapshots;
        json skipped = json::array();
        json per_snapshot = json::array();
        for (const auto& b : bundles) {
            std::map<MetricKind, std::vector<MetricScore>> scores;
            if (approach == Approach::ours) {
                const auto pairs = build_pairs(b, fill);
                for (const auto& p : pairs) {
                    if (p.skipped) skipped.push_back({{"snapshot_index", b.snapshot_index}, {"node_id", p.node_id}, {"reason", p.skip_reason}});
                }
                scores = score_pairs(pairs, kinds, mc);
            } else {
                const auto it = oracle_by_index.find(b.snapshot_index);
                if (it == oracle_by_index.end()) {
                    throw Error("oracle run has no snapshot " + std::to_string(b.snapshot_index));
                }
                for (MetricKind k : kinds) {
                    if (k == MetricKind::ESIM) continue;
                    scores[k] = baseline_compare({it->second}, {b.screenshot}, k, mc);
                }
            }
            json sj = {{"snapshot_index", b.snapshot_index}, {"run_id", b.run_id}};
            for (MetricKind k : kinds) {
                const Threshold* t = set.find(k);
                if (approach == Approach::baseline && k == MetricKind::ESIM) continue;
                const Verdict v = detect_snapshot(scores[k], *t);
                sj[to_string(k)] = verdict_json(v);
                snapshots[k].push_back(v);
            }
            per_snapshot.push_back(std::move(sj));
        }
        bool buggy = false;
        json metrics = json::array();
        for (MetricKind k : kinds) {
            if (snapshots[k].empty()) continue;
            const Verdict v = judge_run(snapshots[k]);
            buggy = buggy || v.buggy;
            json mj = verdict_json(v);
            mj["metric"] = to_string(k);
            mj["threshold"] = set.find(k)->value;
            metrics.push_back(std::move(mj));
        }
        out_ << json{{"approach", to_string(approach)},
                     {"buggy", buggy},
                     {"bundles", bundles.size()},
                     {"metrics", metrics},
                     {"snapshots", per_snapshot},
                     {"skipped", skipped}}
                    .dump(2)
             << "\n";
        err_ << (buggy ? "visual bug detected" : "no visual bug detected") << "\n";
        return buggy ? kExitBuggy : kExitPass;
    }

    int evaluate() {
        ExperimentConfig config;
        config.repetitions = o_.reps;
        config.calibration_runs = o_.calibration_runs;
        config.base_seed = o_.seed;
        config.jobs = o_.jobs;
        config.metrics = parse_metrics(o_.metrics);
        config.bug_keys = split_keys(o_.bugs);
        config.game.canvas_w = o_.width;
        config.game.canvas_h = o_.height;
        config.game.snapshot_count = o_.snapshots;
        config.fill = parse_fill(o_.fill);
        config.population = population_from_string(o_.population);
        if (needs_provider(config.metrics)) config.metric_config = metric_config(o_.provider);
        config.log = [this](const std::string& line) { err_ << line << std::endl; };
        const EvaluationTable table = evaluate_experiment(config);
        const fs::path dir(o_.out);
        fs::create_directories(dir);
        json files = json::array();
        for (ReportFormat f : {ReportFormat::json, ReportFormat::csv, ReportFormat::html}) {
            files.push_back(emit_report(table, f, dir / ("report." + to_string(f))).string());
        }
        save_thresholds(table.ours_thresholds, dir / "thresholds_ours.json");
        if (!table.baseline_thresholds.thresholds.empty()) {
            save_thresholds(table.baseline_thresholds, dir / "thresholds_baseline.json");
        }
        json acc = json::array();
        for (const auto& a : table.accuracies) {
            acc.push_back({{"approach", to_string(a.approach)},
                           {"metric", to_string(a.metric)},
                           {"accuracy", a.formatted},
                           {"tp", a.tp},
                           {"fn", a.fn}});
        }
        json effects = json::array();
        for (const auto& d : table.distributions) {
            effects.push_back({{"approach", to_string(d.approach)},
                               {"metric", to_string(d.metric)},
                               {"cliffs_delta", d.effect.d},
                               {"label", to_string(d.effect.label)},
                               {"p", d.mann_whitney.p}});
        }
        out_ << json{{"out", dir.string()},
                     {"files", files},
                     {"accuracy", acc},
                     {"effects", effects},
                     {"wall_seconds", table.timing.wall_seconds},
                     {"notes", table.notes}}
                    .dump(2)
             << "\n";
        return kExitPass;
    }

    int report() {
        const EvaluationTable table = load_report(o_.in);
        const auto path = emit_report(table, report_format_from_string(o_.format), o_.out);
        out_ << json{{"written", path.string()}, {"format", o_.format}}.dump(2) << "\n";
        return kExitPass;
    }

    int list_bugs_verb() {
        const auto bugs = list_bugs();
        if (o_.markdown) {
            out_ << "| Key | Type | Target | Mechanism | Magnitude | Description |\n|---|---|---|---|---|---|\n";
            for (const auto& b : bugs) {
                std::string targets;
                for (const auto& t : b.targets) targets += (targets.empty() ? "" : ", ") + t;
                out_ << "| " << b.key << " | " << to_string(b.type) << " | " << targets << " | " << to_string(b.mechanism)
                     << " | " << describe(b.mechanism, b.magnitude) << " | " << b.description << " |\n";
            }
            return kExitPass;
        }
        json list = json::array();
        for (const auto& b : bugs) list.push_back(bug_json(b));
        out_ << list.dump(2) << "\n";
        return kExitPass;
    }

    int verify_bug() {
        GameConfig config;
        config.seed = o_.seed;
        config.canvas_w = o_.width;
        config.canvas_h = o_.height;
        config.snapshot_count = o_.snapshots;
        const BugSpec& spec = find_bug(o_.bug);
        const VisibilityReport r = verify_visibility(spec, config);
        json diffs = json::array();
        for (const auto& d : r.diffs) {
            diffs.push_back({{"snapshot_index", d.snapshot_index}, {"node_id", d.node_id}, {"differing_pixels", d.differing_pixels}});
        }
        out_ << json{{"key", r.key},
                     {"effective", r.effective},
                     {"snapshots_with_screen_change", r.snapshots_with_screen_change},
                     {"diffs", diffs}}
                    .dump(2)
             << "\n";
        return kExitPass;
    }

private:
    static Threshold calibrate_thresholds(const std::vector<std::vector<MetricScore>>& runs, MetricKind k) {
        return spritecheck::calibrate(runs, k);
    }

    Options& o_;
    std::ostream& out_;
    std::ostream& err_;
};

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    Options o;
    CLI::App app{"spritecheck: visual bug detection for sprite-based canvas scenes", "spritecheck"};
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all", "Show help for every verb");

    auto* sim = app.add_subcommand("simulate", "Run one scripted test case and save its snapshot bundles");
    sim->add_option("--seed", o.seed, "Game seed")->required();
    sim->add_option("--out", o.out, "Output run directory")->required();
    sim->add_option("--bug", o.bug, "Inject the bug with this key");
    sim->add_option("--width", o.width, "Canvas width")->check(CLI::Range(320, 8192));
    sim->add_option("--height", o.height, "Canvas height")->check(CLI::Range(240, 8192));
    sim->add_option("--snapshots", o.snapshots, "Snapshots per run")->check(CLI::Range(1, 1000));

    auto* cal = app.add_subcommand("calibrate", "Derive thresholds from clean runs");
    cal->add_option("--runs", o.runs, "Clean run directories")->required()->expected(1, -1);
    cal->add_option("--metric", o.metrics, "Metrics (PCT, MSE, SSIM, ESIM); default all")->expected(1, -1);
    cal->add_option("--out", o.out, "Threshold file to write")->required();
    cal->add_option("--approach", o.approach, "ours or baseline")->check(CLI::IsMember({"ours", "baseline"}));
    cal->add_option("--oracle-run", o.oracle_run, "Reference run for the baseline");
    cal->add_option("--fill", o.fill, "Fill colour R,G,B,A for masked pixels");
    cal->add_option("--provider", o.provider, "External embedding command for ESIM");

    auto* det = app.add_subcommand("detect", "Judge a bundle or run against thresholds");
    det->add_option("--bundle", o.bundle, "Bundle directory or run directory")->required();
    det->add_option("--thresholds", o.thresholds, "Threshold file")->required();
    det->add_flag("--baseline", o.baseline, "Whole-screenshot comparison against --oracle-run");
    det->add_option("--oracle-run", o.oracle_run, "Reference run for the baseline");
    det->add_option("--metric", o.metrics, "Restrict to these metrics")->expected(1, -1);
    det->add_option("--fill", o.fill, "Fill colour R,G,B,A for masked pixels");
    det->add_option("--provider", o.provider, "External embedding command for ESIM");

    auto* ev = app.add_subcommand("evaluate", "Run the full bug-injection experiment and write reports");
    ev->add_option("--reps", o.reps, "Repetitions per bug")->check(CLI::Range(1, 1000));
    ev->add_option("--out", o.out, "Output directory")->required();
    ev->add_option("--metrics", o.metrics, "Metrics, comma separated")->expected(1, -1);
    ev->add_option("--bugs", o.bugs, "Bug keys, comma separated; default all")->expected(1, -1);
    ev->add_option("--seed", o.seed, "Base seed");
    ev->add_option("--calibration-runs", o.calibration_runs, "Clean runs for calibration")->check(CLI::Range(1, 1000));
    ev->add_option("--jobs", o.jobs, "Parallel repetitions")->check(CLI::Range(1, 256));
    ev->add_option("--width", o.width, "Canvas width")->check(CLI::Range(320, 8192));
    ev->add_option("--height", o.height, "Canvas height")->check(CLI::Range(240, 8192));
    ev->add_option("--snapshots", o.snapshots, "Snapshots per run")->check(CLI::Range(1, 1000));
    ev->add_option("--population", o.population, "per_pair or per_snapshot")
        ->check(CLI::IsMember({"per_pair", "per_snapshot"}));
    ev->add_option("--fill", o.fill, "Fill colour R,G,B,A for masked pixels");
    ev->add_option("--provider", o.provider, "External embedding command for ESIM");

    auto* rep = app.add_subcommand("report", "Re-emit a JSON report as json, csv or html");
    rep->add_option("--in", o.in, "report.json")->required();
    rep->add_option("--format", o.format, "json, csv or html")->check(CLI::IsMember({"json", "csv", "html"}));
    rep->add_option("--out", o.out, "Output file")->required();

    auto* lb = app.add_subcommand("list-bugs", "Print the injected-bug catalog");
    lb->add_flag("--markdown", o.markdown, "Markdown table instead of JSON");

    auto* vb = app.add_subcommand("verify-bug", "Check that a bug changes some compared pixels");
    vb->add_option("--bug", o.bug, "Bug key")->required();
    vb->add_option("--seed", o.seed, "Game seed");
    vb->add_option("--width", o.width, "Canvas width")->check(CLI::Range(320, 8192));
    vb->add_option("--height", o.height, "Canvas height")->check(CLI::Range(240, 8192));
    vb->add_option("--snapshots", o.snapshots, "Snapshots per run")->check(CLI::Range(1, 1000));

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitPass;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitPass;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n\n" << app.help();
        return kExitError;
    }

    Runner runner(o, out, err);
    try {
        if (sim->parsed()) return runner.simulate();
        if (cal->parsed()) return runner.calibrate();
        if (det->parsed()) return runner.detect();
        if (ev->parsed()) return runner.evaluate();
        if (rep->parsed()) return runner.report();
        if (lb->parsed()) return runner.list_bugs_verb();
        if (vb->parsed()) return runner.verify_bug();
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitError;
    }
    err << app.help();
    return kExitError;
}

int run_cli(int argc, char** argv) {
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
    return run_cli(args, std::cout, std::cerr);
}

}  // namespace spritecheck
