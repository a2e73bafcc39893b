#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "spritecheck/bug_injector.hpp"
#include "spritecheck/cli.hpp"
#include "spritecheck/report.hpp"

namespace fs = std::filesystem;
using namespace spritecheck;

namespace {

// Synthetic table covering every bug, approach and metric.
EvaluationTable synthetic_table() {
    EvaluationTable t;
    t.repetitions = 10;
    t.calibration_runs = 10;
    t.base_seed = 42;
    t.canvas_w = 1280;
    t.canvas_h = 720;
    t.snapshot_count = 10;
    t.provider = "default-grid-256";
    t.population = Population::per_pair;
    t.ours_thresholds = {Approach::ours, "default-grid-256", {{MetricKind::MSE, 0.0, 10, 1400}}};
    t.baseline_thresholds = {Approach::baseline, "", {{MetricKind::MSE, 984.869, 10, 100}}};
    int k = 0;
    for (const auto& bug : list_bugs()) {
        t.bug_keys.push_back(bug.key);
        for (Approach a : {Approach::ours, Approach::baseline}) {
            for (MetricKind m : kAllMetrics) {
                if (!metric_applies(a, m)) continue;
                CellResult c;
                c.bug_key = bug.key;
                c.approach = a;
                c.metric = m;
                c.repetitions = 10;
                c.detected = (k++ * 7) % 11;
                c.worst_score = 0.1 * k + 1.0 / 3.0;
                c.threshold = 0.5;
                c.detected_by_rep.assign(10, 0);
                for (int r = 0; r < c.detected; ++r) c.detected_by_rep[static_cast<std::size_t>(r)] = 1;
                t.cells.push_back(c);
            }
        }
    }
    t.cells.back().failure = "repetition 3: boom";
    for (Approach a : {Approach::ours, Approach::baseline}) {
        for (MetricKind m : kAllMetrics) {
            if (!metric_applies(a, m)) continue;
            long long tp = 0;
            for (const auto& c : t.cells) {
                if (c.approach == a && c.metric == m) tp += c.detected;
            }
            t.accuracies.push_back({a, m, tp, 240 - tp, accuracy(tp, 240 - tp), format_percent(tp, 240 - tp)});
        }
    }
    Distribution d;
    d.approach = Approach::baseline;
    d.metric = MetricKind::SSIM;
    d.clean = {0.9, 0.95, 1.0};
    d.buggy = {0.5, 0.7};
    d.clean_summary = summarize(d.clean);
    d.buggy_summary = summarize(d.buggy);
    d.mann_whitney = mann_whitney_u(d.clean, d.buggy);
    d.effect = cliffs_delta(d.clean, d.buggy);
    t.distributions.push_back(d);
    t.timing = {100, 0.07, 0.18, 300.5};
    t.notes = {"population: per_pair"};
    return t;
}

struct CliRun {
    int code = 0;
    std::string out;
    std::string err;
};

CliRun cli(const std::vector<std::string>& args) {
    std::ostringstream out, err;
    CliRun r;
    r.code = run_cli(args, out, err);
    r.out = out.str();
    r.err = err.str();
    return r;
}

fs::path scratch_dir(const std::string& name) {
    fs::path p = fs::temp_directory_path() / ("spritecheck_cli_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::size_t count_of(const std::string& text, const std::string& needle) {
    std::size_t n = 0;
    for (auto at = text.find(needle); at != std::string::npos; at = text.find(needle, at + 1)) ++n;
    return n;
}

}  // namespace

TEST(Report, JsonRoundTrip) {
    const EvaluationTable t = synthetic_table();
    const nlohmann::json j = report_to_json(t);
    EXPECT_EQ(j.at("format"), kReportFormatTag);
    EXPECT_EQ(report_from_json(j), t);
    EXPECT_EQ(report_from_json(nlohmann::json::parse(j.dump())), t);
    const fs::path path = scratch_dir("report") / "nested" / "r.json";
    EXPECT_EQ(emit_report(t, ReportFormat::json, path), path);
    EXPECT_EQ(load_report(path), t);
}

TEST(Report, RejectsForeignJson) {
    nlohmann::json j = report_to_json(synthetic_table());
    j["version"] = 99;
    EXPECT_THROW((void)report_from_json(j), Error);
    EXPECT_THROW((void)report_from_json(nlohmann::json::object()), Error);
}

TEST(Report, CsvHasOneRowPerCell) {
    const std::string csv = report_csv(synthetic_table());
    std::istringstream in(csv);
    std::string line;
    std::getline(in, line);
    EXPECT_EQ(line, "approach,metric,bug_key,repetition,detected,worst_score,threshold");
    int rows = 0;
    while (std::getline(in, line)) {
        if (!line.empty()) ++rows;
    }
    EXPECT_EQ(rows, 24 * 7);
}

TEST(Report, HtmlHasOneCellPerEntry) {
    const std::string html = report_html(synthetic_table());
    EXPECT_EQ(count_of(html, "<td class=\"cell\""), 24u * 7u);
    EXPECT_NE(html.find("id=\"detections\""), std::string::npos);
    EXPECT_NE(html.find("<svg"), std::string::npos);
    // Self-contained: nothing is fetched.
    EXPECT_EQ(html.find("src=\""), std::string::npos);
    EXPECT_EQ(html.find("<link"), std::string::npos);
}

TEST(Report, UnwritablePathIsAnError) {
    const fs::path blocker = scratch_dir("blocker") / "file";
    std::ofstream(blocker) << "x";
    EXPECT_THROW((void)emit_report(synthetic_table(), ReportFormat::csv, blocker / "r.csv"), Error);
}

TEST(Cli, UnknownVerbIsUsageError) {
    const CliRun r = cli({"frobnicate"});
    EXPECT_EQ(r.code, kExitError);
    EXPECT_NE(r.err.find("error"), std::string::npos);
    EXPECT_NE(r.err.find("simulate"), std::string::npos);
    EXPECT_EQ(cli({}).code, kExitError);
}

TEST(Cli, ListBugs) {
    const CliRun r = cli({"list-bugs"});
    ASSERT_EQ(r.code, kExitPass) << r.err;
    const auto j = nlohmann::json::parse(r.out);
    ASSERT_EQ(j.size(), 24u);
    EXPECT_EQ(j[0]["key"], "S1");
    const CliRun md = cli({"list-bugs", "--markdown"});
    EXPECT_EQ(md.code, kExitPass);
    EXPECT_NE(md.out.find("| R6 |"), std::string::npos);
}

TEST(Cli, SimulateCalibrateDetect) {
    const fs::path dir = scratch_dir("flow");
    const std::vector<std::string> size{"--width", "640", "--height", "360", "--snapshots", "3"};
    auto with_size = [&](std::vector<std::string> args) {
        args.insert(args.end(), size.begin(), size.end());
        return args;
    };
    ASSERT_EQ(cli(with_size({"simulate", "--seed", "1", "--out", (dir / "clean1").string()})).code, kExitPass);
    ASSERT_EQ(cli(with_size({"simulate", "--seed", "2", "--out", (dir / "clean2").string()})).code, kExitPass);
    ASSERT_EQ(cli(with_size({"simulate", "--seed", "3", "--out", (dir / "fresh").string()})).code, kExitPass);
    ASSERT_EQ(cli(with_size({"simulate", "--seed", "3", "--bug", "S1", "--out", (dir / "buggy").string()})).code,
              kExitPass);
    EXPECT_TRUE(fs::exists(dir / "clean1" / "snapshot_00" / "manifest.json"));

    const CliRun cal = cli({"calibrate", "--runs", (dir / "clean1").string(), (dir / "clean2").string(), "--metric",
                            "MSE", "--metric", "PCT", "--out", (dir / "t.json").string()});
    ASSERT_EQ(cal.code, kExitPass) << cal.err;
    const ThresholdSet set = load_thresholds(dir / "t.json");
    ASSERT_NE(set.find(MetricKind::MSE), nullptr);
    EXPECT_EQ(set.find(MetricKind::MSE)->value, 0.0);

    const CliRun ok = cli({"detect", "--bundle", (dir / "fresh").string(), "--thresholds", (dir / "t.json").string()});
    EXPECT_EQ(ok.code, kExitPass) << ok.out << ok.err;
    EXPECT_FALSE(nlohmann::json::parse(ok.out).at("buggy").get<bool>());

    const CliRun bad = cli({"detect", "--bundle", (dir / "buggy").string(), "--thresholds", (dir / "t.json").string()});
    EXPECT_EQ(bad.code, kExitBuggy) << bad.err;
    const auto j = nlohmann::json::parse(bad.out);
    EXPECT_TRUE(j.at("buggy").get<bool>());
    bool names_player = false;
    for (const auto& m : j.at("metrics")) {
        for (const auto& id : m.at("offending")) names_player = names_player || id == "player";
    }
    EXPECT_TRUE(names_player) << bad.out;

    const CliRun single = cli({"detect", "--bundle", (dir / "buggy" / "snapshot_01").string(), "--thresholds",
                               (dir / "t.json").string()});
    EXPECT_EQ(single.code, kExitBuggy) << single.err;
}

TEST(Cli, RuntimeErrorsExitTwo) {
    const CliRun r = cli({"detect", "--bundle", "/nonexistent/bundle", "--thresholds", "/nonexistent/t.json"});
    EXPECT_EQ(r.code, kExitError);
    EXPECT_NE(r.err.find("error:"), std::string::npos);
    EXPECT_EQ(cli({"simulate", "--seed", "1"}).code, kExitError);
    EXPECT_EQ(cli({"verify-bug", "--bug", "nope"}).code, kExitError);
}

TEST(Cli, ReportConvertsFormats) {
    const fs::path dir = scratch_dir("report_verb");
    emit_report(synthetic_table(), ReportFormat::json, dir / "r.json");
    const CliRun r = cli({"report", "--in", (dir / "r.json").string(), "--format", "csv", "--out",
                          (dir / "r.csv").string()});
    ASSERT_EQ(r.code, kExitPass) << r.err;
    std::ifstream in(dir / "r.csv");
    std::stringstream text;
    text << in.rdbuf();
    EXPECT_EQ(text.str(), report_csv(synthetic_table()));
}
