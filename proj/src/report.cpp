#include "spritecheck/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "spritecheck/bug_injector.hpp"

namespace spritecheck {

using nlohmann::json;

namespace {

json summary_json(const Summary& s) {
    return {{"count", s.count}, {"min", s.min},       {"q1", s.q1},    {"median", s.median},
            {"q3", s.q3},       {"max", s.max},       {"mean", s.mean}};
}

Summary summary_from(const json& j) {
    Summary s;
    s.count = j.at("count").get<long long>();
    s.min = j.at("min").get<double>();
    s.q1 = j.at("q1").get<double>();
    s.median = j.at("median").get<double>();
    s.q3 = j.at("q3").get<double>();
    s.max = j.at("max").get<double>();
    s.mean = j.at("mean").get<double>();
    return s;
}

json thresholds_json(const ThresholdSet& set) {
    json list = json::array();
    for (const auto& t : set.thresholds) {
        list.push_back({{"metric", to_string(t.kind)},
                        {"value", t.value},
                        {"calibrated_runs", t.calibrated_runs},
                        {"calibrated_scores", t.calibrated_scores}});
    }
    return {{"approach", to_string(set.approach)}, {"provider", set.provider}, {"thresholds", list}};
}

ThresholdSet thresholds_from(const json& j) {
    ThresholdSet set;
    set.approach = approach_from_string(j.at("approach").get<std::string>());
    set.provider = j.at("provider").get<std::string>();
    for (const auto& tj : j.at("thresholds")) {
        Threshold t;
        t.kind = metric_from_string(tj.at("metric").get<std::string>());
        t.value = tj.at("value").get<double>();
        t.calibrated_runs = tj.at("calibrated_runs").get<int>();
        t.calibrated_scores = tj.at("calibrated_scores").get<long long>();
        set.thresholds.push_back(t);
    }
    return set;
}

std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string short_num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.4g", v);
    return buf;
}

std::string escape_html(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

// White at 0 detections to green at all detections.
std::string heat_colour(int detected, int reps) {
    const double f = reps > 0 ? static_cast<double>(detected) / reps : 0.0;
    const auto mix = [&](int lo, int hi) { return static_cast<int>(std::lround(lo + (hi - lo) * f)); };
    char buf[16];
    std::snprintf(buf, sizeof buf, "#%02X%02X%02X", mix(255, 0x57), mix(255, 0xBB), mix(255, 0x8A));
    return buf;
}

std::string boxplot_svg(const Distribution& d) {
    const Summary* boxes[2] = {&d.clean_summary, &d.buggy_summary};
    double lo = std::min(d.clean_summary.min, d.buggy_summary.min);
    double hi = std::max(d.clean_summary.max, d.buggy_summary.max);
    if (d.clean_summary.count == 0) lo = d.buggy_summary.min, hi = d.buggy_summary.max;
    if (d.buggy_summary.count == 0) lo = d.clean_summary.min, hi = d.clean_summary.max;
    if (hi <= lo) hi = lo + 1.0;
    const double w = 360.0;
    const double left = 70.0;
    const auto sx = [&](double v) { return left + (v - lo) / (hi - lo) * w; };
    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"460\" height=\"96\" role=\"img\">";
    const char* labels[2] = {"clean", "buggy"};
    for (int i = 0; i < 2; ++i) {
        const Summary& s = *boxes[i];
        const double y = 14.0 + i * 36.0;
        os << "<text x=\"4\" y=\"" << y + 14 << "\" font-size=\"12\">" << labels[i] << " (" << s.count << ")</text>";
        if (s.count == 0) continue;
        os << "<line x1=\"" << sx(s.min) << "\" y1=\"" << y + 10 << "\" x2=\"" << sx(s.max) << "\" y2=\"" << y + 10
           << "\" stroke=\"#444\"/>";
        os << "<rect x=\"" << sx(s.q1) << "\" y=\"" << y << "\" width=\"" << std::max(1.0, sx(s.q3) - sx(s.q1))
           << "\" height=\"20\" fill=\"" << (i == 0 ? "#9ecae1" : "#fdae6b") << "\" stroke=\"#444\"/>";
        os << "<line x1=\"" << sx(s.median) << "\" y1=\"" << y << "\" x2=\"" << sx(s.median) << "\" y2=\"" << y + 20
           << "\" stroke=\"#000\" stroke-width=\"2\"/>";
    }
    os << "<text x=\"" << left << "\" y=\"92\" font-size=\"10\">" << short_num(lo) << "</text>";
    os << "<text x=\"" << left + w - 30 << "\" y=\"92\" font-size=\"10\">" << short_num(hi) << "</text>";
    os << "</svg>";
    return os.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(path.parent_path(), ec);
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + path.string());
    out << text;
    if (!out) throw Error("cannot write " + path.string());
}

}  // namespace

std::string to_string(ReportFormat format) {
    switch (format) {
        case ReportFormat::json: return "json";
        case ReportFormat::csv: return "csv";
        case ReportFormat::html: return "html";
    }
    return "unknown";
}

ReportFormat report_format_from_string(const std::string& name) {
    if (name == "json") return ReportFormat::json;
    if (name == "csv") return ReportFormat::csv;
    if (name == "html") return ReportFormat::html;
    throw Error("unknown report format '" + name + "'");
}

json report_to_json(const EvaluationTable& t) {
    json j;
    j["format"] = kReportFormatTag;
    j["version"] = t.version;
    j["config"] = {{"repetitions", t.repetitions},
                   {"calibration_runs", t.calibration_runs},
                   {"base_seed", t.base_seed},
                   {"canvas", {{"width", t.canvas_w}, {"height", t.canvas_h}}},
                   {"snapshot_count", t.snapshot_count},
                   {"provider", t.provider},
                   {"population", to_string(t.population)}};
    j["bug_keys"] = t.bug_keys;
    j["thresholds"] = {{"ours", thresholds_json(t.ours_thresholds)}, {"baseline", thresholds_json(t.baseline_thresholds)}};
    json cells = json::array();
    for (const auto& c : t.cells) {
        cells.push_back({{"bug_key", c.bug_key},
                         {"approach", to_string(c.approach)},
                         {"metric", to_string(c.metric)},
                         {"detected", c.detected},
                         {"repetitions", c.repetitions},
                         {"worst_score", c.worst_score},
                         {"threshold", c.threshold},
                         {"detected_by_rep", c.detected_by_rep},
                         {"failure", c.failure}});
    }
    j["cells"] = std::move(cells);
    json acc = json::array();
    for (const auto& a : t.accuracies) {
        acc.push_back({{"approach", to_string(a.approach)},
                       {"metric", to_string(a.metric)},
                       {"tp", a.tp},
                       {"fn", a.fn},
                       {"accuracy", a.accuracy},
                       {"formatted", a.formatted}});
    }
    j["accuracy"] = std::move(acc);
    json dists = json::array();
    for (const auto& d : t.distributions) {
        dists.push_back({{"approach", to_string(d.approach)},
                         {"metric", to_string(d.metric)},
                         {"clean", d.clean},
                         {"buggy", d.buggy},
                         {"clean_summary", summary_json(d.clean_summary)},
                         {"buggy_summary", summary_json(d.buggy_summary)},
                         {"mann_whitney",
                          {{"u_x", d.mann_whitney.u_x},
                           {"u_y", d.mann_whitney.u_y},
                           {"z", d.mann_whitney.z},
                           {"p", d.mann_whitney.p},
                           {"method", to_string(d.mann_whitney.method)}}},
                         {"effect", {{"d", d.effect.d}, {"label", to_string(d.effect.label)}}}});
    }
    j["distributions"] = std::move(dists);
    j["timing"] = {{"snapshots", t.timing.snapshots},
                   {"mean_snapshot_seconds", t.timing.mean_snapshot_seconds},
                   {"max_snapshot_seconds", t.timing.max_snapshot_seconds},
                   {"wall_seconds", t.timing.wall_seconds}};
    j["notes"] = t.notes;
    return j;
}

EvaluationTable report_from_json(const json& j) {
    try {
        if (j.at("format").get<std::string>() != kReportFormatTag) throw Error("not a spritecheck report");
        EvaluationTable t;
        t.version = j.at("version").get<int>();
        if (t.version != kReportVersion) throw Error("unsupported report version " + std::to_string(t.version));
        const json& c = j.at("config");
        t.repetitions = c.at("repetitions").get<int>();
        t.calibration_runs = c.at("calibration_runs").get<int>();
        t.base_seed = c.at("base_seed").get<std::uint64_t>();
        t.canvas_w = c.at("canvas").at("width").get<int>();
        t.canvas_h = c.at("canvas").at("height").get<int>();
        t.snapshot_count = c.at("snapshot_count").get<int>();
        t.provider = c.at("provider").get<std::string>();
        t.population = population_from_string(c.at("population").get<std::string>());
        t.bug_keys = j.at("bug_keys").get<std::vector<std::string>>();
        t.ours_thresholds = thresholds_from(j.at("thresholds").at("ours"));
        t.baseline_thresholds = thresholds_from(j.at("thresholds").at("baseline"));
        for (const auto& cj : j.at("cells")) {
            CellResult cell;
            cell.bug_key = cj.at("bug_key").get<std::string>();
            cell.approach = approach_from_string(cj.at("approach").get<std::string>());
            cell.metric = metric_from_string(cj.at("metric").get<std::string>());
            cell.detected = cj.at("detected").get<int>();
            cell.repetitions = cj.at("repetitions").get<int>();
            cell.worst_score = cj.at("worst_score").get<double>();
            cell.threshold = cj.at("threshold").get<double>();
            cell.detected_by_rep = cj.at("detected_by_rep").get<std::vector<int>>();
            cell.failure = cj.at("failure").get<std::string>();
            if (cell.detected < 0 || cell.detected > cell.repetitions) throw Error("detected count out of range");
            t.cells.push_back(std::move(cell));
        }
        for (const auto& aj : j.at("accuracy")) {
            AccuracyRow a;
            a.approach = approach_from_string(aj.at("approach").get<std::string>());
            a.metric = metric_from_string(aj.at("metric").get<std::string>());
            a.tp = aj.at("tp").get<long long>();
            a.fn = aj.at("fn").get<long long>();
            a.accuracy = aj.at("accuracy").get<double>();
            a.formatted = aj.at("formatted").get<std::string>();
            t.accuracies.push_back(std::move(a));
        }
        for (const auto& dj : j.at("distributions")) {
            Distribution d;
            d.approach = approach_from_string(dj.at("approach").get<std::string>());
            d.metric = metric_from_string(dj.at("metric").get<std::string>());
            d.clean = dj.at("clean").get<std::vector<double>>();
            d.buggy = dj.at("buggy").get<std::vector<double>>();
            d.clean_summary = summary_from(dj.at("clean_summary"));
            d.buggy_summary = summary_from(dj.at("buggy_summary"));
            const json& mw = dj.at("mann_whitney");
            d.mann_whitney.u_x = mw.at("u_x").get<double>();
            d.mann_whitney.u_y = mw.at("u_y").get<double>();
            d.mann_whitney.z = mw.at("z").get<double>();
            d.mann_whitney.p = mw.at("p").get<double>();
            d.mann_whitney.method = mw.at("method").get<std::string>() == "exact" ? PValueMethod::exact : PValueMethod::normal;
            d.effect.d = dj.at("effect").at("d").get<double>();
            d.effect.label = effect_label_from_string(dj.at("effect").at("label").get<std::string>());
            t.distributions.push_back(std::move(d));
        }
        const json& tm = j.at("timing");
        t.timing.snapshots = tm.at("snapshots").get<long long>();
        t.timing.mean_snapshot_seconds = tm.at("mean_snapshot_seconds").get<double>();
        t.timing.max_snapshot_seconds = tm.at("max_snapshot_seconds").get<double>();
        t.timing.wall_seconds = tm.at("wall_seconds").get<double>();
        t.notes = j.at("notes").get<std::vector<std::string>>();
        return t;
    } catch (const json::exception& e) {
        throw Error(std::string("malformed report: ") + e.what());
    }
}

std::string report_csv(const EvaluationTable& t) {
    std::ostringstream os;
    os << "approach,metric,bug_key,repetition,detected,worst_score,threshold\n";
    for (const auto& c : t.cells) {
        os << to_string(c.approach) << ',' << to_string(c.metric) << ',' << c.bug_key << ',' << c.repetitions << ','
           << c.detected << ',' << num(c.worst_score) << ',' << num(c.threshold) << '\n';
    }
    return os.str();
}

std::string report_html(const EvaluationTable& t) {
    const std::vector<BugSpec> catalog = list_bugs();
    std::vector<std::pair<Approach, MetricKind>> columns;
    for (Approach a : {Approach::baseline, Approach::ours}) {
        for (MetricKind k : kAllMetrics) {
            if (!metric_applies(a, k)) continue;
            if (t.accuracy_row(a, k) != nullptr) columns.emplace_back(a, k);
        }
    }
    auto span_of = [&](Approach a) {
        return std::count_if(columns.begin(), columns.end(), [&](const auto& c) { return c.first == a; });
    };

    std::ostringstream os;
    os << "<!DOCTYPE html>\n<html lang=\"en\"><head><meta charset=\"utf-8\"><title>spritecheck evaluation</title>\n"
       << "<style>body{font-family:sans-serif;margin:24px}table{border-collapse:collapse;margin-bottom:24px}"
       << "td,th{border:1px solid #bbb;padding:3px 8px;text-align:center}td.desc{text-align:left}"
       << "th.type{writing-mode:vertical-rl;transform:rotate(180deg)}</style></head><body>\n";
    os << "<h1>Visual bug detection</h1>\n<p>" << t.repetitions << " repetitions per bug, " << t.snapshot_count
       << " snapshots per run at " << t.canvas_w << "x" << t.canvas_h << ", thresholds from " << t.calibration_runs
       << " clean runs. ESIM provider: " << escape_html(t.provider) << ". Score populations: "
       << to_string(t.population) << " (ours), per screenshot (baseline).</p>\n";

    os << "<table id=\"detections\"><thead><tr><th rowspan=\"2\">Type</th><th rowspan=\"2\">Key</th>"
       << "<th rowspan=\"2\">Bug</th>";
    if (span_of(Approach::baseline) > 0) os << "<th colspan=\"" << span_of(Approach::baseline) << "\">Snapshot testing</th>";
    if (span_of(Approach::ours) > 0) os << "<th colspan=\"" << span_of(Approach::ours) << "\">Object-level oracle</th>";
    os << "</tr><tr>";
    for (const auto& [a, k] : columns) os << "<th>" << to_string(k) << "</th>";
    os << "</tr></thead><tbody>\n";
    std::string last_type;
    for (const auto& key : t.bug_keys) {
        const auto it = std::find_if(catalog.begin(), catalog.end(), [&](const BugSpec& s) { return s.key == key; });
        const std::string type = it != catalog.end() ? to_string(it->type) : "";
        os << "<tr>";
        if (type != last_type) {
            const auto rows = std::count_if(t.bug_keys.begin(), t.bug_keys.end(), [&](const std::string& k2) {
                const auto j2 = std::find_if(catalog.begin(), catalog.end(), [&](const BugSpec& s) { return s.key == k2; });
                return j2 != catalog.end() && to_string(j2->type) == type;
            });
            os << "<th class=\"type\" rowspan=\"" << rows << "\">" << type << "</th>";
            last_type = type;
        }
        os << "<td>" << escape_html(key) << "</td><td class=\"desc\">"
           << escape_html(it != catalog.end() ? it->description : "") << "</td>";
        for (const auto& [a, k] : columns) {
            const CellResult* c = t.cell(key, a, k);
            if (c == nullptr) {
                os << "<td>-</td>";
                continue;
            }
            os << "<td class=\"cell\" data-approach=\"" << to_string(a) << "\" data-metric=\"" << to_string(k)
               << "\" style=\"background:" << heat_colour(c->detected, c->repetitions) << "\" title=\"worst "
               << short_num(c->worst_score) << ", threshold " << short_num(c->threshold) << "\">" << c->detected
               << "</td>";
        }
        os << "</tr>\n";
    }
    os << "<tr><th colspan=\"3\">Accuracy</th>";
    for (const auto& [a, k] : columns) os << "<th>" << t.accuracy_row(a, k)->formatted << "</th>";
    os << "</tr></tbody></table>\n";

    os << "<h2>Clean vs buggy score distributions</h2>\n<table id=\"effects\"><thead><tr><th>Approach</th>"
       << "<th>Metric</th><th>U</th><th>p</th><th>Cliff's d</th><th>Effect</th><th>Scores</th></tr></thead><tbody>\n";
    for (const auto& d : t.distributions) {
        os << "<tr><td>" << to_string(d.approach) << "</td><td>" << to_string(d.metric) << "</td><td>"
           << short_num(d.mann_whitney.u_x) << "</td><td>" << short_num(d.mann_whitney.p) << "</td><td>"
           << short_num(d.effect.d) << "</td><td>" << to_string(d.effect.label) << "</td><td>" << boxplot_svg(d)
           << "</td></tr>\n";
    }
    os << "</tbody></table>\n";
    os << "<p>Per-snapshot processing: mean " << short_num(t.timing.mean_snapshot_seconds) << " s, max "
       << short_num(t.timing.max_snapshot_seconds) << " s over " << t.timing.snapshots << " snapshots. Wall time "
       << short_num(t.timing.wall_seconds) << " s.</p>\n";
    if (!t.notes.empty()) {
        os << "<h2>Notes</h2><ul>";
        for (const auto& n : t.notes) os << "<li>" << escape_html(n) << "</li>";
        os << "</ul>\n";
    }
    os << "</body></html>\n";
    return os.str();
}

std::filesystem::path emit_report(const EvaluationTable& table, ReportFormat format, const std::filesystem::path& path) {
    switch (format) {
        case ReportFormat::json: write_text(path, report_to_json(table).dump(1) + "\n"); break;
        case ReportFormat::csv: write_text(path, report_csv(table)); break;
        case ReportFormat::html: write_text(path, report_html(table)); break;
    }
    return path;
}

EvaluationTable load_report(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path.string());
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw Error("malformed report " + path.string() + ": " + e.what());
    }
    return report_from_json(j);
}

}  // namespace spritecheck
