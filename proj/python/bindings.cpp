#include <sstream>

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "spritecheck/bug_injector.hpp"
#include "spritecheck/cli.hpp"
#include "spritecheck/detector.hpp"
#include "spritecheck/metrics.hpp"
#include "spritecheck/oracle.hpp"
#include "spritecheck/png_io.hpp"
#include "spritecheck/simulator.hpp"
#include "spritecheck/stats.hpp"

namespace py = pybind11;
namespace sc = spritecheck;

namespace {

using ImageArray = py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>;

// Accepts H x W x 4 (RGBA) or H x W x 3 (RGB, opaque).
sc::Bitmap to_bitmap(const ImageArray& a) {
    if (a.ndim() != 3 || (a.shape(2) != 3 && a.shape(2) != 4)) {
        throw py::value_error("image must have shape (H, W, 3) or (H, W, 4)");
    }
    const int h = static_cast<int>(a.shape(0));
    const int w = static_cast<int>(a.shape(1));
    const int c = static_cast<int>(a.shape(2));
    sc::Bitmap bm(w, h);
    const std::uint8_t* p = a.data();
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x, p += c) bm.set(x, y, {p[0], p[1], p[2], c == 4 ? p[3] : std::uint8_t{255}});
    }
    return bm;
}

py::array_t<std::uint8_t> to_array(const sc::Bitmap& bm) {
    py::array_t<std::uint8_t> out({bm.height(), bm.width(), 4});
    std::copy(bm.bytes().begin(), bm.bytes().end(), out.mutable_data());
    return out;
}

py::dict pair_dict(const sc::ImagePair& p) {
    py::dict d;
    d["node_id"] = p.node_id;
    d["skipped"] = p.skipped;
    d["skip_reason"] = p.skip_reason;
    d["crop_box"] = py::make_tuple(p.crop_box.x, p.crop_box.y, p.crop_box.w, p.crop_box.h);
    d["comparable_pixels"] = p.comparable_pixels;
    if (!p.skipped) {
        d["oracle"] = to_array(p.oracle);
        d["object"] = to_array(p.object);
    }
    return d;
}

py::dict bug_dict(const sc::BugSpec& b) {
    py::dict d;
    d["key"] = b.key;
    d["type"] = sc::to_string(b.type);
    d["description"] = b.description;
    d["targets"] = b.targets;
    d["mechanism"] = sc::to_string(b.mechanism);
    d["magnitude"] = sc::describe(b.mechanism, b.magnitude);
    return d;
}

sc::GameConfig game_config(std::uint64_t seed, int width, int height, int snapshots) {
    sc::GameConfig c;
    c.seed = seed;
    c.canvas_w = width;
    c.canvas_h = height;
    c.snapshot_count = snapshots;
    return c;
}

}  // namespace

PYBIND11_MODULE(_spritecheck, m) {
    m.doc() = "Visual-bug detection for sprite-based 2D canvas scenes.";

    py::register_exception<sc::Error>(m, "Error", PyExc_RuntimeError);

    m.def("pct", [](const ImageArray& a, const ImageArray& b) { return sc::pct(to_bitmap(a), to_bitmap(b)); },
          "Fraction of pixels whose RGB matches exactly.", py::arg("a"), py::arg("b"));
    m.def("mse", [](const ImageArray& a, const ImageArray& b) { return sc::mse(to_bitmap(a), to_bitmap(b)); },
          "Mean squared per-channel RGB difference.", py::arg("a"), py::arg("b"));
    m.def(
        "ssim",
        [](const ImageArray& a, const ImageArray& b, int window) {
            sc::SsimParams p;
            p.window = window;
            return sc::ssim(to_bitmap(a), to_bitmap(b), p);
        },
        "Mean SSIM over RGB with a uniform square window.", py::arg("a"), py::arg("b"), py::arg("window") = 7);
    m.def(
        "esim",
        [](const ImageArray& a, const ImageArray& b, const std::string& command) {
            if (command.empty()) return sc::esim(to_bitmap(a), to_bitmap(b), sc::default_provider());
            return sc::esim(to_bitmap(a), to_bitmap(b), sc::ExternalEmbeddingProvider(command));
        },
        "Cosine similarity of embeddings; `command` selects an external provider.", py::arg("a"), py::arg("b"),
        py::arg("command") = "");
    m.def("embedding", [](const ImageArray& a) { return sc::default_embedding(to_bitmap(a)); },
          "Built-in 256-d grid descriptor.", py::arg("image"));

    m.def("read_png", [](const std::filesystem::path& p) { return to_array(sc::read_png(p)); }, py::arg("path"));
    m.def("write_png", [](const ImageArray& a, const std::filesystem::path& p) { sc::write_png(to_bitmap(a), p); },
          py::arg("image"), py::arg("path"));

    m.def(
        "build_pairs",
        [](const std::filesystem::path& bundle_dir) {
            py::list out;
            for (const auto& p : sc::build_pairs(sc::load_bundle(bundle_dir))) out.append(pair_dict(p));
            return out;
        },
        "Oracle/object image pairs of one bundle directory.", py::arg("bundle_dir"));

    m.def(
        "simulate",
        [](std::uint64_t seed, const std::filesystem::path& out, const std::string& bug, int width, int height,
           int snapshots) {
            const sc::GameConfig c = game_config(seed, width, height, snapshots);
            std::shared_ptr<const sc::BugHook> hook;
            if (!bug.empty()) hook = sc::make_hook(sc::find_bug(bug));
            std::vector<std::string> dirs;
            for (const auto& b : sc::run_test_case(c, hook.get())) {
                std::ostringstream name;
                name << "snapshot_" << (b.snapshot_index < 10 ? "0" : "") << b.snapshot_index;
                dirs.push_back(sc::save_bundle(b, out / name.str()).string());
            }
            return dirs;
        },
        "Runs one test case and saves its bundles; returns their directories.", py::arg("seed"), py::arg("out"),
        py::arg("bug") = "", py::arg("width") = 1280, py::arg("height") = 720, py::arg("snapshots") = 10);

    m.def("list_bugs", [] {
        py::list out;
        for (const auto& b : sc::list_bugs()) out.append(bug_dict(b));
        return out;
    });
    m.def(
        "verify_bug",
        [](const std::string& key, std::uint64_t seed, int width, int height, int snapshots) {
            const auto r = sc::verify_visibility(sc::find_bug(key), game_config(seed, width, height, snapshots));
            py::dict d;
            d["key"] = r.key;
            d["effective"] = r.effective;
            d["changed_pairs"] = r.diffs.size();
            d["snapshots_with_screen_change"] = r.snapshots_with_screen_change;
            return d;
        },
        py::arg("key"), py::arg("seed") = 1, py::arg("width") = 1280, py::arg("height") = 720,
        py::arg("snapshots") = 10);

    m.def("accuracy", &sc::accuracy, py::arg("tp"), py::arg("fn"));
    m.def("format_percent", &sc::format_percent, py::arg("tp"), py::arg("fn"));
    m.def(
        "mann_whitney_u",
        [](const std::vector<double>& x, const std::vector<double>& y) {
            const auto r = sc::mann_whitney_u(x, y);
            py::dict d;
            d["u_x"] = r.u_x;
            d["u_y"] = r.u_y;
            d["z"] = r.z;
            d["p"] = r.p;
            d["method"] = sc::to_string(r.method);
            return d;
        },
        py::arg("x"), py::arg("y"));
    m.def(
        "cliffs_delta",
        [](const std::vector<double>& x, const std::vector<double>& y) {
            const auto e = sc::cliffs_delta(x, y);
            return py::make_tuple(e.d, sc::to_string(e.label));
        },
        py::arg("x"), py::arg("y"));

    m.def(
        "run_cli",
        [](const std::vector<std::string>& args) {
            std::ostringstream out, err;
            int code = 0;
            {
                py::gil_scoped_release release;
                code = sc::run_cli(args, out, err);
            }
            return py::make_tuple(code, out.str(), err.str());
        },
        "Runs one CLI verb in-process; returns (exit_code, stdout, stderr).", py::arg("args"));
}
