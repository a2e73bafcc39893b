#include "spritecheck/bundle.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "spritecheck/png_io.hpp"

namespace spritecheck {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr int kFormatVersion = 1;

bool safe_file_stem(const std::string& id) {
    if (id.empty() || id == "." || id == "..") return false;
    return std::all_of(id.begin(), id.end(), [](char c) {
        return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_' ||
               c == '-' || c == '.';
    });
}

std::string hex(const unsigned char* data, unsigned len) {
    static constexpr char digits[] = "0123456789abcdef";
    std::string out;
    out.reserve(len * 2);
    for (unsigned i = 0; i < len; ++i) {
        out.push_back(digits[data[i] >> 4]);
        out.push_back(digits[data[i] & 0xF]);
    }
    return out;
}

json rgba_to_json(Rgba c) { return json::array({c.r, c.g, c.b, c.a}); }

Rgba rgba_from_json(const json& j) {
    if (!j.is_array() || j.size() != 4) throw Error("colour must be an array of 4 integers");
    Rgba c;
    c.r = j.at(0).get<std::uint8_t>();
    c.g = j.at(1).get<std::uint8_t>();
    c.b = j.at(2).get<std::uint8_t>();
    c.a = j.at(3).get<std::uint8_t>();
    return c;
}

json node_to_json(const SceneNode& n) {
    json j;
    j["id"] = n.id;
    j["parent"] = n.parent_id ? json(*n.parent_id) : json(nullptr);
    j["children"] = n.children;
    j["kind"] = to_string(n.kind);
    j["x"] = n.x;
    j["y"] = n.y;
    j["scale_x"] = n.scale_x;
    j["scale_y"] = n.scale_y;
    j["rotation"] = n.rotation;
    j["anchor_x"] = n.anchor_x;
    j["anchor_y"] = n.anchor_y;
    j["alpha"] = n.alpha;
    j["visible"] = n.visible;
    j["z_index"] = n.z_index;
    if (n.asset_id) j["asset_id"] = *n.asset_id;
    if (n.frame_rect) {
        j["frame_rect"] = json::array({n.frame_rect->x, n.frame_rect->y, n.frame_rect->w, n.frame_rect->h});
    }
    if (n.kind == NodeKind::tiling_sprite) {
        j["tile_offset_x"] = n.tile_offset_x;
        j["tile_offset_y"] = n.tile_offset_y;
        j["tile_scale_x"] = n.tile_scale_x;
        j["tile_scale_y"] = n.tile_scale_y;
    }
    if (n.render_size_w) j["render_size_w"] = *n.render_size_w;
    if (n.render_size_h) j["render_size_h"] = *n.render_size_h;
    if (n.frame_index) j["frame_index"] = *n.frame_index;
    if (n.frame_count) j["frame_count"] = *n.frame_count;
    return j;
}

template <typename T>
void read_opt(const json& j, const char* key, T& out) {
    if (auto it = j.find(key); it != j.end() && !it->is_null()) out = it->get<T>();
}

template <typename T>
void read_opt(const json& j, const char* key, std::optional<T>& out) {
    if (auto it = j.find(key); it != j.end() && !it->is_null()) out = it->get<T>();
}

SceneNode node_from_json(const json& j) {
    SceneNode n;
    n.id = j.at("id").get<std::string>();
    try {
        read_opt(j, "parent", n.parent_id);
        read_opt(j, "children", n.children);
        n.kind = node_kind_from_string(j.at("kind").get<std::string>());
        read_opt(j, "x", n.x);
        read_opt(j, "y", n.y);
        read_opt(j, "scale_x", n.scale_x);
        read_opt(j, "scale_y", n.scale_y);
        read_opt(j, "rotation", n.rotation);
        read_opt(j, "anchor_x", n.anchor_x);
        read_opt(j, "anchor_y", n.anchor_y);
        read_opt(j, "alpha", n.alpha);
        read_opt(j, "visible", n.visible);
        read_opt(j, "z_index", n.z_index);
        read_opt(j, "asset_id", n.asset_id);
        if (auto it = j.find("frame_rect"); it != j.end() && !it->is_null()) {
            if (!it->is_array() || it->size() != 4) throw Error("frame_rect must be [x, y, w, h]");
            n.frame_rect = Rect{it->at(0).get<int>(), it->at(1).get<int>(), it->at(2).get<int>(), it->at(3).get<int>()};
        }
        read_opt(j, "tile_offset_x", n.tile_offset_x);
        read_opt(j, "tile_offset_y", n.tile_offset_y);
        read_opt(j, "tile_scale_x", n.tile_scale_x);
        read_opt(j, "tile_scale_y", n.tile_scale_y);
        read_opt(j, "render_size_w", n.render_size_w);
        read_opt(j, "render_size_h", n.render_size_h);
        read_opt(j, "frame_index", n.frame_index);
        read_opt(j, "frame_count", n.frame_count);
    } catch (const json::exception& e) {
        throw Error("malformed COR: node " + n.id + ": " + e.what());
    } catch (const Error& e) {
        throw Error("malformed COR: node " + n.id + ": " + e.what());
    }
    return n;
}

json scene_to_json(const SceneGraph& scene) {
    json j;
    j["format"] = "spritecheck-cor";
    j["version"] = kFormatVersion;
    j["root"] = scene.root_id;
    j["background"] = rgba_to_json(scene.background);
    json nodes = json::array();
    for (const auto& [id, node] : scene.nodes) nodes.push_back(node_to_json(node));
    j["nodes"] = std::move(nodes);
    return j;
}

SceneGraph scene_from_json(const json& j) {
    SceneGraph scene;
    try {
        scene.root_id = j.at("root").get<std::string>();
        if (j.contains("background")) scene.background = rgba_from_json(j.at("background"));
        const json& nodes = j.at("nodes");
        if (!nodes.is_array()) throw Error("nodes must be an array");
        for (const json& nj : nodes) {
            if (!nj.is_object() || !nj.contains("id") || !nj.at("id").is_string()) {
                throw Error("node entry without string id");
            }
            SceneNode n = node_from_json(nj);
            if (scene.nodes.count(n.id) != 0) throw Error("malformed COR: node " + n.id + " duplicate id");
            scene.nodes.emplace(n.id, std::move(n));
        }
    } catch (const json::exception& e) {
        throw Error(std::string("malformed COR: ") + e.what());
    } catch (const Error& e) {
        const std::string what = e.what();
        if (what.rfind("malformed COR", 0) == 0) throw;
        throw Error("malformed COR: " + what);
    }
    return scene;
}

std::string read_text(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw Error("cannot open " + p.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text(const fs::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + p.string());
    out << text;
    if (!out) throw Error("cannot write " + p.string());
}

bool finite_all(const SceneNode& n) {
    const double values[] = {n.x, n.y, n.scale_x, n.scale_y, n.rotation, n.anchor_x, n.anchor_y, n.alpha,
                             n.tile_offset_x, n.tile_offset_y, n.tile_scale_x, n.tile_scale_y};
    for (double v : values) {
        if (!std::isfinite(v)) return false;
    }
    if (n.render_size_w && !std::isfinite(*n.render_size_w)) return false;
    if (n.render_size_h && !std::isfinite(*n.render_size_h)) return false;
    return true;
}

}  // namespace

std::string to_string(NodeKind kind) {
    switch (kind) {
        case NodeKind::container: return "container";
        case NodeKind::sprite: return "sprite";
        case NodeKind::tiling_sprite: return "tiling_sprite";
        case NodeKind::animated_sprite: return "animated_sprite";
    }
    return "container";
}

NodeKind node_kind_from_string(const std::string& name) {
    if (name == "container") return NodeKind::container;
    if (name == "sprite") return NodeKind::sprite;
    if (name == "tiling_sprite") return NodeKind::tiling_sprite;
    if (name == "animated_sprite") return NodeKind::animated_sprite;
    throw Error("unknown node kind '" + name + "'");
}

const SceneNode& SceneGraph::node(const std::string& id) const {
    auto it = nodes.find(id);
    if (it == nodes.end()) throw Error("node not in tree: " + id);
    return it->second;
}

SceneNode& SceneGraph::node(const std::string& id) {
    auto it = nodes.find(id);
    if (it == nodes.end()) throw Error("node not in tree: " + id);
    return it->second;
}

const Asset* AssetStore::find(const std::string& id) const {
    auto it = assets.find(id);
    return it == assets.end() ? nullptr : &it->second;
}

void AssetStore::put(const std::string& id, Bitmap image, std::string source_url) {
    Asset a;
    a.checksum = bitmap_checksum(image);
    a.image = std::move(image);
    a.source_url = std::move(source_url);
    assets[id] = std::move(a);
}

std::string bitmap_checksum(const Bitmap& image) {
    const std::string header = std::to_string(image.width()) + "x" + std::to_string(image.height()) + ":";
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned len = 0;
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    if (ctx == nullptr) throw Error("cannot allocate digest context");
    const bool ok = EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) == 1 &&
                    EVP_DigestUpdate(ctx, header.data(), header.size()) == 1 &&
                    EVP_DigestUpdate(ctx, image.bytes().data(), image.bytes().size()) == 1 &&
                    EVP_DigestFinal_ex(ctx, digest, &len) == 1;
    EVP_MD_CTX_free(ctx);
    if (!ok) throw Error("SHA-256 digest failed");
    return hex(digest, len);
}

Rect frame_rect_of(const SceneNode& node, const Bitmap& asset, int frame) {
    Rect base;
    if (node.frame_rect) {
        base = *node.frame_rect;
    } else if (node.kind == NodeKind::animated_sprite && node.frame_count && *node.frame_count > 0) {
        base = {0, 0, asset.width() / *node.frame_count, asset.height()};
    } else {
        base = asset.bounds();
    }
    if (node.kind == NodeKind::animated_sprite) base.x += frame * base.w;
    return base;
}

std::vector<Violation> validate_cor(const SceneGraph& scene, const AssetStore& assets) {
    std::vector<Violation> out;
    auto report = [&](const std::string& id, std::string rule, std::string detail = {}) {
        if (detail.empty()) detail = rule;
        out.push_back({id, std::move(rule), std::move(detail)});
    };

    std::vector<std::string> roots;
    for (const auto& [key, n] : scene.nodes) {
        if (key != n.id) report(key, "id mismatch", "table key differs from node id " + n.id);
        if (!n.parent_id) {
            roots.push_back(key);
        } else if (!scene.contains(*n.parent_id)) {
            report(key, "unknown parent", "references unknown parent " + *n.parent_id);
        } else {
            const auto& siblings = scene.nodes.at(*n.parent_id).children;
            if (std::find(siblings.begin(), siblings.end(), key) == siblings.end()) {
                report(key, "child link mismatch", "not listed among children of " + *n.parent_id);
            }
        }
        std::set<std::string> seen;
        for (const auto& c : n.children) {
            if (!seen.insert(c).second) {
                report(key, "duplicate child", "lists child " + c + " twice");
                continue;
            }
            auto it = scene.nodes.find(c);
            if (it == scene.nodes.end()) {
                report(key, "unknown child", "references unknown child " + c);
            } else if (it->second.parent_id != key) {
                report(c, "child link mismatch", "listed as child of " + key + " but parent differs");
            }
        }

        if (!finite_all(n)) report(key, "non-finite value");
        if (!(n.alpha >= 0.0 && n.alpha <= 1.0)) report(key, "alpha out of range");
        if (n.drawable()) {
            if (n.scale_x == 0.0 || n.scale_y == 0.0) report(key, "zero scale");
            if (!(n.anchor_x >= 0.0 && n.anchor_x <= 1.0 && n.anchor_y >= 0.0 && n.anchor_y <= 1.0)) {
                report(key, "anchor out of range");
            }
        }
        if (n.kind == NodeKind::animated_sprite) {
            if (!n.frame_count || *n.frame_count <= 0) {
                report(key, "frame_count invalid");
            } else if (!n.frame_index || *n.frame_index < 0 || *n.frame_index >= *n.frame_count) {
                report(key, "frame_index out of range");
            }
        }
        if (n.kind == NodeKind::tiling_sprite) {
            if (n.tile_scale_x == 0.0 || n.tile_scale_y == 0.0) report(key, "zero tile scale");
            if ((n.render_size_w && *n.render_size_w < 0.0) || (n.render_size_h && *n.render_size_h < 0.0)) {
                report(key, "negative render size");
            }
        }

        if (n.drawable() && n.visible && !n.asset_id) {
            report(key, "missing asset", "drawable node carries no asset_id");
        }
        if (n.drawable() && n.asset_id) {
            const Asset* a = assets.find(*n.asset_id);
            if (a == nullptr) {
                if (n.visible) report(key, "unknown asset", "references unknown asset " + *n.asset_id);
            } else {
                const int frames = n.kind == NodeKind::animated_sprite && n.frame_count ? *n.frame_count : 1;
                if (frames > 0) {
                    const Rect first = frame_rect_of(n, a->image, 0);
                    const Rect last = frame_rect_of(n, a->image, frames - 1);
                    if (first.empty() || !a->image.bounds().contains(first) || !a->image.bounds().contains(last)) {
                        report(key, "frame_rect out of bounds");
                    }
                }
            }
        }
    }

    if (roots.empty()) {
        report(scene.root_id, "no root", "no node without parent");
    } else if (roots.size() > 1) {
        for (std::size_t i = 1; i < roots.size(); ++i) report(roots[i], "multiple roots");
    }
    if (!scene.contains(scene.root_id)) {
        report(scene.root_id, "unknown root", "root id not in node table");
    } else if (scene.nodes.at(scene.root_id).parent_id) {
        report(scene.root_id, "root has parent");
    } else {
        // Reachability from the declared root; bounded walk tolerates cycles.
        std::set<std::string> reached;
        std::vector<std::string> stack{scene.root_id};
        while (!stack.empty()) {
            std::string id = stack.back();
            stack.pop_back();
            if (!reached.insert(id).second) continue;
            auto it = scene.nodes.find(id);
            if (it == scene.nodes.end()) continue;
            for (const auto& c : it->second.children) {
                auto cit = scene.nodes.find(c);
                if (cit != scene.nodes.end() && cit->second.parent_id == id) stack.push_back(c);
            }
        }
        for (const auto& [key, n] : scene.nodes) {
            if (reached.count(key) == 0 && n.parent_id) report(key, "unreachable node", "not reachable from root");
        }
    }

    for (const auto& [id, a] : assets.assets) {
        if (a.image.empty()) report(id, "empty asset", "asset " + id + " has zero size");
    }
    return out;
}

std::filesystem::path save_bundle(const SnapshotBundle& bundle, const fs::path& dir) {
    if (bundle.screenshot.width() != bundle.canvas_w || bundle.screenshot.height() != bundle.canvas_h) {
        throw Error("screenshot/canvas size mismatch");
    }
    std::error_code ec;
    fs::create_directories(dir / "assets", ec);
    if (ec) throw Error("cannot create bundle directory " + dir.string() + ": " + ec.message());

    for (const auto& entry : fs::directory_iterator(dir / "assets")) {
        if (entry.is_regular_file() && entry.path().extension() == ".png") fs::remove(entry.path());
    }

    json manifest;
    manifest["format"] = "spritecheck-bundle";
    manifest["version"] = kFormatVersion;
    manifest["run_id"] = bundle.run_id;
    manifest["snapshot_index"] = bundle.snapshot_index;
    manifest["timestamp_ms"] = bundle.timestamp;
    manifest["canvas"] = {{"width", bundle.canvas_w}, {"height", bundle.canvas_h}};
    manifest["files"] = {{"screenshot", "screenshot.png"}, {"cor", "cor.json"}};
    manifest["screenshot_checksum"] = bitmap_checksum(bundle.screenshot);
    json assets = json::array();
    for (const auto& [id, a] : bundle.assets.assets) {
        if (!safe_file_stem(id)) throw Error("asset id not usable as file name: " + id);
        const std::string file = "assets/" + id + ".png";
        write_png(a.image, dir / file);
        assets.push_back({{"id", id}, {"file", file}, {"checksum", bitmap_checksum(a.image)}, {"source_url", a.source_url}});
    }
    manifest["assets"] = std::move(assets);
    manifest["annotations"] = bundle.annotations;

    write_png(bundle.screenshot, dir / "screenshot.png");
    write_text(dir / "cor.json", scene_to_json(bundle.cor).dump(2) + "\n");
    write_text(dir / "manifest.json", manifest.dump(2) + "\n");
    return dir;
}

SnapshotBundle load_bundle(const fs::path& dir) {
    if (!fs::exists(dir / "manifest.json")) throw Error("incomplete bundle: missing manifest.json in " + dir.string());
    json manifest;
    try {
        manifest = json::parse(read_text(dir / "manifest.json"));
    } catch (const json::exception& e) {
        throw Error(std::string("incomplete bundle: unreadable manifest: ") + e.what());
    }

    SnapshotBundle b;
    std::string screenshot_file = "screenshot.png";
    std::string cor_file = "cor.json";
    try {
        b.run_id = manifest.at("run_id").get<std::string>();
        b.snapshot_index = manifest.at("snapshot_index").get<int>();
        b.timestamp = manifest.value("timestamp_ms", std::int64_t{0});
        b.canvas_w = manifest.at("canvas").at("width").get<int>();
        b.canvas_h = manifest.at("canvas").at("height").get<int>();
        if (manifest.contains("files")) {
            screenshot_file = manifest["files"].value("screenshot", screenshot_file);
            cor_file = manifest["files"].value("cor", cor_file);
        }
        if (manifest.contains("annotations")) {
            b.annotations = manifest.at("annotations").get<std::map<std::string, std::string>>();
        }
    } catch (const json::exception& e) {
        throw Error(std::string("incomplete bundle: manifest field error: ") + e.what());
    }
    if (b.canvas_w <= 0 || b.canvas_h <= 0) throw Error("incomplete bundle: canvas size must be positive");

    for (const auto& f : {screenshot_file, cor_file}) {
        if (!fs::exists(dir / f)) throw Error("incomplete bundle: missing " + f);
    }

    if (manifest.contains("assets")) {
        for (const json& aj : manifest.at("assets")) {
            const std::string id = aj.at("id").get<std::string>();
            const std::string file = aj.value("file", "assets/" + id + ".png");
            if (!fs::exists(dir / file)) throw Error("incomplete bundle: missing " + file);
            Asset a;
            a.image = read_png(dir / file);
            a.source_url = aj.value("source_url", std::string{});
            a.checksum = bitmap_checksum(a.image);
            if (aj.contains("checksum") && aj.at("checksum").get<std::string>() != a.checksum) {
                throw Error("incomplete bundle: checksum mismatch for asset " + id);
            }
            b.assets.assets.emplace(id, std::move(a));
        }
    }

    b.screenshot = read_png(dir / screenshot_file);
    if (b.screenshot.width() != b.canvas_w || b.screenshot.height() != b.canvas_h) {
        throw Error("screenshot/canvas size mismatch");
    }

    json cor;
    try {
        cor = json::parse(read_text(dir / cor_file));
    } catch (const json::exception& e) {
        throw Error(std::string("malformed COR: ") + e.what());
    }
    b.cor = scene_from_json(cor);

    const auto violations = validate_cor(b.cor, b.assets);
    if (!violations.empty()) {
        const auto& v = violations.front();
        throw Error("malformed COR: node " + v.node_id + " " + v.detail);
    }
    return b;
}

std::vector<SnapshotBundle> load_run(const fs::path& run_dir) {
    if (!fs::is_directory(run_dir)) throw Error("not a run directory: " + run_dir.string());
    std::vector<SnapshotBundle> out;
    std::vector<fs::path> dirs;
    for (const auto& entry : fs::directory_iterator(run_dir)) {
        if (entry.is_directory() && fs::exists(entry.path() / "manifest.json")) dirs.push_back(entry.path());
    }
    std::sort(dirs.begin(), dirs.end());
    for (const auto& d : dirs) out.push_back(load_bundle(d));
    std::stable_sort(out.begin(), out.end(),
                     [](const SnapshotBundle& a, const SnapshotBundle& b) { return a.snapshot_index < b.snapshot_index; });
    if (out.empty()) throw Error("no bundles found in " + run_dir.string());
    return out;
}

}  // namespace spritecheck
