#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "spritecheck/image.hpp"

namespace spritecheck {

enum class NodeKind { container, sprite, tiling_sprite, animated_sprite };

std::string to_string(NodeKind kind);
NodeKind node_kind_from_string(const std::string& name);

// One object of the canvas objects representation (COR).
//
// Coordinates are y-down with the origin at the canvas top-left; rotation is
// clockwise in radians. (x, y) is the anchor point's position in parent space.
struct SceneNode {
    std::string id;
    std::optional<std::string> parent_id;
    std::vector<std::string> children;
    NodeKind kind = NodeKind::container;

    double x = 0.0;
    double y = 0.0;
    double scale_x = 1.0;
    double scale_y = 1.0;
    double rotation = 0.0;
    double anchor_x = 0.0;
    double anchor_y = 0.0;
    double alpha = 1.0;
    bool visible = true;
    int z_index = 0;

    std::optional<std::string> asset_id;
    std::optional<Rect> frame_rect;

    // tiling_sprite only
    double tile_offset_x = 0.0;
    double tile_offset_y = 0.0;
    double tile_scale_x = 1.0;
    double tile_scale_y = 1.0;
    std::optional<double> render_size_w;
    std::optional<double> render_size_h;

    // animated_sprite only
    std::optional<int> frame_index;
    std::optional<int> frame_count;

    [[nodiscard]] bool drawable() const { return kind != NodeKind::container; }

    friend bool operator==(const SceneNode&, const SceneNode&) = default;
};

struct SceneGraph {
    std::string root_id;
    std::map<std::string, SceneNode> nodes;
    Rgba background{135, 206, 235, 255};

    [[nodiscard]] const SceneNode& node(const std::string& id) const;
    [[nodiscard]] SceneNode& node(const std::string& id);
    [[nodiscard]] bool contains(const std::string& id) const { return nodes.count(id) != 0; }

    friend bool operator==(const SceneGraph&, const SceneGraph&) = default;
};

struct Asset {
    Bitmap image;
    std::string source_url;
    std::string checksum;

    friend bool operator==(const Asset&, const Asset&) = default;
};

struct AssetStore {
    std::map<std::string, Asset> assets;

    [[nodiscard]] const Asset* find(const std::string& id) const;
    [[nodiscard]] bool contains(const std::string& id) const { return assets.count(id) != 0; }
    // Inserts or replaces, computing the checksum from the image.
    void put(const std::string& id, Bitmap image, std::string source_url = {});

    friend bool operator==(const AssetStore&, const AssetStore&) = default;
};

struct SnapshotBundle {
    SceneGraph cor;
    Bitmap screenshot;
    int canvas_w = 0;
    int canvas_h = 0;
    std::int64_t timestamp = 0;
    std::string run_id;
    int snapshot_index = 0;
    AssetStore assets;
    // Free-form producer metadata (e.g. capture tick); persisted in the manifest.
    std::map<std::string, std::string> annotations;

    friend bool operator==(const SnapshotBundle&, const SnapshotBundle&) = default;
};

struct Violation {
    std::string node_id;
    std::string rule;
    std::string detail;

    friend bool operator==(const Violation&, const Violation&) = default;
};

// SHA-256 over "<w>x<h>:" followed by the raw RGBA bytes, lowercase hex.
std::string bitmap_checksum(const Bitmap& image);

// Size of one frame of a drawable node's asset (frame_rect, or the asset
// split into frame_count columns for animated sprites).
Rect frame_rect_of(const SceneNode& node, const Bitmap& asset, int frame);

// Total: reports every violated invariant and never throws.
std::vector<Violation> validate_cor(const SceneGraph& scene, const AssetStore& assets);

SnapshotBundle load_bundle(const std::filesystem::path& dir);
std::filesystem::path save_bundle(const SnapshotBundle& bundle, const std::filesystem::path& dir);

// Loads every bundle directory directly below `run_dir`, sorted by snapshot_index.
std::vector<SnapshotBundle> load_run(const std::filesystem::path& run_dir);

}  // namespace spritecheck
