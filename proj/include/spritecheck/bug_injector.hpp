#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "spritecheck/compositor.hpp"
#include "spritecheck/simulator.hpp"

namespace spritecheck {

enum class BugType { state, appearance, layout, rendering };

enum class Mechanism {
    suppress_draw,
    freeze_animation,
    force_draw_hidden,
    asset_color_map,
    asset_grayscale,
    property_offset,
    layer_swap,
    pixel_distortion,
    blur,
    patch_overlay,
    artifact_noise,
    row_shear_tearing,
};

enum class ColorMap { identity, swap_red_blue, swap_red_green, rotate_channels, invert };

std::string to_string(BugType type);
std::string to_string(Mechanism mechanism);
std::string to_string(ColorMap map);
BugType bug_type_from_string(const std::string& name);
Mechanism mechanism_from_string(const std::string& name);

Rgba apply_color_map(ColorMap map, Rgba c);
// Integer luma, (299 R + 587 G + 114 B + 500) / 1000.
std::uint8_t luma(Rgba c);

// Only the fields read by the bug's mechanism matter.
struct BugMagnitude {
    double dx = 0.0;  // property_offset
    double dy = 0.0;
    double rotation = 0.0;
    ColorMap color_map = ColorMap::identity;  // asset_color_map
    std::optional<Rect> region;               // per-frame sub-rect of the asset
    std::string after;                        // layer_swap: draw the target right after this node
    int amplitude = 0;                        // pixel_distortion: max block shift in px
    int block = 0;                            //   block edge in px
    int radius = 0;                           // blur: box radius
    int patch_count = 0;                      // patch_overlay
    int patch_size = 0;
    double density = 0.0;  // artifact_noise: fraction of covered pixels
    int band_y = 0;        // row_shear_tearing: band rows relative to the layer top
    int band_h = 0;
    int shift = 0;

    friend bool operator==(const BugMagnitude&, const BugMagnitude&) = default;
};

std::string describe(Mechanism mechanism, const BugMagnitude& magnitude);

struct BugSpec {
    std::string key;
    BugType type = BugType::state;
    std::string description;
    // Node roles. A role matches the node with that id and every pooled
    // instance "<role>_<n>".
    std::vector<std::string> targets;
    Mechanism mechanism = Mechanism::suppress_draw;
    BugMagnitude magnitude;
    std::uint64_t seed = 0;
    bool foreground = false;

    friend bool operator==(const BugSpec&, const BugSpec&) = default;
};

bool role_matches(const std::string& role, const std::string& node_id);

std::vector<BugSpec> list_bugs();
const BugSpec& find_bug(const std::string& key);

class BugHook : public RenderHook {
public:
    explicit BugHook(BugSpec spec);

    [[nodiscard]] const BugSpec& spec() const { return spec_; }
    [[nodiscard]] bool targets(const std::string& node_id) const;

    std::vector<std::string> draw_order(const SceneGraph& scene) const override;
    bool prepare(const SceneGraph& scene, SceneNode& effective, const Bitmap& asset,
                 std::optional<Bitmap>& substitute) const override;
    void post_draw(const SceneGraph& scene, const SceneNode& node, RenderLayer& layer) const override;

private:
    BugSpec spec_;
};

std::shared_ptr<const BugHook> make_hook(const BugSpec& spec);

struct VisibilityDiff {
    int snapshot_index = 0;
    std::string node_id;
    long long differing_pixels = 0;
};

struct VisibilityReport {
    std::string key;
    bool effective = false;
    std::vector<VisibilityDiff> diffs;
    int snapshots_with_screen_change = 0;
};

// Runs one test case with and without the hook. Throws "ineffective bug
// magnitude" when no non-skipped pair's object image differs from its oracle.
VisibilityReport verify_visibility(const BugSpec& spec, const GameConfig& config);

}  // namespace spritecheck
