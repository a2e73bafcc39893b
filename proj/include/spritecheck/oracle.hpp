#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "spritecheck/bundle.hpp"
#include "spritecheck/compositor.hpp"

namespace spritecheck {

inline constexpr Rgba kDefaultFill{0, 0, 0, 255};

// Per-node masks over the canvas, stored only inside `bounds`.
//   opaque:   pasted asset has alpha == 255 (the node's own background mask)
//   coverage: pasted asset has alpha > 0 (used when this node occludes others)
struct ObjectMask {
    std::string node_id;
    int draw_rank = 0;
    int canvas_w = 0;
    int canvas_h = 0;
    Rect bounds;
    std::vector<std::uint8_t> opaque;
    std::vector<std::uint8_t> coverage;
    Rect opaque_box;  // tight box of opaque pixels, empty if none
    long long opaque_count = 0;

    [[nodiscard]] bool opaque_at(int x, int y) const {
        return bounds.contains(x, y) && opaque[index(x, y)] != 0;
    }
    [[nodiscard]] bool covered_at(int x, int y) const {
        return bounds.contains(x, y) && coverage[index(x, y)] != 0;
    }
    // Canvas-sized binary image of the opaque mask (255 = set).
    [[nodiscard]] Bitmap to_bitmap() const;

    static ObjectMask from_layer(const RenderLayer& layer);

private:
    [[nodiscard]] std::size_t index(int x, int y) const {
        return static_cast<std::size_t>(y - bounds.y) * static_cast<std::size_t>(bounds.w) +
               static_cast<std::size_t>(x - bounds.x);
    }
};

struct OracleImage {
    Bitmap image;
    Rect crop_box;
    long long comparable_pixels = 0;
    std::optional<std::string> skip_reason;
};

struct ImagePair {
    std::string node_id;
    Bitmap oracle;
    Bitmap object;
    Rect crop_box;
    long long comparable_pixels = 0;
    bool skipped = false;
    std::string skip_reason;

    friend bool operator==(const ImagePair&, const ImagePair&) = default;
};

std::vector<ObjectMask> compute_masks(const SceneGraph& scene, const AssetStore& assets, int canvas_w, int canvas_h);

OracleImage generate_oracle(const SceneNode& node, const SceneGraph& scene, const AssetStore& assets,
                            const std::vector<ObjectMask>& masks, Rgba fill = kDefaultFill);

Bitmap extract_object(const Bitmap& screenshot, const std::string& node_id, const std::vector<ObjectMask>& masks,
                      const Rect& crop_box, Rgba fill = kDefaultFill);

std::vector<ImagePair> build_pairs(const SnapshotBundle& bundle, Rgba fill = kDefaultFill);

}  // namespace spritecheck
