#include "spritecheck/oracle.hpp"

#include <algorithm>

namespace spritecheck {

namespace {

const ObjectMask* find_mask(const std::vector<ObjectMask>& masks, const std::string& node_id) {
    for (const auto& m : masks) {
        if (m.node_id == node_id) return &m;
    }
    return nullptr;
}

// Pixels of `crop` that belong to the node's own opaque mask and are not
// covered by any higher-rank node. Row-major over the crop box.
std::vector<std::uint8_t> comparison_region(const ObjectMask& own, const std::vector<ObjectMask>& masks,
                                            const Rect& crop, long long& count) {
    std::vector<std::uint8_t> keep(static_cast<std::size_t>(crop.area()), 0);
    for (int y = crop.y; y < crop.bottom(); ++y) {
        for (int x = crop.x; x < crop.right(); ++x) {
            if (own.opaque_at(x, y)) {
                keep[static_cast<std::size_t>(y - crop.y) * crop.w + static_cast<std::size_t>(x - crop.x)] = 1;
            }
        }
    }
    for (const auto& other : masks) {
        if (other.draw_rank <= own.draw_rank || other.node_id == own.node_id) continue;
        const Rect overlap = intersect(other.bounds, crop);
        for (int y = overlap.y; y < overlap.bottom(); ++y) {
            for (int x = overlap.x; x < overlap.right(); ++x) {
                if (other.covered_at(x, y)) {
                    keep[static_cast<std::size_t>(y - crop.y) * crop.w + static_cast<std::size_t>(x - crop.x)] = 0;
                }
            }
        }
    }
    count = std::count(keep.begin(), keep.end(), std::uint8_t{1});
    return keep;
}

Bitmap masked_crop(const Rect& crop, const std::vector<std::uint8_t>& keep, Rgba fill, auto&& source) {
    Bitmap out(crop.w, crop.h, fill);
    for (int y = 0; y < crop.h; ++y) {
        for (int x = 0; x < crop.w; ++x) {
            if (keep[static_cast<std::size_t>(y) * crop.w + static_cast<std::size_t>(x)] != 0) {
                out.set(x, y, source(crop.x + x, crop.y + y));
            }
        }
    }
    return out;
}

std::optional<std::string> skip_reason_for(const ObjectMask& own) {
    if (own.bounds.empty()) return "off-canvas";
    if (own.opaque_count == 0) return "no fully opaque pixels";
    return std::nullopt;
}

}  // namespace

ObjectMask ObjectMask::from_layer(const RenderLayer& layer) {
    ObjectMask m;
    m.node_id = layer.node_id;
    m.draw_rank = layer.draw_rank;
    m.canvas_w = layer.canvas_w();
    m.canvas_h = layer.canvas_h();
    m.bounds = layer.bounds();
    const auto n = static_cast<std::size_t>(m.bounds.area());
    m.opaque.assign(n, 0);
    m.coverage.assign(n, 0);
    int x0 = m.bounds.right(), y0 = m.bounds.bottom(), x1 = m.bounds.x - 1, y1 = m.bounds.y - 1;
    std::size_t i = 0;
    for (int y = m.bounds.y; y < m.bounds.bottom(); ++y) {
        for (int x = m.bounds.x; x < m.bounds.right(); ++x, ++i) {
            const float a = layer.premul(x, y)[3];
            if (a > 0.0f) m.coverage[i] = 1;
            if (a == 1.0f) {
                m.opaque[i] = 1;
                ++m.opaque_count;
                x0 = std::min(x0, x);
                y0 = std::min(y0, y);
                x1 = std::max(x1, x);
                y1 = std::max(y1, y);
            }
        }
    }
    if (m.opaque_count > 0) m.opaque_box = {x0, y0, x1 - x0 + 1, y1 - y0 + 1};
    return m;
}

Bitmap ObjectMask::to_bitmap() const {
    Bitmap out(canvas_w, canvas_h, {0, 0, 0, 255});
    for (int y = bounds.y; y < bounds.bottom(); ++y) {
        for (int x = bounds.x; x < bounds.right(); ++x) {
            if (opaque_at(x, y)) out.set(x, y, {255, 255, 255, 255});
        }
    }
    return out;
}

std::vector<ObjectMask> compute_masks(const SceneGraph& scene, const AssetStore& assets, int canvas_w, int canvas_h) {
    std::vector<ObjectMask> masks;
    int rank = 0;
    for (const auto& id : draw_order(scene)) {
        masks.push_back(ObjectMask::from_layer(rasterize_node(scene.node(id), scene, assets, canvas_w, canvas_h, nullptr, rank++)));
    }
    return masks;
}

OracleImage generate_oracle(const SceneNode& node, const SceneGraph& scene, const AssetStore& assets,
                            const std::vector<ObjectMask>& masks, Rgba fill) {
    const ObjectMask* saved = find_mask(masks, node.id);
    const int rank = saved != nullptr ? saved->draw_rank : static_cast<int>(masks.size());
    if (masks.empty()) throw Error("generate_oracle: masks not computed");
    const int canvas_w = masks.front().canvas_w;
    const int canvas_h = masks.front().canvas_h;

    // Steps 1-2: transform and paste onto a canvas-sized blank layer.
    const RenderLayer pasted = rasterize_node(node, scene, assets, canvas_w, canvas_h, nullptr, rank);
    // Step 3: this node's mask.
    const ObjectMask own = ObjectMask::from_layer(pasted);

    OracleImage out;
    out.skip_reason = skip_reason_for(own);
    if (out.skip_reason) return out;

    // Steps 4-5: occlude with higher-rank masks, crop to the mask's tight box.
    out.crop_box = own.opaque_box;
    const auto keep = comparison_region(own, masks, out.crop_box, out.comparable_pixels);
    if (out.comparable_pixels == 0) out.skip_reason = "fully occluded";
    out.image = masked_crop(out.crop_box, keep, fill, [&](int x, int y) { return pasted.straight(x, y); });
    return out;
}

Bitmap extract_object(const Bitmap& screenshot, const std::string& node_id, const std::vector<ObjectMask>& masks,
                      const Rect& crop_box, Rgba fill) {
    if (crop_box.empty() || !screenshot.bounds().contains(crop_box)) {
        throw Error("extract_object: crop box outside screenshot for node " + node_id);
    }
    const ObjectMask* own = find_mask(masks, node_id);
    if (own == nullptr) throw Error("extract_object: no mask for node " + node_id);
    long long count = 0;
    const auto keep = comparison_region(*own, masks, crop_box, count);
    return masked_crop(crop_box, keep, fill, [&](int x, int y) { return screenshot.at(x, y); });
}

std::vector<ImagePair> build_pairs(const SnapshotBundle& bundle, Rgba fill) {
    const SceneGraph& scene = bundle.cor;
    const std::vector<std::string> order = draw_order(scene);

    std::vector<std::optional<RenderLayer>> layers(order.size());
    std::vector<std::string> errors(order.size());
    std::vector<ObjectMask> masks;
    masks.reserve(order.size());
    for (std::size_t i = 0; i < order.size(); ++i) {
        try {
            layers[i] = rasterize_node(scene.node(order[i]), scene, bundle.assets, bundle.canvas_w, bundle.canvas_h,
                                       nullptr, static_cast<int>(i));
            masks.push_back(ObjectMask::from_layer(*layers[i]));
        } catch (const Error& e) {
            errors[i] = e.what();
        }
    }

    std::vector<ImagePair> pairs;
    pairs.reserve(order.size());
    std::size_t mask_index = 0;
    for (std::size_t i = 0; i < order.size(); ++i) {
        ImagePair pair;
        pair.node_id = order[i];
        if (!layers[i]) {
            pair.skipped = true;
            pair.skip_reason = errors[i];
            pairs.push_back(std::move(pair));
            continue;
        }
        const ObjectMask& own = masks[mask_index++];
        if (auto reason = skip_reason_for(own)) {
            pair.skipped = true;
            pair.skip_reason = *reason;
            pairs.push_back(std::move(pair));
            continue;
        }
        pair.crop_box = own.opaque_box;
        const auto keep = comparison_region(own, masks, pair.crop_box, pair.comparable_pixels);
        if (pair.comparable_pixels == 0) {
            pair.skipped = true;
            pair.skip_reason = "fully occluded";
            pair.crop_box = {};
            pairs.push_back(std::move(pair));
            continue;
        }
        const RenderLayer& layer = *layers[i];
        pair.oracle = masked_crop(pair.crop_box, keep, fill, [&](int x, int y) { return layer.straight(x, y); });
        pair.object = masked_crop(pair.crop_box, keep, fill, [&](int x, int y) { return bundle.screenshot.at(x, y); });
        pairs.push_back(std::move(pair));
    }
    return pairs;
}

}  // namespace spritecheck
