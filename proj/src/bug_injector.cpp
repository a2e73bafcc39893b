#include "spritecheck/bug_injector.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numbers>
#include <sstream>

#include "spritecheck/oracle.hpp"

namespace spritecheck {

namespace {

const char* const kMechanismNames[] = {
    "suppress_draw",  "freeze_animation", "force_draw_hidden", "asset_color_map", "asset_grayscale", "property_offset",
    "layer_swap",     "pixel_distortion", "blur",              "patch_overlay",   "artifact_noise",  "row_shear_tearing",
};

const char* const kTypeNames[] = {"state", "appearance", "layout", "rendering"};

BugSpec make(std::string key, BugType type, std::string description, std::vector<std::string> targets,
             Mechanism mechanism, BugMagnitude magnitude, bool foreground) {
    BugSpec s;
    s.key = std::move(key);
    s.type = type;
    s.description = std::move(description);
    s.targets = std::move(targets);
    s.mechanism = mechanism;
    s.magnitude = std::move(magnitude);
    s.seed = fnv1a(s.key);
    s.foreground = foreground;
    return s;
}

std::vector<BugSpec> build_catalog() {
    const ContentManifest& m = content_manifest();
    using T = BugType;
    using M = Mechanism;
    std::vector<BugSpec> v;
    auto mag = [](auto&& fill) {
        BugMagnitude b;
        fill(b);
        return b;
    };
    v.push_back(make("S1", T::state, "Player character is not drawn.", {"player"}, M::suppress_draw, {}, true));
    v.push_back(make("S2", T::state, "The hills layer is not drawn.", {"hills"}, M::suppress_draw, {}, false));
    v.push_back(make("S3", T::state, "The ship is not drawn.", {"ship"}, M::suppress_draw, {}, false));
    v.push_back(make("S4", T::state, "Player walk animation stays on its first frame.", {"player"},
                     M::freeze_animation, {}, true));
    v.push_back(make("S5", T::state, "Campfire log animation stays on its first frame.", {"fallen_log"},
                     M::freeze_animation, {}, true));
    v.push_back(make("S6", T::state, "Start button is drawn after the game has started.", {"button"},
                     M::force_draw_hidden, {}, true));

    v.push_back(make("A1", T::appearance, "Player beard has the wrong colour.", {"player"}, M::asset_color_map,
                     mag([&](BugMagnitude& b) {
                         b.color_map = ColorMap::swap_red_blue;
                         b.region = m.beard;
                     }),
                     true));
    v.push_back(make("A2", T::appearance, "The whole player sprite has the wrong colours.", {"player"},
                     M::asset_color_map, mag([](BugMagnitude& b) { b.color_map = ColorMap::rotate_channels; }), true));
    v.push_back(make("A3", T::appearance, "Player and falling logs are drawn in greyscale.", {"player", "log"},
                     M::asset_grayscale, {}, true));
    v.push_back(make("A4", T::appearance, "Falling logs have the wrong colours.", {"log"}, M::asset_color_map,
                     mag([](BugMagnitude& b) { b.color_map = ColorMap::invert; }), true));
    v.push_back(make("A5", T::appearance, "The ship's sail has the wrong colours.", {"ship"}, M::asset_color_map,
                     mag([&](BugMagnitude& b) {
                         b.color_map = ColorMap::swap_red_green;
                         b.region = m.sail;
                     }),
                     false));
    v.push_back(make("A6", T::appearance, "One background bunny has the wrong colours.", {"bunny_0"},
                     M::asset_color_map, mag([](BugMagnitude& b) { b.color_map = ColorMap::swap_red_blue; }), false));

    v.push_back(make("L1", T::layout, "The ship is drawn away from its position.", {"ship"}, M::property_offset,
                     mag([](BugMagnitude& b) {
                         b.dx = 40;
                         b.dy = -20;
                     }),
                     false));
    v.push_back(make("L2", T::layout, "The player is drawn away from its position.", {"player"}, M::property_offset,
                     mag([](BugMagnitude& b) { b.dx = -30; }), true));
    v.push_back(make("L3", T::layout, "Clouds are drawn lower than their position.", {"cloud"}, M::property_offset,
                     mag([](BugMagnitude& b) { b.dy = 25; }), false));
    v.push_back(make("L4", T::layout, "The player is drawn with the wrong rotation.", {"player"},
                     M::property_offset, mag([](BugMagnitude& b) { b.rotation = std::numbers::pi / 8.0; }), true));
    v.push_back(make("L5", T::layout, "Trees are drawn in front of the bushes.", {"trees"}, M::layer_swap,
                     mag([](BugMagnitude& b) { b.after = "bushes"; }), false));
    v.push_back(make("L6", T::layout, "Falling logs are drawn with the wrong rotation.", {"log"}, M::property_offset,
                     mag([](BugMagnitude& b) { b.rotation = std::numbers::pi / 4.0; }), true));

    v.push_back(make("R1", T::rendering, "Player and falling logs are heavily distorted.", {"player", "log"},
                     M::pixel_distortion,
                     mag([](BugMagnitude& b) {
                         b.amplitude = 6;
                         b.block = 8;
                     }),
                     true));
    v.push_back(make("R2", T::rendering, "Player and falling logs are slightly distorted.", {"player", "log"},
                     M::pixel_distortion,
                     mag([](BugMagnitude& b) {
                         b.amplitude = 1;
                         b.block = 32;
                     }),
                     true));
    v.push_back(make("R3", T::rendering, "Player and falling logs are blurred.", {"player", "log"}, M::blur,
                     mag([](BugMagnitude& b) { b.radius = 2; }), true));
    v.push_back(make("R4", T::rendering, "Trees carry patches of background colour.", {"trees"}, M::patch_overlay,
                     mag([](BugMagnitude& b) {
                         b.patch_count = 6;
                         b.patch_size = 24;
                     }),
                     false));
    v.push_back(make("R5", T::rendering, "Bushes carry salt-and-pepper artifacts.", {"bushes"}, M::artifact_noise,
                     mag([](BugMagnitude& b) { b.density = 0.02; }), false));
    v.push_back(make("R6", T::rendering, "The beach has a torn band of rows.", {"beach"}, M::row_shear_tearing,
                     mag([](BugMagnitude& b) {
                         b.band_y = 30;
                         b.band_h = 20;
                         b.shift = 24;
                     }),
                     false));
    return v;
}

Bitmap recolor(const Bitmap& asset, const BugSpec& spec, const SceneNode& node) {
    Bitmap out = asset;
    const BugMagnitude& m = spec.magnitude;
    // The region repeats in every frame of an animated strip.
    const int frames = node.kind == NodeKind::animated_sprite && node.frame_count ? *node.frame_count : 1;
    const int frame_w = asset.width() / std::max(frames, 1);
    for (int y = 0; y < asset.height(); ++y) {
        for (int x = 0; x < asset.width(); ++x) {
            if (m.region && !m.region->contains(x % frame_w, y)) continue;
            const Rgba c = asset.at(x, y);
            if (c.a == 0) continue;
            if (spec.mechanism == Mechanism::asset_grayscale) {
                const std::uint8_t l = luma(c);
                out.set(x, y, {l, l, l, c.a});
            } else {
                out.set(x, y, apply_color_map(m.color_map, c));
            }
        }
    }
    return out;
}

void distort(RenderLayer& layer, const BugMagnitude& m, std::uint64_t seed) {
    if (m.block <= 0 || m.amplitude <= 0) return;
    const Rect b = layer.bounds();
    const RenderLayer src = layer;
    const std::uint64_t span = static_cast<std::uint64_t>(2 * m.amplitude + 1);
    for (int y = b.y; y < b.bottom(); ++y) {
        for (int x = b.x; x < b.right(); ++x) {
            const auto bx = static_cast<std::uint64_t>((x - b.x) / m.block);
            const auto by = static_cast<std::uint64_t>((y - b.y) / m.block);
            const std::uint64_t h = hash_mix(seed, bx, by);
            const int dx = static_cast<int>(h % span) - m.amplitude;
            const int dy = static_cast<int>((h >> 32) % span) - m.amplitude;
            float* p = layer.premul(x, y);
            const int sx = x + dx;
            const int sy = y + dy;
            if (b.contains(sx, sy)) {
                std::copy_n(src.premul(sx, sy), 4, p);
            } else {
                std::fill_n(p, 4, 0.0f);
            }
        }
    }
}

void box_blur(RenderLayer& layer, int radius) {
    if (radius <= 0) return;
    const Rect b = layer.bounds();
    const double norm = 1.0 / (2 * radius + 1);
    for (int pass = 0; pass < 2; ++pass) {
        const RenderLayer src = layer;
        for (int y = b.y; y < b.bottom(); ++y) {
            for (int x = b.x; x < b.right(); ++x) {
                double acc[4] = {0, 0, 0, 0};
                for (int k = -radius; k <= radius; ++k) {
                    const int sx = pass == 0 ? x + k : x;
                    const int sy = pass == 0 ? y : y + k;
                    if (!b.contains(sx, sy)) continue;
                    const float* s = src.premul(sx, sy);
                    for (int c = 0; c < 4; ++c) acc[c] += s[c];
                }
                float* p = layer.premul(x, y);
                for (int c = 0; c < 4; ++c) p[c] = static_cast<float>(acc[c] * norm);
            }
        }
    }
}

void stamp_patches(RenderLayer& layer, const BugMagnitude& m, Rgba color, std::uint64_t seed) {
    const Rect b = layer.bounds();
    if (m.patch_size <= 0) return;
    SplitMix64 rng(seed);
    for (int i = 0; i < m.patch_count; ++i) {
        const int px = b.x + static_cast<int>(rng.below(static_cast<std::uint64_t>(std::max(1, b.w - m.patch_size + 1))));
        const int py = b.y + static_cast<int>(rng.below(static_cast<std::uint64_t>(std::max(1, b.h - m.patch_size + 1))));
        const Rect patch = intersect({px, py, m.patch_size, m.patch_size}, b);
        for (int y = patch.y; y < patch.bottom(); ++y) {
            for (int x = patch.x; x < patch.right(); ++x) {
                float* p = layer.premul(x, y);
                p[0] = color.r;
                p[1] = color.g;
                p[2] = color.b;
                p[3] = 1.0f;
            }
        }
    }
}

void add_noise(RenderLayer& layer, double density, std::uint64_t seed) {
    const Rect b = layer.bounds();
    const auto cut = static_cast<std::uint64_t>(density * 0x1.0p32);
    for (int y = b.y; y < b.bottom(); ++y) {
        for (int x = b.x; x < b.right(); ++x) {
            float* p = layer.premul(x, y);
            if (p[3] <= 0.0f) continue;
            const std::uint64_t h = hash_mix(seed, static_cast<std::uint64_t>(x), static_cast<std::uint64_t>(y));
            if ((h & 0xFFFFFFFFULL) >= cut) continue;
            const float v = (h >> 32) & 1 ? 255.0f : 0.0f;
            p[0] = p[1] = p[2] = v;
            p[3] = 1.0f;
        }
    }
}

void tear_rows(RenderLayer& layer, const BugMagnitude& m) {
    const Rect b = layer.bounds();
    if (m.band_h <= 0 || m.shift == 0 || b.w <= 0) return;
    const RenderLayer src = layer;
    const int y0 = std::max(b.y, b.y + m.band_y);
    const int y1 = std::min(b.bottom(), b.y + m.band_y + m.band_h);
    for (int y = y0; y < y1; ++y) {
        for (int x = b.x; x < b.right(); ++x) {
            int sx = (x - b.x - m.shift) % b.w;
            if (sx < 0) sx += b.w;
            std::copy_n(src.premul(b.x + sx, y), 4, layer.premul(x, y));
        }
    }
}

}  // namespace

std::string to_string(BugType type) { return kTypeNames[static_cast<int>(type)]; }
std::string to_string(Mechanism mechanism) { return kMechanismNames[static_cast<int>(mechanism)]; }

std::string to_string(ColorMap map) {
    switch (map) {
        case ColorMap::identity: return "identity";
        case ColorMap::swap_red_blue: return "swap_red_blue";
        case ColorMap::swap_red_green: return "swap_red_green";
        case ColorMap::rotate_channels: return "rotate_channels";
        case ColorMap::invert: return "invert";
    }
    return "unknown";
}

BugType bug_type_from_string(const std::string& name) {
    for (int i = 0; i < 4; ++i) {
        if (name == kTypeNames[i]) return static_cast<BugType>(i);
    }
    throw Error("unknown bug type '" + name + "'");
}

Mechanism mechanism_from_string(const std::string& name) {
    for (int i = 0; i < 12; ++i) {
        if (name == kMechanismNames[i]) return static_cast<Mechanism>(i);
    }
    throw Error("unknown mechanism '" + name + "'");
}

Rgba apply_color_map(ColorMap map, Rgba c) {
    switch (map) {
        case ColorMap::identity: return c;
        case ColorMap::swap_red_blue: return {c.b, c.g, c.r, c.a};
        case ColorMap::swap_red_green: return {c.g, c.r, c.b, c.a};
        case ColorMap::rotate_channels: return {c.g, c.b, c.r, c.a};
        case ColorMap::invert:
            return {static_cast<std::uint8_t>(255 - c.r), static_cast<std::uint8_t>(255 - c.g),
                    static_cast<std::uint8_t>(255 - c.b), c.a};
    }
    return c;
}

std::uint8_t luma(Rgba c) { return static_cast<std::uint8_t>((299 * c.r + 587 * c.g + 114 * c.b + 500) / 1000); }

std::string describe(Mechanism mechanism, const BugMagnitude& m) {
    std::ostringstream os;
    switch (mechanism) {
        case Mechanism::suppress_draw:
        case Mechanism::freeze_animation:
        case Mechanism::force_draw_hidden: os << "-"; break;
        case Mechanism::asset_grayscale: os << "luma"; break;
        case Mechanism::asset_color_map:
            os << to_string(m.color_map);
            if (m.region) os << " in " << m.region->w << "x" << m.region->h << "+" << m.region->x << "+" << m.region->y;
            break;
        case Mechanism::property_offset: {
            bool any = false;
            if (m.dx != 0.0) os << "dx=" << m.dx, any = true;
            if (m.dy != 0.0) os << (any ? " " : "") << "dy=" << m.dy, any = true;
            if (m.rotation != 0.0) {
                const double frac = std::numbers::pi / m.rotation;
                os << (any ? " " : "") << "rot=pi/" << std::lround(frac);
            }
            break;
        }
        case Mechanism::layer_swap: os << "after " << m.after; break;
        case Mechanism::pixel_distortion: os << "shift<=" << m.amplitude << "px block=" << m.block; break;
        case Mechanism::blur: os << "box radius " << m.radius; break;
        case Mechanism::patch_overlay: os << m.patch_count << " x " << m.patch_size << "px"; break;
        case Mechanism::artifact_noise: os << m.density * 100.0 << "% of covered px"; break;
        case Mechanism::row_shear_tearing:
            os << "rows " << m.band_y << "+" << m.band_h << " shift " << m.shift << "px";
            break;
    }
    return os.str();
}

bool role_matches(const std::string& role, const std::string& node_id) {
    if (node_id == role) return true;
    if (node_id.size() <= role.size() + 1 || node_id.compare(0, role.size(), role) != 0 || node_id[role.size()] != '_') {
        return false;
    }
    return std::all_of(node_id.begin() + static_cast<std::ptrdiff_t>(role.size()) + 1, node_id.end(),
                       [](unsigned char c) { return std::isdigit(c) != 0; });
}

std::vector<BugSpec> list_bugs() {
    static const std::vector<BugSpec> catalog = build_catalog();
    return catalog;
}

const BugSpec& find_bug(const std::string& key) {
    static const std::vector<BugSpec> catalog = build_catalog();
    for (const auto& s : catalog) {
        if (s.key == key) return s;
    }
    throw Error("unknown bug key '" + key + "'");
}

BugHook::BugHook(BugSpec spec) : spec_(std::move(spec)) {
    if (static_cast<int>(spec_.mechanism) < 0 || static_cast<int>(spec_.mechanism) > 11) {
        throw Error("unknown mechanism for bug " + spec_.key);
    }
    if (spec_.targets.empty()) throw Error("bug " + spec_.key + " has no targets");
}

bool BugHook::targets(const std::string& node_id) const {
    return std::any_of(spec_.targets.begin(), spec_.targets.end(),
                       [&](const std::string& role) { return role_matches(role, node_id); });
}

std::vector<std::string> BugHook::draw_order(const SceneGraph& scene) const {
    if (spec_.mechanism == Mechanism::force_draw_hidden) {
        SceneGraph shown = scene;
        for (auto& [id, node] : shown.nodes) {
            if (targets(id)) node.visible = true;
        }
        return spritecheck::draw_order(shown);
    }
    std::vector<std::string> order = spritecheck::draw_order(scene);
    if (spec_.mechanism == Mechanism::layer_swap) {
        std::vector<std::string> moved;
        std::vector<std::string> rest;
        for (auto& id : order) (targets(id) ? moved : rest).push_back(id);
        auto anchor = std::find(rest.begin(), rest.end(), spec_.magnitude.after);
        if (anchor == rest.end() || moved.empty()) return order;
        rest.insert(anchor + 1, moved.begin(), moved.end());
        return rest;
    }
    return order;
}

bool BugHook::prepare(const SceneGraph&, SceneNode& effective, const Bitmap& asset,
                      std::optional<Bitmap>& substitute) const {
    if (!targets(effective.id)) return true;
    switch (spec_.mechanism) {
        case Mechanism::suppress_draw: return false;
        case Mechanism::freeze_animation:
            if (effective.frame_index) effective.frame_index = 0;
            break;
        case Mechanism::force_draw_hidden: effective.visible = true; break;
        case Mechanism::asset_color_map:
        case Mechanism::asset_grayscale: substitute = recolor(asset, spec_, effective); break;
        case Mechanism::property_offset:
            effective.x += spec_.magnitude.dx;
            effective.y += spec_.magnitude.dy;
            effective.rotation += spec_.magnitude.rotation;
            break;
        default: break;
    }
    return true;
}

void BugHook::post_draw(const SceneGraph& scene, const SceneNode& node, RenderLayer& layer) const {
    if (!targets(node.id)) return;
    const std::uint64_t seed = spec_.seed ^ fnv1a(node.id);
    switch (spec_.mechanism) {
        case Mechanism::pixel_distortion: distort(layer, spec_.magnitude, seed); break;
        case Mechanism::blur: box_blur(layer, spec_.magnitude.radius); break;
        case Mechanism::patch_overlay: stamp_patches(layer, spec_.magnitude, scene.background, seed); break;
        case Mechanism::artifact_noise: add_noise(layer, spec_.magnitude.density, seed); break;
        case Mechanism::row_shear_tearing: tear_rows(layer, spec_.magnitude); break;
        default: return;
    }
    layer.snap_alpha();
}

std::shared_ptr<const BugHook> make_hook(const BugSpec& spec) { return std::make_shared<const BugHook>(spec); }

VisibilityReport verify_visibility(const BugSpec& spec, const GameConfig& config) {
    const auto hook = make_hook(spec);
    const std::vector<SnapshotBundle> clean = run_test_case(config);
    const std::vector<SnapshotBundle> buggy = run_test_case(config, hook.get());
    VisibilityReport report;
    report.key = spec.key;
    for (std::size_t i = 0; i < buggy.size(); ++i) {
        if (i < clean.size() && clean[i].screenshot != buggy[i].screenshot) ++report.snapshots_with_screen_change;
        for (const ImagePair& pair : build_pairs(buggy[i])) {
            if (pair.skipped) continue;
            long long diff = 0;
            for (int y = 0; y < pair.object.height(); ++y) {
                for (int x = 0; x < pair.object.width(); ++x) {
                    if (pair.object.at(x, y) != pair.oracle.at(x, y)) ++diff;
                }
            }
            if (diff > 0) report.diffs.push_back({static_cast<int>(i), pair.node_id, diff});
        }
    }
    report.effective = !report.diffs.empty();
    if (!report.effective) throw Error("ineffective bug magnitude: " + spec.key);
    return report;
}

}  // namespace spritecheck
