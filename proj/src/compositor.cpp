#include "spritecheck/compositor.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace spritecheck {

namespace {

constexpr double kSnapEps = 1e-9;

double snap(double v) {
    const double r = std::round(v);
    return std::abs(v - r) < kSnapEps ? r : v;
}

// Opacity snapping: anything that quantizes to alpha 255 becomes exactly
// opaque, anything that quantizes to 0 becomes exactly transparent.
void snap_pixel(float* p) {
    const float a = p[3];
    if (a * 255.0f < 0.5f) {
        p[0] = p[1] = p[2] = p[3] = 0.0f;
    } else if (a != 1.0f && a * 255.0f >= 254.5f) {
        p[0] /= a;
        p[1] /= a;
        p[2] /= a;
        p[3] = 1.0f;
    }
}

// Premultiplied texture of a node's local content, one texel per local unit.
struct ContentTexture {
    int w = 0;
    int h = 0;
    std::vector<float> texels;

    [[nodiscard]] const float* at(int i, int j) const {
        return &texels[(static_cast<std::size_t>(j) * static_cast<std::size_t>(w) + static_cast<std::size_t>(i)) * 4];
    }
};

int wrap(long long v, int n) {
    const long long m = v % n;
    return static_cast<int>(m < 0 ? m + n : m);
}

void store_premul(float* dst, const std::uint8_t* src) {
    const float a = static_cast<float>(src[3]) / 255.0f;
    if (src[3] == 255) {
        dst[0] = src[0];
        dst[1] = src[1];
        dst[2] = src[2];
        dst[3] = 1.0f;
    } else {
        dst[0] = static_cast<float>(src[0]) * a;
        dst[1] = static_cast<float>(src[1]) * a;
        dst[2] = static_cast<float>(src[2]) * a;
        dst[3] = a;
    }
}

ContentTexture build_texture(const SceneNode& node, const Bitmap& asset) {
    const int frame = node.kind == NodeKind::animated_sprite ? node.frame_index.value_or(0) : 0;
    const Rect f = frame_rect_of(node, asset, frame);
    if (f.empty() || !asset.bounds().contains(f)) throw Error("frame rectangle outside asset for node " + node.id);

    ContentTexture tex;
    if (node.kind == NodeKind::tiling_sprite) {
        tex.w = static_cast<int>(std::llround(node.render_size_w.value_or(f.w)));
        tex.h = static_cast<int>(std::llround(node.render_size_h.value_or(f.h)));
        tex.texels.resize(static_cast<std::size_t>(tex.w) * static_cast<std::size_t>(tex.h) * 4);
        std::vector<int> col(static_cast<std::size_t>(tex.w));
        for (int i = 0; i < tex.w; ++i) {
            const double s = snap((i + 0.5 - node.tile_offset_x) / node.tile_scale_x);
            col[static_cast<std::size_t>(i)] = wrap(static_cast<long long>(std::floor(s)), f.w);
        }
        for (int j = 0; j < tex.h; ++j) {
            const double t = snap((j + 0.5 - node.tile_offset_y) / node.tile_scale_y);
            const int row = wrap(static_cast<long long>(std::floor(t)), f.h);
            const std::uint8_t* src_row = asset.row(f.y + row);
            for (int i = 0; i < tex.w; ++i) {
                store_premul(&tex.texels[(static_cast<std::size_t>(j) * tex.w + i) * 4],
                             src_row + static_cast<std::size_t>(f.x + col[static_cast<std::size_t>(i)]) * 4);
            }
        }
    } else {
        tex.w = f.w;
        tex.h = f.h;
        tex.texels.resize(static_cast<std::size_t>(tex.w) * static_cast<std::size_t>(tex.h) * 4);
        for (int j = 0; j < f.h; ++j) {
            const std::uint8_t* src_row = asset.row(f.y + j) + static_cast<std::size_t>(f.x) * 4;
            for (int i = 0; i < f.w; ++i) {
                store_premul(&tex.texels[(static_cast<std::size_t>(j) * tex.w + i) * 4], src_row + static_cast<std::size_t>(i) * 4);
            }
        }
    }
    return tex;
}

const Bitmap& resolve_asset(const SceneNode& node, const AssetStore& assets) {
    if (!node.asset_id) throw Error("unresolved asset: node " + node.id + " has no asset_id");
    const Asset* a = assets.find(*node.asset_id);
    if (a == nullptr) throw Error("unresolved asset: " + *node.asset_id + " for node " + node.id);
    return a->image;
}

AffineTransform local_transform(const SceneNode& n) {
    return AffineTransform::translate(n.x, n.y) * AffineTransform::rotate(n.rotation) *
           AffineTransform::scale(n.scale_x, n.scale_y);
}

}  // namespace

AffineTransform AffineTransform::rotate(double radians) {
    const double cs = std::cos(radians);
    const double sn = std::sin(radians);
    return {cs, sn, -sn, cs, 0.0, 0.0};
}

AffineTransform operator*(const AffineTransform& l, const AffineTransform& r) {
    return {l.a * r.a + l.c * r.b,
            l.b * r.a + l.d * r.b,
            l.a * r.c + l.c * r.d,
            l.b * r.c + l.d * r.d,
            l.a * r.tx + l.c * r.ty + l.tx,
            l.b * r.tx + l.d * r.ty + l.ty};
}

AffineTransform AffineTransform::inverse() const {
    const double det = determinant();
    if (det == 0.0 || !std::isfinite(det)) throw Error("degenerate transform");
    const double ia = d / det;
    const double ib = -b / det;
    const double ic = -c / det;
    const double id = a / det;
    return {ia, ib, ic, id, -(ia * tx + ic * ty), -(ib * tx + id * ty)};
}

bool AffineTransform::is_integer_translation() const {
    return a == 1.0 && b == 0.0 && c == 0.0 && d == 1.0 && tx == std::floor(tx) && ty == std::floor(ty);
}

RenderLayer::RenderLayer(std::string id, int rank, int canvas_w, int canvas_h, Rect bounds)
    : node_id(std::move(id)), draw_rank(rank), canvas_w_(canvas_w), canvas_h_(canvas_h), bounds_(bounds) {
    if (bounds_.empty()) bounds_ = {};
    data_.assign(static_cast<std::size_t>(bounds_.area()) * 4, 0.0f);
}

Rgba RenderLayer::straight(int x, int y) const {
    if (!bounds_.contains(x, y)) return {0, 0, 0, 0};
    const float* p = premul(x, y);
    if (p[3] <= 0.0f) return {0, 0, 0, 0};
    const double a = p[3];
    return {to_u8(p[0] / a), to_u8(p[1] / a), to_u8(p[2] / a), to_u8(a * 255.0)};
}

Bitmap RenderLayer::to_bitmap() const {
    Bitmap out(canvas_w_, canvas_h_);
    for (int y = bounds_.y; y < bounds_.bottom(); ++y) {
        for (int x = bounds_.x; x < bounds_.right(); ++x) out.set(x, y, straight(x, y));
    }
    return out;
}

void RenderLayer::snap_alpha() {
    for (std::size_t i = 0; i < data_.size(); i += 4) {
        float* p = &data_[i];
        p[3] = std::clamp(p[3], 0.0f, 1.0f);
        for (int k = 0; k < 3; ++k) p[k] = std::clamp(p[k], 0.0f, 255.0f * p[3]);
        snap_pixel(p);
    }
}

std::vector<std::string> RenderHook::draw_order(const SceneGraph& scene) const { return spritecheck::draw_order(scene); }

bool RenderHook::prepare(const SceneGraph&, SceneNode&, const Bitmap&, std::optional<Bitmap>&) const { return true; }

void RenderHook::post_draw(const SceneGraph&, const SceneNode&, RenderLayer&) const {}

void content_size(const SceneNode& node, const AssetStore& assets, double& w, double& h) {
    w = h = 0.0;
    if (!node.drawable()) return;
    const Bitmap& asset = resolve_asset(node, assets);
    const Rect f = frame_rect_of(node, asset, 0);
    w = f.w;
    h = f.h;
    if (node.kind == NodeKind::tiling_sprite) {
        w = static_cast<double>(std::llround(node.render_size_w.value_or(w)));
        h = static_cast<double>(std::llround(node.render_size_h.value_or(h)));
    }
}

double effective_alpha(const SceneNode& node, const SceneGraph& scene) {
    double alpha = node.alpha;
    std::optional<std::string> parent = node.parent_id;
    std::size_t guard = 0;
    while (parent) {
        if (++guard > scene.nodes.size()) throw Error("node not in tree: " + node.id);
        const auto it = scene.nodes.find(*parent);
        if (it == scene.nodes.end()) throw Error("node not in tree: " + node.id);
        alpha *= it->second.alpha;
        parent = it->second.parent_id;
    }
    return alpha;
}

AffineTransform world_transform(const SceneNode& node, const SceneGraph& scene, double content_w, double content_h) {
    if (!scene.contains(node.id)) throw Error("node not in tree: " + node.id);

    AffineTransform m = local_transform(node) *
                        AffineTransform::translate(-node.anchor_x * content_w, -node.anchor_y * content_h);
    std::string top = node.id;
    std::optional<std::string> parent = node.parent_id;
    std::size_t guard = 0;
    while (parent) {
        if (++guard > scene.nodes.size()) throw Error("node not in tree: " + node.id);
        const auto it = scene.nodes.find(*parent);
        if (it == scene.nodes.end()) throw Error("node not in tree: " + node.id);
        m = local_transform(it->second) * m;
        top = it->first;
        parent = it->second.parent_id;
    }
    if (top != scene.root_id) throw Error("node not in tree: " + node.id);

    m.a = snap(m.a);
    m.b = snap(m.b);
    m.c = snap(m.c);
    m.d = snap(m.d);
    m.tx = snap(m.tx);
    m.ty = snap(m.ty);
    return m;
}

AffineTransform world_transform(const SceneNode& node, const SceneGraph& scene, const AssetStore& assets) {
    double w = 0.0;
    double h = 0.0;
    content_size(node, assets, w, h);
    return world_transform(node, scene, w, h);
}

std::vector<std::string> draw_order(const SceneGraph& scene) {
    std::vector<std::string> out;
    if (!scene.contains(scene.root_id)) return out;
    std::set<std::string> visited;

    auto visit = [&](auto&& self, const SceneNode& n) -> void {
        if (!n.visible || !visited.insert(n.id).second) return;
        if (n.drawable()) out.push_back(n.id);
        std::vector<const SceneNode*> kids;
        for (const auto& c : n.children) {
            auto it = scene.nodes.find(c);
            if (it != scene.nodes.end() && it->second.parent_id == n.id) kids.push_back(&it->second);
        }
        std::stable_sort(kids.begin(), kids.end(),
                         [](const SceneNode* l, const SceneNode* r) { return l->z_index < r->z_index; });
        for (const SceneNode* k : kids) self(self, *k);
    };
    visit(visit, scene.nodes.at(scene.root_id));
    return out;
}

RenderLayer rasterize_node(const SceneNode& node, const SceneGraph& scene, const AssetStore& assets, int canvas_w,
                           int canvas_h, const Bitmap* asset_override, int draw_rank) {
    if (canvas_w <= 0 || canvas_h <= 0) throw Error("canvas size must be positive");
    if (!node.drawable()) throw Error("node " + node.id + " is not drawable");
    const Bitmap& asset = asset_override != nullptr ? *asset_override : resolve_asset(node, assets);
    const ContentTexture tex = build_texture(node, asset);
    const AffineTransform m = world_transform(node, scene, tex.w, tex.h);
    if (m.determinant() == 0.0 || !std::isfinite(m.determinant())) throw Error("degenerate transform");
    const float alpha = static_cast<float>(effective_alpha(node, scene));
    const Rect canvas{0, 0, canvas_w, canvas_h};

    if (m.is_integer_translation()) {
        const int ox = static_cast<int>(m.tx);
        const int oy = static_cast<int>(m.ty);
        RenderLayer layer(node.id, draw_rank, canvas_w, canvas_h, intersect(canvas, Rect{ox, oy, tex.w, tex.h}));
        const Rect& r = layer.bounds();
        for (int y = r.y; y < r.bottom(); ++y) {
            for (int x = r.x; x < r.right(); ++x) {
                const float* t = tex.at(x - ox, y - oy);
                float* p = layer.premul(x, y);
                if (alpha == 1.0f) {
                    p[0] = t[0];
                    p[1] = t[1];
                    p[2] = t[2];
                    p[3] = t[3];
                } else {
                    p[0] = t[0] * alpha;
                    p[1] = t[1] * alpha;
                    p[2] = t[2] * alpha;
                    p[3] = t[3] * alpha;
                    snap_pixel(p);
                }
            }
        }
        return layer;
    }

    // Footprint of the content rectangle, widened by one pixel for the bilinear fringe.
    double min_x = 1e300, min_y = 1e300, max_x = -1e300, max_y = -1e300;
    for (const auto& [u, v] : {std::pair{0.0, 0.0}, std::pair{double(tex.w), 0.0}, std::pair{0.0, double(tex.h)},
                               std::pair{double(tex.w), double(tex.h)}}) {
        double x = 0.0;
        double y = 0.0;
        m.apply(u, v, x, y);
        min_x = std::min(min_x, x);
        min_y = std::min(min_y, y);
        max_x = std::max(max_x, x);
        max_y = std::max(max_y, y);
    }
    const auto clamp_coord = [](double v) { return static_cast<int>(std::clamp(v, -1e9, 1e9)); };
    const int x0 = clamp_coord(std::floor(min_x)) - 1;
    const int y0 = clamp_coord(std::floor(min_y)) - 1;
    const int x1 = clamp_coord(std::ceil(max_x)) + 1;
    const int y1 = clamp_coord(std::ceil(max_y)) + 1;
    RenderLayer layer(node.id, draw_rank, canvas_w, canvas_h, intersect(canvas, Rect{x0, y0, x1 - x0, y1 - y0}));
    const Rect& r = layer.bounds();
    const AffineTransform inv = m.inverse();

    auto texel = [&](int i, int j) -> const float* {
        static constexpr float kClear[4] = {0.0f, 0.0f, 0.0f, 0.0f};
        if (i < 0 || j < 0 || i >= tex.w || j >= tex.h) return kClear;
        return tex.at(i, j);
    };

    for (int y = r.y; y < r.bottom(); ++y) {
        for (int x = r.x; x < r.right(); ++x) {
            double u = 0.0;
            double v = 0.0;
            inv.apply(x + 0.5, y + 0.5, u, v);
            const double su = snap(u - 0.5);
            const double sv = snap(v - 0.5);
            const double fu = std::floor(su);
            const double fv = std::floor(sv);
            if (fu < -2.0 || fv < -2.0 || fu > tex.w + 1.0 || fv > tex.h + 1.0) continue;
            const int i0 = static_cast<int>(fu);
            const int j0 = static_cast<int>(fv);
            const double wx = su - fu;
            const double wy = sv - fv;
            const double w00 = (1.0 - wx) * (1.0 - wy);
            const double w10 = wx * (1.0 - wy);
            const double w01 = (1.0 - wx) * wy;
            const double w11 = wx * wy;
            const float* t00 = texel(i0, j0);
            const float* t10 = texel(i0 + 1, j0);
            const float* t01 = texel(i0, j0 + 1);
            const float* t11 = texel(i0 + 1, j0 + 1);
            float* p = layer.premul(x, y);
            for (int k = 0; k < 4; ++k) {
                const double s = w00 * t00[k] + w10 * t10[k] + w01 * t01[k] + w11 * t11[k];
                p[k] = static_cast<float>(s * alpha);
            }
            snap_pixel(p);
        }
    }
    return layer;
}

void alpha_composite_into(Bitmap& dst, const RenderLayer& src) {
    if (dst.width() != src.canvas_w() || dst.height() != src.canvas_h()) {
        throw Error("alpha_composite: size mismatch");
    }
    const Rect& r = src.bounds();
    for (int y = r.y; y < r.bottom(); ++y) {
        std::uint8_t* row = dst.row(y);
        for (int x = r.x; x < r.right(); ++x) {
            const float* s = src.premul(x, y);
            const double sa = s[3];
            if (sa <= 0.0) continue;
            std::uint8_t* d = row + static_cast<std::size_t>(x) * 4;
            if (sa >= 1.0) {
                d[0] = to_u8(s[0]);
                d[1] = to_u8(s[1]);
                d[2] = to_u8(s[2]);
                d[3] = 255;
                continue;
            }
            const double da = d[3] / 255.0;
            const double keep = 1.0 - sa;
            const double out_a = sa + da * keep;
            for (int k = 0; k < 3; ++k) {
                const double out = s[k] + d[k] * da * keep;
                d[k] = to_u8(out / out_a);
            }
            d[3] = to_u8(out_a * 255.0);
        }
    }
}

Bitmap alpha_composite(Bitmap dst, const RenderLayer& src) {
    alpha_composite_into(dst, src);
    return dst;
}

Bitmap render_scene(const SceneGraph& scene, const AssetStore& assets, int canvas_w, int canvas_h,
                    const RenderHook* hook) {
    if (canvas_w <= 0 || canvas_h <= 0) throw Error("canvas size must be positive");
    Bitmap canvas(canvas_w, canvas_h, scene.background);
    const std::vector<std::string> order = hook != nullptr ? hook->draw_order(scene) : draw_order(scene);
    int rank = 0;
    for (const auto& id : order) {
        SceneNode effective = scene.node(id);
        const Bitmap& asset = resolve_asset(effective, assets);
        std::optional<Bitmap> substitute;
        if (hook != nullptr && !hook->prepare(scene, effective, asset, substitute)) {
            ++rank;
            continue;
        }
        RenderLayer layer = rasterize_node(effective, scene, assets, canvas_w, canvas_h,
                                           substitute ? &*substitute : &asset, rank++);
        if (hook != nullptr) hook->post_draw(scene, effective, layer);
        alpha_composite_into(canvas, layer);
    }
    return canvas;
}

}  // namespace spritecheck
