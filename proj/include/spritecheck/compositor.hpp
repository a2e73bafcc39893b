#pragma once

#include <optional>
#include <string>
#include <vector>

#include "spritecheck/bundle.hpp"
#include "spritecheck/image.hpp"

namespace spritecheck {

// Maps local (u, v) to canvas (x, y):
//   x = a*u + c*v + tx
//   y = b*u + d*v + ty
struct AffineTransform {
    double a = 1.0;
    double b = 0.0;
    double c = 0.0;
    double d = 1.0;
    double tx = 0.0;
    double ty = 0.0;

    static AffineTransform translate(double x, double y) { return {1.0, 0.0, 0.0, 1.0, x, y}; }
    static AffineTransform scale(double sx, double sy) { return {sx, 0.0, 0.0, sy, 0.0, 0.0}; }
    static AffineTransform rotate(double radians);

    [[nodiscard]] double determinant() const { return a * d - b * c; }
    [[nodiscard]] AffineTransform inverse() const;
    [[nodiscard]] bool is_integer_translation() const;
    void apply(double u, double v, double& x, double& y) const {
        x = a * u + c * v + tx;
        y = b * u + d * v + ty;
    }

    // (lhs * rhs)(p) == lhs(rhs(p))
    friend AffineTransform operator*(const AffineTransform& lhs, const AffineTransform& rhs);
    friend bool operator==(const AffineTransform&, const AffineTransform&) = default;
};

// A node's rasterized contribution. Pixels are premultiplied RGBA as floats
// (colour in [0,255] scaled by alpha, alpha in [0,1]) stored only over
// `bounds`; everything outside is fully transparent.
class RenderLayer {
public:
    RenderLayer() = default;
    RenderLayer(std::string node_id, int draw_rank, int canvas_w, int canvas_h, Rect bounds);

    std::string node_id;
    int draw_rank = 0;

    [[nodiscard]] int canvas_w() const { return canvas_w_; }
    [[nodiscard]] int canvas_h() const { return canvas_h_; }
    [[nodiscard]] const Rect& bounds() const { return bounds_; }

    [[nodiscard]] const float* premul(int x, int y) const { return &data_[offset(x, y)]; }
    [[nodiscard]] float* premul(int x, int y) { return &data_[offset(x, y)]; }
    [[nodiscard]] float alpha(int x, int y) const {
        return bounds_.contains(x, y) ? data_[offset(x, y) + 3] : 0.0f;
    }
    // Straight-alpha 8-bit view of one canvas pixel.
    [[nodiscard]] Rgba straight(int x, int y) const;
    // Canvas-sized straight RGBA8 image.
    [[nodiscard]] Bitmap to_bitmap() const;

    // Restores the opacity snapping invariant after pixels were edited.
    void snap_alpha();

private:
    [[nodiscard]] std::size_t offset(int x, int y) const {
        return (static_cast<std::size_t>(y - bounds_.y) * static_cast<std::size_t>(bounds_.w) +
                static_cast<std::size_t>(x - bounds_.x)) * 4;
    }

    int canvas_w_ = 0;
    int canvas_h_ = 0;
    Rect bounds_;
    std::vector<float> data_;
};

// Render-time seam used by the bug injector. Implementations must not mutate
// the scene or assets; every change applies to the drawn pixels only.
class RenderHook {
public:
    virtual ~RenderHook() = default;

    virtual std::vector<std::string> draw_order(const SceneGraph& scene) const;
    // Return false to skip drawing. May edit `effective` (a copy of the COR
    // node) or provide a substitute asset bitmap.
    virtual bool prepare(const SceneGraph& scene, SceneNode& effective, const Bitmap& asset,
                         std::optional<Bitmap>& substitute) const;
    virtual void post_draw(const SceneGraph& scene, const SceneNode& node, RenderLayer& layer) const;
};

// Local content size (frame size, or render size for tiling sprites).
void content_size(const SceneNode& node, const AssetStore& assets, double& w, double& h);

// Effective opacity: the node's alpha times every ancestor's.
double effective_alpha(const SceneNode& node, const SceneGraph& scene);

AffineTransform world_transform(const SceneNode& node, const SceneGraph& scene, double content_w, double content_h);
AffineTransform world_transform(const SceneNode& node, const SceneGraph& scene, const AssetStore& assets);

std::vector<std::string> draw_order(const SceneGraph& scene);

RenderLayer rasterize_node(const SceneNode& node, const SceneGraph& scene, const AssetStore& assets, int canvas_w,
                           int canvas_h, const Bitmap* asset_override = nullptr, int draw_rank = 0);

Bitmap alpha_composite(Bitmap dst, const RenderLayer& src);
void alpha_composite_into(Bitmap& dst, const RenderLayer& src);

Bitmap render_scene(const SceneGraph& scene, const AssetStore& assets, int canvas_w, int canvas_h,
                    const RenderHook* hook = nullptr);

}  // namespace spritecheck
