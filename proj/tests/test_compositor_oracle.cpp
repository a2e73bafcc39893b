#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "spritecheck/compositor.hpp"
#include "spritecheck/oracle.hpp"
#include "support/oracles.hpp"
#include "support/scenes.hpp"

using namespace spritecheck;

TEST(Compositor, TransformCompositionOrder) {
    const AffineTransform m = AffineTransform::translate(5, 7) * AffineTransform::scale(2, 3);
    double x = 0, y = 0;
    m.apply(1, 1, x, y);
    EXPECT_DOUBLE_EQ(x, 7.0);
    EXPECT_DOUBLE_EQ(y, 10.0);
    const AffineTransform id = m * m.inverse();
    EXPECT_NEAR(id.a, 1.0, 1e-12);
    EXPECT_NEAR(id.tx, 0.0, 1e-12);
    EXPECT_THROW((void)AffineTransform::scale(0, 1).inverse(), Error);
}

TEST(Compositor, IntegerTranslationCopiesPixels) {
    SceneGraph g = fixture::root_only();
    AssetStore assets;
    const Bitmap tex = oracle::random_bitmap(5, 6, 4);
    assets.put("t", tex);
    fixture::add_sprite(g, "s", "t", 3, 2);
    const Bitmap out = render_scene(g, assets, 16, 10);
    for (int j = 0; j < 4; ++j) {
        for (int i = 0; i < 6; ++i) EXPECT_EQ(out.at(3 + i, 2 + j), tex.at(i, j));
    }
    EXPECT_EQ(out.at(0, 0), (Rgba{0, 0, 0, 255}));
}

TEST(Compositor, QuarterTurnIsAPixelPermutation) {
    SceneGraph g = fixture::root_only();
    AssetStore assets;
    const Bitmap tex = oracle::random_bitmap(9, 4, 3);
    assets.put("t", tex);
    SceneNode& n = fixture::add_sprite(g, "s", "t", 10, 5);
    n.rotation = std::numbers::pi / 2;
    const Bitmap out = render_scene(g, assets, 20, 12);
    // Clockwise quarter turn about the origin: (u, v) -> (-v, u).
    for (int j = 0; j < 3; ++j) {
        for (int i = 0; i < 4; ++i) EXPECT_EQ(out.at(9 - j, 5 + i), tex.at(i, j)) << i << "," << j;
    }
}

TEST(Compositor, HalfAlphaRedOverWhite) {
    SceneGraph g = fixture::root_only();
    g.background = {255, 255, 255, 255};
    AssetStore assets;
    assets.put("red", fixture::solid(4, 4, {255, 0, 0, 255}));
    fixture::add_sprite(g, "s", "red", 0, 0).alpha = 0.5;
    const Bitmap out = render_scene(g, assets, 8, 8);
    EXPECT_EQ(out.at(1, 1), (Rgba{255, 128, 128, 255}));
    EXPECT_EQ(out.at(6, 6), (Rgba{255, 255, 255, 255}));
}

TEST(Compositor, AlphaMultipliesDownTheTree) {
    SceneGraph g = fixture::root_only();
    SceneNode layer;
    layer.id = "layer";
    layer.parent_id = "root";
    layer.alpha = 0.5;
    g.nodes["root"].children.push_back("layer");
    g.nodes["layer"] = layer;
    AssetStore assets;
    assets.put("a", fixture::solid(2, 2, {200, 100, 0, 255}));
    SceneNode& n = fixture::add_sprite(g, "s", "a", 0, 0, "layer");
    n.alpha = 0.5;
    EXPECT_DOUBLE_EQ(effective_alpha(g.node("s"), g), 0.25);
}

TEST(Compositor, DrawOrderFollowsTreeThenZIndex) {
    SceneGraph g = fixture::root_only();
    AssetStore assets;
    assets.put("a", fixture::solid(2, 2, {1, 2, 3, 255}));
    fixture::add_sprite(g, "first", "a", 0, 0).z_index = 5;
    fixture::add_sprite(g, "second", "a", 0, 0);
    fixture::add_sprite(g, "third", "a", 0, 0).z_index = 5;
    fixture::add_sprite(g, "hidden", "a", 0, 0).visible = false;
    EXPECT_EQ(draw_order(g), (std::vector<std::string>{"second", "first", "third"}));
}

TEST(Compositor, LaterNodesCoverEarlierOnes) {
    const SnapshotBundle b = fixture::overlap_bundle();
    EXPECT_EQ(b.screenshot.at(25, 25), (Rgba{0, 0, 255, 255}));
    EXPECT_EQ(b.screenshot.at(12, 12), (Rgba{255, 0, 0, 255}));
}

TEST(Compositor, TilingRepeatsWithOffset) {
    SceneGraph g = fixture::root_only();
    AssetStore assets;
    const Bitmap tex = oracle::random_bitmap(21, 5, 3);
    assets.put("t", tex);
    SceneNode& n = fixture::add_sprite(g, "s", "t", 0, 0);
    n.kind = NodeKind::tiling_sprite;
    n.render_size_w = 17;
    n.render_size_h = 7;
    n.tile_offset_x = -2;
    n.tile_offset_y = 1;
    const Bitmap out = render_scene(g, assets, 20, 10);
    for (int y = 0; y < 7; ++y) {
        for (int x = 0; x < 17; ++x) {
            const int i = (((x + 2) % 5) + 5) % 5;
            const int j = (((y - 1) % 3) + 3) % 3;
            EXPECT_EQ(out.at(x, y), tex.at(i, j)) << x << "," << y;
        }
    }
    EXPECT_EQ(out.at(17, 0), (Rgba{0, 0, 0, 255}));
}

TEST(Compositor, AnimatedSpritePicksFrameColumn) {
    SceneGraph g = fixture::root_only();
    AssetStore assets;
    Bitmap strip(6, 2);
    for (int y = 0; y < 2; ++y) {
        for (int x = 0; x < 6; ++x) strip.set(x, y, {static_cast<std::uint8_t>(x / 2 * 100), 0, 0, 255});
    }
    assets.put("strip", strip);
    SceneNode& n = fixture::add_sprite(g, "s", "strip", 0, 0);
    n.kind = NodeKind::animated_sprite;
    n.frame_count = 3;
    n.frame_index = 2;
    const Bitmap out = render_scene(g, assets, 4, 4);
    EXPECT_EQ(out.at(0, 0).r, 200);
    EXPECT_EQ(out.at(2, 0).r, 0);
}

TEST(Compositor, UnresolvedAssetThrows) {
    SceneGraph g = fixture::root_only();
    fixture::add_sprite(g, "s", "missing", 0, 0);
    EXPECT_THROW((void)render_scene(g, AssetStore{}, 4, 4), Error);
}

TEST(Oracle, BugFreePairsAreExactlyEqual) {
    SnapshotBundle b = fixture::overlap_bundle();
    b.cor.node("blue").rotation = 0.3;
    b.cor.node("red").scale_x = 1.5;
    b.screenshot = render_scene(b.cor, b.assets, b.canvas_w, b.canvas_h);
    const auto pairs = build_pairs(b);
    ASSERT_EQ(pairs.size(), 2u);
    for (const auto& p : pairs) {
        ASSERT_FALSE(p.skipped) << p.node_id << ": " << p.skip_reason;
        EXPECT_EQ(p.oracle, p.object) << p.node_id;
        EXPECT_GT(p.comparable_pixels, 0);
    }
}

TEST(Oracle, OccludedPixelsAreFilledInBoth) {
    const SnapshotBundle b = fixture::overlap_bundle();
    const auto pairs = build_pairs(b, {7, 8, 9, 255});
    const ImagePair& red = pairs.front();
    ASSERT_EQ(red.node_id, "red");
    EXPECT_EQ(red.crop_box, (Rect{10, 10, 20, 20}));
    EXPECT_EQ(red.comparable_pixels, 400 - 100);
    // (25, 25) lies under the blue square: local (15, 15).
    EXPECT_EQ(red.oracle.at(15, 15), (Rgba{7, 8, 9, 255}));
    EXPECT_EQ(red.object.at(15, 15), (Rgba{7, 8, 9, 255}));
    EXPECT_EQ(red.object.at(0, 0), (Rgba{255, 0, 0, 255}));
}

TEST(Oracle, ScreenshotChangeShowsUpInObjectImage) {
    SnapshotBundle b = fixture::overlap_bundle();
    b.screenshot.set(12, 12, {0, 255, 0, 255});
    const auto pairs = build_pairs(b);
    EXPECT_NE(pairs.front().oracle, pairs.front().object);
    EXPECT_EQ(pairs.back().oracle, pairs.back().object);
}

TEST(Oracle, SkipReasons) {
    SnapshotBundle b = fixture::overlap_bundle();
    b.assets.put("glass", fixture::solid(8, 8, {255, 255, 255, 128}));
    fixture::add_sprite(b.cor, "glass", "glass", 0, 0);
    fixture::add_sprite(b.cor, "away", "red", 500, 500);
    SceneNode& under = fixture::add_sprite(b.cor, "under", "red", 22, 22);
    under.z_index = -1;
    b.assets.put("small", fixture::solid(4, 4, {9, 9, 9, 255}));
    b.cor.node("under").asset_id = "small";
    b.screenshot = render_scene(b.cor, b.assets, b.canvas_w, b.canvas_h);
    std::map<std::string, std::string> reasons;
    for (const auto& p : build_pairs(b)) {
        if (p.skipped) reasons[p.node_id] = p.skip_reason;
    }
    EXPECT_EQ(reasons["glass"], "no fully opaque pixels");
    EXPECT_EQ(reasons["away"], "off-canvas");
    EXPECT_EQ(reasons["under"], "fully occluded");
    EXPECT_EQ(reasons.count("red"), 0u);
}

TEST(Oracle, MaskBitmapMarksOpaquePixels) {
    const SnapshotBundle b = fixture::overlap_bundle();
    const auto masks = compute_masks(b.cor, b.assets, b.canvas_w, b.canvas_h);
    ASSERT_EQ(masks.size(), 2u);
    EXPECT_EQ(masks[0].opaque_count, 400);
    const Bitmap m = masks[1].to_bitmap();
    EXPECT_EQ(m.at(20, 20), (Rgba{255, 255, 255, 255}));
    EXPECT_EQ(m.at(19, 20), (Rgba{0, 0, 0, 255}));
}
