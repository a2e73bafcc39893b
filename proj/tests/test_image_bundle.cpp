#include <filesystem>
#include <fstream>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "spritecheck/bundle.hpp"
#include "spritecheck/png_io.hpp"
#include "support/oracles.hpp"
#include "support/scenes.hpp"

namespace fs = std::filesystem;
using namespace spritecheck;

namespace {

fs::path scratch_dir(const std::string& name) {
    fs::path p = fs::temp_directory_path() / ("spritecheck_test_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

bool has_rule(const std::vector<Violation>& v, const std::string& rule) {
    for (const auto& x : v) {
        if (x.rule == rule) return true;
    }
    return false;
}

}  // namespace

TEST(Image, RectIntersectionIsHalfOpen) {
    EXPECT_TRUE(intersect({0, 0, 10, 10}, {10, 0, 5, 5}).empty());
    EXPECT_EQ(intersect({0, 0, 10, 10}, {5, 5, 10, 10}), (Rect{5, 5, 5, 5}));
    EXPECT_TRUE((Rect{0, 0, 4, 4}).contains(Rect{}));
}

TEST(Image, CropCopiesSubRectangle) {
    const Bitmap bm = oracle::random_bitmap(3, 16, 12, false);
    const Bitmap c = bm.crop({4, 3, 5, 6});
    ASSERT_EQ(c.width(), 5);
    ASSERT_EQ(c.height(), 6);
    for (int y = 0; y < 6; ++y) {
        for (int x = 0; x < 5; ++x) EXPECT_EQ(c.at(x, y), bm.at(x + 4, y + 3));
    }
}

TEST(Image, ToU8RoundsHalfAwayAndClamps) {
    EXPECT_EQ(to_u8(-3.0), 0);
    EXPECT_EQ(to_u8(127.5), 128);
    EXPECT_EQ(to_u8(127.49), 127);
    EXPECT_EQ(to_u8(300.0), 255);
}

TEST(Png, RoundTripPreservesEveryByte) {
    const Bitmap bm = oracle::random_bitmap(11, 37, 23, false);
    EXPECT_EQ(decode_png(encode_png(bm)), bm);
    const fs::path dir = scratch_dir("png");
    write_png(bm, dir / "a.png");
    EXPECT_EQ(read_png(dir / "a.png"), bm);
}

TEST(Png, GarbageIsRejected) {
    const std::vector<std::uint8_t> junk{1, 2, 3, 4, 5, 6, 7, 8, 9};
    EXPECT_THROW(decode_png(junk), Error);
}

TEST(Bundle, ChecksumDependsOnSizeAndBytes) {
    const Bitmap a(4, 2, {1, 2, 3, 4});
    const Bitmap b(2, 4, {1, 2, 3, 4});
    EXPECT_NE(bitmap_checksum(a), bitmap_checksum(b));
    EXPECT_EQ(bitmap_checksum(a).size(), 64u);
    EXPECT_EQ(bitmap_checksum(a), bitmap_checksum(Bitmap(4, 2, {1, 2, 3, 4})));
}

TEST(Bundle, SaveLoadRoundTrip) {
    SnapshotBundle b = fixture::overlap_bundle();
    b.timestamp = 1234;
    b.snapshot_index = 3;
    b.annotations["tick"] = "74";
    b.cor.node("blue").rotation = 0.25;
    b.cor.node("red").alpha = 0.5;
    const fs::path dir = scratch_dir("bundle_rt");
    save_bundle(b, dir / "snap");
    const SnapshotBundle back = load_bundle(dir / "snap");
    EXPECT_EQ(back, b);
}

TEST(Bundle, LoadRunSortsBySnapshotIndex) {
    const fs::path dir = scratch_dir("bundle_run");
    for (int i : {2, 0, 1}) {
        SnapshotBundle b = fixture::overlap_bundle();
        b.snapshot_index = i;
        save_bundle(b, dir / ("z" + std::to_string(2 - i)));
    }
    const auto run = load_run(dir);
    ASSERT_EQ(run.size(), 3u);
    for (int i = 0; i < 3; ++i) EXPECT_EQ(run[static_cast<std::size_t>(i)].snapshot_index, i);
}

TEST(Bundle, MissingPiecesAreReportedAsIncomplete) {
    const fs::path dir = scratch_dir("bundle_missing");
    save_bundle(fixture::overlap_bundle(), dir / "snap");
    fs::remove(dir / "snap" / "screenshot.png");
    try {
        (void)load_bundle(dir / "snap");
        FAIL() << "expected an error";
    } catch (const Error& e) {
        EXPECT_NE(std::string(e.what()).find("incomplete bundle"), std::string::npos) << e.what();
    }
    EXPECT_THROW((void)load_bundle(dir / "nowhere"), Error);
}

TEST(Bundle, TamperedAssetFailsChecksum) {
    const fs::path dir = scratch_dir("bundle_tamper");
    save_bundle(fixture::overlap_bundle(), dir / "snap");
    bool replaced = false;
    for (const auto& e : fs::recursive_directory_iterator(dir / "snap")) {
        if (e.path().filename() == "red.png") {
            write_png(Bitmap(20, 20, {255, 0, 1, 255}), e.path());
            replaced = true;
        }
    }
    ASSERT_TRUE(replaced);
    try {
        (void)load_bundle(dir / "snap");
        FAIL() << "expected an error";
    } catch (const Error& e) {
        EXPECT_NE(std::string(e.what()).find("checksum"), std::string::npos) << e.what();
    }
}

TEST(Bundle, ScreenshotSizeMustMatchCanvas) {
    SnapshotBundle b = fixture::overlap_bundle();
    b.canvas_w = 65;
    EXPECT_THROW(save_bundle(b, scratch_dir("bundle_size") / "snap"), Error);
}

TEST(Bundle, CleanSceneValidates) {
    const SnapshotBundle b = fixture::overlap_bundle();
    EXPECT_TRUE(validate_cor(b.cor, b.assets).empty());
}

TEST(Bundle, ValidationReportsEveryViolation) {
    SnapshotBundle b = fixture::overlap_bundle();
    b.cor.node("red").alpha = 1.5;
    b.cor.node("blue").asset_id = "ghost";
    b.cor.node("blue").anchor_x = 2.0;
    SceneNode orphan;
    orphan.id = "orphan";
    orphan.parent_id = "nobody";
    b.cor.nodes["orphan"] = orphan;
    const auto v = validate_cor(b.cor, b.assets);
    EXPECT_TRUE(has_rule(v, "alpha out of range"));
    EXPECT_TRUE(has_rule(v, "unknown asset"));
    EXPECT_TRUE(has_rule(v, "anchor out of range"));
    EXPECT_TRUE(has_rule(v, "unknown parent"));
}

TEST(Bundle, CyclesAndFrameBoundsAreCaught) {
    SnapshotBundle b = fixture::overlap_bundle();
    b.cor.node("red").frame_rect = Rect{10, 10, 20, 20};
    SceneNode a;
    a.id = "a";
    a.parent_id = "b";
    a.children = {"b"};
    SceneNode c;
    c.id = "b";
    c.parent_id = "a";
    c.children = {"a"};
    b.cor.nodes["a"] = a;
    b.cor.nodes["b"] = c;
    const auto v = validate_cor(b.cor, b.assets);
    EXPECT_TRUE(has_rule(v, "frame_rect out of bounds"));
    EXPECT_TRUE(has_rule(v, "unreachable node"));
}

TEST(Bundle, MalformedCorIsRejectedOnLoad) {
    const fs::path dir = scratch_dir("bundle_malformed");
    SnapshotBundle b = fixture::overlap_bundle();
    save_bundle(b, dir / "snap");
    const fs::path cor_file = dir / "snap" / "cor.json";
    nlohmann::json j;
    std::ifstream(cor_file) >> j;
    bool edited = false;
    for (auto& n : j["nodes"]) {
        if (n["id"] == "red") {
            n["alpha"] = 7.0;
            edited = true;
        }
    }
    ASSERT_TRUE(edited);
    std::ofstream(cor_file) << j.dump();
    try {
        (void)load_bundle(dir / "snap");
        FAIL() << "expected an error";
    } catch (const Error& e) {
        EXPECT_NE(std::string(e.what()).find("malformed COR"), std::string::npos) << e.what();
    }
}
