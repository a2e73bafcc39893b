#include <algorithm>
#include <map>
#include <numbers>
#include <set>

#include <gtest/gtest.h>

#include "spritecheck/bug_injector.hpp"
#include "spritecheck/oracle.hpp"
#include "spritecheck/simulator.hpp"

using namespace spritecheck;

namespace {

GameConfig config_for(std::uint64_t seed) {
    GameConfig c;
    c.seed = seed;
    return c;
}

const SceneNode* find_node(const SceneGraph& g, const std::string& id) {
    auto it = g.nodes.find(id);
    return it == g.nodes.end() ? nullptr : &it->second;
}

}  // namespace

TEST(Simulator, NewGameHasFullValidScene) {
    const GameState st = new_game(config_for(3));
    EXPECT_EQ(st.scene.nodes.size(), static_cast<std::size_t>(kSceneNodeCount));
    EXPECT_EQ(st.phase, GamePhase::title);
    EXPECT_TRUE(validate_cor(st.scene, default_asset_pack()).empty());
    for (const char* id : {"player", "fallen_log", "button", "hills", "ship", "trees", "bushes", "beach"}) {
        EXPECT_NE(find_node(st.scene, id), nullptr) << id;
    }
    EXPECT_EQ(std::count_if(st.scene.nodes.begin(), st.scene.nodes.end(),
                            [](const auto& kv) { return role_matches("log", kv.first); }),
              kProjectilePool);
}

TEST(Simulator, RejectsBadConfig) {
    GameConfig c;
    c.canvas_w = 200;
    EXPECT_THROW((void)new_game(c), Error);
    c = GameConfig{};
    c.spawn_rate = 0;
    EXPECT_THROW((void)new_game(c), Error);
    c = GameConfig{};
    c.snapshot_count = 0;
    EXPECT_THROW((void)new_game(c), Error);
}

TEST(Simulator, PhasesAdvanceAndGameEnds) {
    const GameConfig c = config_for(5);
    GameState st = new_game(c);
    std::set<GamePhase> seen{st.phase};
    bool button_hidden_while_playing = true;
    for (int guard = 0; st.phase != GamePhase::ended && guard < 20000; ++guard) {
        // Pointer parked at the left edge: projectiles elsewhere are missed.
        st = step(st, {0.0, st.tick == c.start_click_tick});
        seen.insert(st.phase);
        if (st.phase == GamePhase::playing && st.scene.node("button").visible) button_hidden_while_playing = false;
    }
    EXPECT_EQ(st.phase, GamePhase::ended);
    EXPECT_EQ(st.lives, 0);
    EXPECT_EQ(seen.size(), 4u);
    EXPECT_TRUE(button_hidden_while_playing);
    EXPECT_THROW((void)step(st, {}), Error);
}

TEST(Simulator, ScriptedInputIsATriangleSweep) {
    const GameConfig c;
    EXPECT_TRUE(scripted_input(c, c.start_click_tick).click);
    EXPECT_FALSE(scripted_input(c, c.start_click_tick + 1).click);
    EXPECT_DOUBLE_EQ(scripted_input(c, 0).x, 80.0);
    EXPECT_DOUBLE_EQ(scripted_input(c, 110).x, c.canvas_w - 80.0);
    EXPECT_DOUBLE_EQ(scripted_input(c, 220).x, 80.0);
}

TEST(Simulator, SnapshotTicksSpanTheRun) {
    EXPECT_EQ(snapshot_ticks(90, 10), (std::vector<int>{0, 10, 20, 30, 40, 50, 60, 70, 80, 90}));
    EXPECT_EQ(snapshot_ticks(7, 1), (std::vector<int>{7}));
    const auto t = snapshot_ticks(201, 4);
    EXPECT_EQ(t, (std::vector<int>{0, 67, 134, 201}));
}

TEST(Simulator, RunProducesCompleteConsistentBundles) {
    const GameConfig c = config_for(11);
    const auto run = run_test_case(c);
    ASSERT_EQ(run.size(), 10u);
    int last_tick = -1;
    for (std::size_t i = 0; i < run.size(); ++i) {
        const auto& b = run[i];
        EXPECT_EQ(b.snapshot_index, static_cast<int>(i));
        EXPECT_EQ(b.run_id, run_id_for(c));
        EXPECT_TRUE(validate_cor(b.cor, b.assets).empty());
        EXPECT_EQ(b.screenshot, render_scene(b.cor, b.assets, b.canvas_w, b.canvas_h));
        const int tick = std::stoi(b.annotations.at("tick"));
        EXPECT_GT(tick, last_tick);
        EXPECT_EQ(b.timestamp, tick * 1000LL / c.frame_rate);
        last_tick = tick;
        for (const auto& p : build_pairs(b)) {
            if (!p.skipped) EXPECT_EQ(p.oracle, p.object) << p.node_id << " in snapshot " << i;
        }
    }
    EXPECT_EQ(run.back().annotations.at("phase"), "life_lost");
}

TEST(Simulator, SameSeedSameRunDifferentSeedDifferentRun) {
    const auto a = run_test_case(config_for(21));
    const auto b = run_test_case(config_for(21));
    const auto c = run_test_case(config_for(22));
    EXPECT_EQ(a, b);
    bool differs = a.size() != c.size();
    for (std::size_t i = 0; !differs && i < a.size(); ++i) differs = a[i].screenshot != c[i].screenshot;
    EXPECT_TRUE(differs);
}

TEST(Simulator, AnimationFramesAdvanceWhilePlaying) {
    const auto run = run_test_case(config_for(4));
    std::set<int> frames;
    for (const auto& b : run) frames.insert(b.cor.node("fallen_log").frame_index.value_or(-1));
    EXPECT_GT(frames.size(), 1u);
}

TEST(BugCatalog, TwentyFourBugsSixPerTypeInKeyOrder) {
    const auto bugs = list_bugs();
    ASSERT_EQ(bugs.size(), 24u);
    std::map<BugType, int> per_type;
    std::vector<std::string> keys;
    for (const auto& b : bugs) {
        ++per_type[b.type];
        keys.push_back(b.key);
        EXPECT_FALSE(b.targets.empty()) << b.key;
        EXPECT_FALSE(b.description.empty()) << b.key;
        EXPECT_EQ(find_bug(b.key), b);
    }
    for (BugType t : {BugType::state, BugType::appearance, BugType::layout, BugType::rendering}) {
        EXPECT_EQ(per_type[t], 6) << to_string(t);
    }
    const std::vector<std::string> expected{"S1", "S2", "S3", "S4", "S5", "S6", "A1", "A2", "A3", "A4", "A5", "A6",
                                            "L1", "L2", "L3", "L4", "L5", "L6", "R1", "R2", "R3", "R4", "R5", "R6"};
    EXPECT_EQ(keys, expected);
    EXPECT_THROW((void)find_bug("Z9"), Error);
}

TEST(BugCatalog, RoleMatching) {
    EXPECT_TRUE(role_matches("log", "log"));
    EXPECT_TRUE(role_matches("log", "log_4"));
    EXPECT_FALSE(role_matches("log", "fallen_log"));
    EXPECT_FALSE(role_matches("log", "log_"));
    EXPECT_FALSE(role_matches("log", "log_x"));
}

TEST(BugCatalog, ColorMapsAndLuma) {
    const Rgba c{10, 20, 30, 40};
    EXPECT_EQ(apply_color_map(ColorMap::identity, c), c);
    EXPECT_EQ(apply_color_map(ColorMap::swap_red_blue, c), (Rgba{30, 20, 10, 40}));
    EXPECT_EQ(apply_color_map(ColorMap::swap_red_green, c), (Rgba{20, 10, 30, 40}));
    EXPECT_EQ(apply_color_map(ColorMap::invert, c), (Rgba{245, 235, 225, 40}));
    EXPECT_EQ(luma({255, 255, 255, 255}), 255);
    EXPECT_EQ(luma({100, 0, 0, 255}), 30);
}

TEST(BugInjection, CorAndAssetsStayClean) {
    const GameConfig c = config_for(8);
    const auto clean = run_test_case(c);
    for (const char* key : {"S1", "A1", "L1", "L5", "R1", "S6"}) {
        const auto hook = make_hook(find_bug(key));
        const auto buggy = run_test_case(c, hook.get());
        ASSERT_EQ(buggy.size(), clean.size()) << key;
        bool screen_changed = false;
        for (std::size_t i = 0; i < clean.size(); ++i) {
            EXPECT_EQ(buggy[i].cor, clean[i].cor) << key;
            EXPECT_EQ(buggy[i].assets, clean[i].assets) << key;
            screen_changed = screen_changed || buggy[i].screenshot != clean[i].screenshot;
        }
        EXPECT_TRUE(screen_changed) << key;
    }
}

TEST(BugInjection, Deterministic) {
    const GameConfig c = config_for(12);
    for (const char* key : {"R1", "R4", "R5"}) {
        const auto hook = make_hook(find_bug(key));
        EXPECT_EQ(run_test_case(c, hook.get()), run_test_case(c, hook.get())) << key;
    }
}

TEST(BugInjection, SuppressedDrawMatchesHiddenNode) {
    const GameConfig c = config_for(2);
    GameState st = new_game(c);
    const auto hook = make_hook(find_bug("S1"));
    const Bitmap buggy = render_scene(st.scene, c.assets(), c.canvas_w, c.canvas_h, hook.get());
    st.scene.node("player").visible = false;
    EXPECT_EQ(buggy, render_scene(st.scene, c.assets(), c.canvas_w, c.canvas_h));
}

TEST(BugInjection, RotationOffsetEditsOnlyTheDrawnCopy) {
    const GameState st = new_game(config_for(2));
    const BugHook hook(find_bug("L4"));
    SceneNode player = st.scene.node("player");
    std::optional<Bitmap> substitute;
    EXPECT_TRUE(hook.prepare(st.scene, player, Bitmap(1, 1), substitute));
    EXPECT_DOUBLE_EQ(player.rotation, st.scene.node("player").rotation + std::numbers::pi / 8);
    EXPECT_FALSE(substitute.has_value());
    SceneNode ship = st.scene.node("ship");
    EXPECT_TRUE(hook.prepare(st.scene, ship, Bitmap(1, 1), substitute));
    EXPECT_EQ(ship, st.scene.node("ship"));
}

TEST(BugInjection, GrayscaleSubstituteUsesLuma) {
    const GameState st = new_game(config_for(2));
    const BugHook hook(find_bug("A3"));
    const Bitmap& asset = default_asset_pack().find("player")->image;
    SceneNode player = st.scene.node("player");
    std::optional<Bitmap> substitute;
    ASSERT_TRUE(hook.prepare(st.scene, player, asset, substitute));
    ASSERT_TRUE(substitute.has_value());
    ASSERT_EQ(substitute->width(), asset.width());
    for (int y = 0; y < asset.height(); y += 3) {
        for (int x = 0; x < asset.width(); x += 3) {
            const Rgba o = asset.at(x, y);
            const Rgba g = substitute->at(x, y);
            EXPECT_EQ(g.a, o.a);
            if (o.a == 0) continue;
            EXPECT_EQ(g.r, luma(o));
            EXPECT_EQ(g.g, luma(o));
            EXPECT_EQ(g.b, luma(o));
        }
    }
}

TEST(BugInjection, TearingIsACyclicRowShift) {
    BugSpec spec = find_bug("R6");
    spec.targets = {"n"};
    spec.magnitude.band_y = 1;
    spec.magnitude.band_h = 2;
    spec.magnitude.shift = 3;
    const BugHook hook(spec);
    RenderLayer layer("n", 0, 10, 10, {2, 2, 5, 4});
    for (int y = 2; y < 6; ++y) {
        for (int x = 2; x < 7; ++x) {
            float* p = layer.premul(x, y);
            p[0] = static_cast<float>(x * 10 + y);
            p[3] = 1.0f;
        }
    }
    const RenderLayer before = layer;
    hook.post_draw(SceneGraph{}, SceneNode{.id = "n"}, layer);
    for (int y = 2; y < 6; ++y) {
        std::multiset<float> a, b;
        for (int x = 2; x < 7; ++x) {
            a.insert(before.premul(x, y)[0]);
            b.insert(layer.premul(x, y)[0]);
        }
        EXPECT_EQ(a, b) << "row " << y;
        const bool in_band = y == 3 || y == 4;
        EXPECT_EQ(layer.premul(2, y)[0] != before.premul(2, y)[0], in_band) << "row " << y;
    }
    EXPECT_EQ(layer.premul(5, 3)[0], before.premul(2, 3)[0]);
}

TEST(BugInjection, ZeroMagnitudesAreIneffective) {
    const GameConfig c = config_for(7);
    BugSpec identity = find_bug("A2");
    identity.magnitude.color_map = ColorMap::identity;
    try {
        (void)verify_visibility(identity, c);
        FAIL() << "identity colour map must be ineffective";
    } catch (const Error& e) {
        EXPECT_EQ(std::string(e.what()), "ineffective bug magnitude: A2");
    }
    BugSpec flat = find_bug("R6");
    flat.magnitude.band_h = 0;
    EXPECT_THROW((void)verify_visibility(flat, c), Error);
}

TEST(BugInjection, CatalogBugsAreVisible) {
    const GameConfig c = config_for(7);
    for (const char* key : {"S4", "A5", "L3", "R2"}) {
        const VisibilityReport r = verify_visibility(find_bug(key), c);
        EXPECT_TRUE(r.effective) << key;
        EXPECT_FALSE(r.diffs.empty()) << key;
    }
}
