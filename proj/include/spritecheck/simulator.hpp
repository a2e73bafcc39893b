#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "spritecheck/bundle.hpp"
#include "spritecheck/compositor.hpp"
#include "spritecheck/rng.hpp"

namespace spritecheck {

// Sub-rectangles of the generated sprites that some appearance bugs recolour.
// Rects are relative to one frame of the named asset.
struct ContentManifest {
    Rect player_frame{0, 0, 96, 128};
    int player_frames = 4;
    Rect beard{30, 44, 36, 26};
    Rect sail{62, 8, 70, 62};
    Rect fallen_log_frame{0, 0, 96, 48};
    int fallen_log_frames = 4;
};

const ContentManifest& content_manifest();

// The procedurally drawn asset pack of the test game.
const AssetStore& default_asset_pack();

struct GameConfig {
    int canvas_w = 1280;
    int canvas_h = 720;
    std::uint64_t seed = 1;
    int frame_rate = 60;
    int snapshot_count = 10;
    double player_speed = 9.0;  // px per tick
    double spawn_rate = 1.2;    // expected projectiles per second
    int start_click_tick = 30;
    int tick_cap = 3600;
    // Null selects default_asset_pack().
    std::shared_ptr<const AssetStore> asset_pack;

    [[nodiscard]] const AssetStore& assets() const { return asset_pack ? *asset_pack : default_asset_pack(); }
};

enum class GamePhase { title, playing, life_lost, ended };
std::string to_string(GamePhase phase);

struct Projectile {
    bool active = false;
    double x = 0.0;
    double y = 0.0;
    double vy = 0.0;
    double rotation = 0.0;
    double spin = 0.0;

    friend bool operator==(const Projectile&, const Projectile&) = default;
};

struct GameState {
    GameConfig config;
    GamePhase phase = GamePhase::title;
    int tick = 0;
    SceneGraph scene;
    SplitMix64 rng;
    int lives = 3;
    int caught = 0;
    double player_x = 0.0;
    int next_spawn_tick = 0;
    int phase_entered_tick = 0;
    std::vector<Projectile> projectiles;
    std::vector<int> cloud_x0;
    int ship_x0 = 0;
};

struct PointerInput {
    double x = 0.0;
    bool click = false;
};

inline constexpr int kProjectilePool = 6;
// root, 3 layer containers, 10 background nodes, fallen log, player, 6 logs, button.
inline constexpr int kSceneNodeCount = 23;

GameState new_game(const GameConfig& config);
GameState step(const GameState& state, const PointerInput& input);

// Freeze: the COR copy and the screenshot come from the same tick.
SnapshotBundle take_snapshot(const GameState& state, const AssetStore& assets, const RenderHook* hook = nullptr,
                             int snapshot_index = 0);

// Scripted input: click at start_click_tick, then a triangle-wave sweep.
PointerInput scripted_input(const GameConfig& config, int tick);

// Ticks at which run_test_case snapshots, given the run's final tick.
std::vector<int> snapshot_ticks(int final_tick, int snapshot_count);

std::vector<SnapshotBundle> run_test_case(const GameConfig& config, const RenderHook* hook = nullptr);

std::string run_id_for(const GameConfig& config);

}  // namespace spritecheck
