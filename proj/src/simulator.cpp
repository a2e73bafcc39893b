#include "spritecheck/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace spritecheck {

namespace {

// Hard-edged drawing helpers. Every drawn pixel is fully opaque so sprite
// edges stay crisp under the integer-translation fast path.
class Painter {
public:
    explicit Painter(Bitmap& target) : bm_(target) {}

    void rect(int x, int y, int w, int h, Rgba c, const Rect* clip = nullptr) {
        for (int j = y; j < y + h; ++j) {
            for (int i = x; i < x + w; ++i) put(i, j, c, clip);
        }
    }

    void ellipse(double cx, double cy, double rx, double ry, Rgba c, const Rect* clip = nullptr) {
        const int x0 = static_cast<int>(std::floor(cx - rx));
        const int x1 = static_cast<int>(std::ceil(cx + rx));
        const int y0 = static_cast<int>(std::floor(cy - ry));
        const int y1 = static_cast<int>(std::ceil(cy + ry));
        for (int j = y0; j <= y1; ++j) {
            for (int i = x0; i <= x1; ++i) {
                const double u = (i + 0.5 - cx) / rx;
                const double v = (j + 0.5 - cy) / ry;
                if (u * u + v * v <= 1.0) put(i, j, c, clip);
            }
        }
    }

    void triangle(double ax, double ay, double bx, double by, double cx, double cy, Rgba c) {
        const int x0 = static_cast<int>(std::floor(std::min({ax, bx, cx})));
        const int x1 = static_cast<int>(std::ceil(std::max({ax, bx, cx})));
        const int y0 = static_cast<int>(std::floor(std::min({ay, by, cy})));
        const int y1 = static_cast<int>(std::ceil(std::max({ay, by, cy})));
        auto edge = [](double px, double py, double qx, double qy, double x, double y) {
            return (qx - px) * (y - py) - (qy - py) * (x - px);
        };
        for (int j = y0; j <= y1; ++j) {
            for (int i = x0; i <= x1; ++i) {
                const double x = i + 0.5;
                const double y = j + 0.5;
                const double e0 = edge(ax, ay, bx, by, x, y);
                const double e1 = edge(bx, by, cx, cy, x, y);
                const double e2 = edge(cx, cy, ax, ay, x, y);
                if ((e0 >= 0 && e1 >= 0 && e2 >= 0) || (e0 <= 0 && e1 <= 0 && e2 <= 0)) put(i, j, c, nullptr);
            }
        }
    }

    // Deterministic brightness jitter on opaque pixels, for texture.
    void speckle(std::uint64_t seed, int amplitude) {
        for (int j = 0; j < bm_.height(); ++j) {
            for (int i = 0; i < bm_.width(); ++i) {
                Rgba p = bm_.at(i, j);
                if (p.a == 0) continue;
                const int d = static_cast<int>(hash_mix(seed, static_cast<std::uint64_t>(i), static_cast<std::uint64_t>(j)) %
                                               static_cast<std::uint64_t>(2 * amplitude + 1)) - amplitude;
                p.r = static_cast<std::uint8_t>(std::clamp(p.r + d, 0, 255));
                p.g = static_cast<std::uint8_t>(std::clamp(p.g + d, 0, 255));
                p.b = static_cast<std::uint8_t>(std::clamp(p.b + d, 0, 255));
                bm_.set(i, j, p);
            }
        }
    }

private:
    void put(int i, int j, Rgba c, const Rect* clip) {
        if (i < 0 || j < 0 || i >= bm_.width() || j >= bm_.height()) return;
        if (clip && !clip->contains(i, j)) return;
        bm_.set(i, j, c);
    }

    Bitmap& bm_;
};

Rgba shade(Rgba c, int delta) {
    return {static_cast<std::uint8_t>(std::clamp(c.r + delta, 0, 255)),
            static_cast<std::uint8_t>(std::clamp(c.g + delta, 0, 255)),
            static_cast<std::uint8_t>(std::clamp(c.b + delta, 0, 255)), c.a};
}

Bitmap draw_cloud() {
    Bitmap bm(160, 64);
    Painter p(bm);
    const Rgba shadow{214, 222, 236, 255};
    const Rgba white{250, 250, 252, 255};
    p.ellipse(50, 40, 40, 20, shadow);
    p.ellipse(92, 34, 44, 26, shadow);
    p.ellipse(126, 42, 30, 18, shadow);
    p.ellipse(50, 36, 38, 18, white);
    p.ellipse(92, 29, 42, 24, white);
    p.ellipse(124, 38, 28, 16, white);
    p.speckle(11, 3);
    return bm;
}

Bitmap draw_hills() {
    const int w = 320;
    const int h = 360;
    Bitmap bm(w, h);
    const double tau = 2.0 * std::numbers::pi;
    for (int x = 0; x < w; ++x) {
        const double ridge = 80.0 + 36.0 * std::sin(tau * x / w) + 16.0 * std::sin(tau * 3.0 * x / w + 1.0);
        for (int y = 0; y < h; ++y) {
            if (y < ridge) continue;
            const int depth = static_cast<int>((y - ridge) / 24.0);
            Rgba c{86, 150, 72, 255};
            c = shade(c, -6 * depth);
            if (((x + y / 2) / 20) % 2 == 0) c = shade(c, 10);
            bm.set(x, y, c);
        }
    }
    Painter(bm).speckle(12, 4);
    return bm;
}

Bitmap draw_ship(const ContentManifest& m) {
    Bitmap bm(180, 120);
    Painter p(bm);
    const Rgba hull{120, 72, 40, 255};
    for (int y = 80; y < 112; ++y) {
        const int inset = (y - 80) * 3 / 4;
        const Rgba c = ((y - 80) / 8) % 2 ? shade(hull, -18) : hull;
        p.rect(8 + inset, y, 164 - 2 * inset, 1, c);
    }
    p.triangle(8, 80, 0, 64, 20, 80, hull);
    p.triangle(172, 80, 180, 60, 160, 80, hull);
    for (int i = 0; i < 5; ++i) p.ellipse(38 + 26 * i, 88, 7, 7, Rgba{226, 190, 60, 255});
    p.rect(94, 4, 6, 78, Rgba{80, 50, 30, 255});
    const Rect& s = m.sail;
    for (int y = s.y; y < s.bottom(); ++y) {
        const Rgba c = ((y - s.y) / 12) % 2 ? Rgba{200, 40, 40, 255} : Rgba{245, 240, 230, 255};
        p.rect(s.x, y, s.w, 1, c);
    }
    p.triangle(100, 0, 100, 10, 118, 5, Rgba{40, 90, 200, 255});
    p.speckle(13, 3);
    return bm;
}

Bitmap draw_trees() {
    Bitmap bm(240, 260);
    Painter p(bm);
    auto tree = [&](double cx, double top, double scale, Rgba leaf) {
        p.rect(static_cast<int>(cx) - 8, 180, 16, 80, Rgba{96, 64, 38, 255});
        for (int k = 0; k < 3; ++k) {
            const double y = top + k * 45.0 * scale;
            const double half = (38.0 + 14.0 * k) * scale;
            p.triangle(cx, y, cx - half, y + 70.0 * scale, cx + half, y + 70.0 * scale, shade(leaf, -12 * k));
        }
    };
    tree(60, 20, 1.0, Rgba{34, 112, 52, 255});
    tree(182, 50, 0.85, Rgba{46, 126, 60, 255});
    p.speckle(14, 5);
    return bm;
}

Bitmap draw_bunny() {
    Bitmap bm(48, 56);
    Painter p(bm);
    const Rgba fur{160, 140, 120, 255};
    p.rect(17, 2, 5, 16, fur);
    p.rect(27, 2, 5, 16, fur);
    p.rect(18, 4, 3, 10, Rgba{230, 170, 170, 255});
    p.ellipse(24, 40, 16, 14, fur);
    p.ellipse(26, 22, 11, 10, shade(fur, 10));
    p.ellipse(9, 44, 5, 5, Rgba{245, 245, 245, 255});
    p.rect(29, 19, 3, 3, Rgba{20, 20, 20, 255});
    p.speckle(15, 3);
    return bm;
}

Bitmap draw_bushes() {
    const int w = 200;
    Bitmap bm(w, 110);
    Painter p(bm);
    const Rgba leaf{42, 104, 44, 255};
    p.rect(0, 86, w, 24, shade(leaf, -10));
    p.ellipse(30, 74, 40, 40, leaf);
    p.ellipse(96, 64, 50, 50, shade(leaf, 8));
    p.ellipse(162, 76, 42, 36, shade(leaf, -4));
    p.ellipse(230, 74, 40, 40, leaf);  // wraps with the first bush
    p.ellipse(-30, 76, 42, 36, shade(leaf, -4));
    for (int i = 0; i < 14; ++i) {
        const auto h = hash_mix(16, static_cast<std::uint64_t>(i));
        const double x = 10 + static_cast<double>(h % 180);
        const double y = 40 + static_cast<double>((h >> 20) % 60);
        if (bm.at(static_cast<int>(x), static_cast<int>(y)).a) p.ellipse(x, y, 3, 3, Rgba{196, 34, 48, 255});
    }
    p.speckle(17, 5);
    return bm;
}

Bitmap draw_beach() {
    const int w = 256;
    const int h = 96;
    Bitmap bm(w, h);
    const double tau = 2.0 * std::numbers::pi;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            Rgba c{222, 198, 142, 255};
            c = shade(c, -(y / 16) * 5);
            const double foam = 6.0 + 4.0 * std::sin(tau * 2.0 * x / w);
            if (y < foam) c = Rgba{236, 240, 236, 255};
            bm.set(x, y, c);
        }
    }
    Painter p(bm);
    for (int i = 0; i < 40; ++i) {
        const auto r = hash_mix(18, static_cast<std::uint64_t>(i));
        const double x = static_cast<double>(r % w);
        const double y = 16 + static_cast<double>((r >> 16) % (h - 24));
        const double rad = 2 + static_cast<double>((r >> 32) % 5);
        const Rgba c = (r >> 40) % 2 ? Rgba{150, 140, 130, 255} : Rgba{172, 130, 90, 255};
        p.ellipse(x, y, rad + 1, rad, c);
        p.ellipse(x - w, y, rad + 1, rad, c);  // keeps the tile seamless
        p.ellipse(x + w, y, rad + 1, rad, c);
    }
    p.speckle(19, 4);
    return bm;
}

Bitmap draw_player(const ContentManifest& m) {
    const int fw = m.player_frame.w;
    Bitmap bm(fw * m.player_frames, m.player_frame.h);
    Painter p(bm);
    const int swing[] = {0, 7, 0, -7};
    for (int f = 0; f < m.player_frames; ++f) {
        const int ox = f * fw;
        const Rgba skin{240, 200, 160, 255};
        p.rect(ox + 34 + swing[f], 100, 11, 28, Rgba{90, 60, 40, 255});
        p.rect(ox + 52 - swing[f], 100, 11, 28, Rgba{90, 60, 40, 255});
        p.rect(ox + 26, 62, 44, 40, Rgba{40, 70, 160, 255});
        p.rect(ox + 26, 88, 44, 5, Rgba{110, 80, 40, 255});
        p.rect(ox + 14, 64 + swing[f] / 2, 12, 30, skin);
        p.rect(ox + 70, 64 - swing[f] / 2, 12, 30, skin);
        p.ellipse(ox + 48, 40, 17, 18, skin);
        p.ellipse(ox + 48, 26, 21, 14, Rgba{150, 150, 160, 255});
        p.rect(ox + 27, 26, 42, 8, Rgba{150, 150, 160, 255});
        p.triangle(ox + 28, 24, ox + 16, 4, ox + 34, 18, Rgba{245, 240, 225, 255});
        p.triangle(ox + 68, 24, ox + 80, 4, ox + 62, 18, Rgba{245, 240, 225, 255});
        p.rect(ox + 40, 37, 4, 4, Rgba{20, 20, 20, 255});
        p.rect(ox + 53, 37, 4, 4, Rgba{20, 20, 20, 255});
        const Rect beard{ox + m.beard.x, m.beard.y, m.beard.w, m.beard.h};
        p.ellipse(ox + 48, 54, 18, 16, Rgba{204, 108, 36, 255}, &beard);
        p.rect(ox + 44, 50, 9, 3, Rgba{150, 60, 40, 255});
    }
    p.speckle(20, 3);
    return bm;
}

Bitmap draw_log() {
    Bitmap bm(72, 28);
    Painter p(bm);
    p.rect(8, 2, 56, 24, Rgba{140, 90, 50, 255});
    for (int y = 6; y < 26; y += 6) p.rect(10, y, 52, 2, Rgba{112, 70, 38, 255});
    p.ellipse(8, 14, 7, 12, Rgba{204, 164, 112, 255});
    p.ellipse(8, 14, 3, 6, Rgba{160, 120, 80, 255});
    p.ellipse(64, 14, 7, 12, Rgba{124, 80, 44, 255});
    p.speckle(21, 3);
    return bm;
}

Bitmap draw_fallen_log(const ContentManifest& m) {
    const int fw = m.fallen_log_frame.w;
    Bitmap bm(fw * m.fallen_log_frames, m.fallen_log_frame.h);
    Painter p(bm);
    const int flame[] = {14, 20, 11, 17};
    for (int f = 0; f < m.fallen_log_frames; ++f) {
        const int ox = f * fw;
        p.rect(ox + 8, 34, 80, 12, Rgba{120, 78, 44, 255});
        p.rect(ox + 18, 24, 60, 11, Rgba{138, 92, 52, 255});
        p.ellipse(ox + 10, 40, 5, 6, Rgba{204, 164, 112, 255});
        p.ellipse(ox + 20, 29, 4, 5, Rgba{204, 164, 112, 255});
        const double top = 24.0 - flame[f];
        p.triangle(ox + 34, 24, ox + 62, 24, ox + 46 + (f % 2) * 4, top, Rgba{240, 120, 30, 255});
        p.triangle(ox + 40, 24, ox + 56, 24, ox + 48 - (f % 2) * 3, top + 6, Rgba{252, 214, 60, 255});
        p.ellipse(ox + 30 + 9 * f, 6 + 3 * (f % 2), 2, 2, Rgba{255, 180, 60, 255});
    }
    p.speckle(22, 3);
    return bm;
}

Bitmap draw_button() {
    Bitmap bm(240, 80);
    Painter p(bm);
    const Rgba rim{170, 120, 20, 255};
    const Rgba face{232, 184, 44, 255};
    p.rect(30, 0, 180, 80, rim);
    p.ellipse(30, 40, 30, 40, rim);
    p.ellipse(210, 40, 30, 40, rim);
    p.rect(30, 5, 180, 70, face);
    p.ellipse(30, 40, 25, 35, face);
    p.ellipse(210, 40, 25, 35, face);
    p.triangle(64, 22, 64, 58, 94, 40, Rgba{70, 44, 20, 255});
    for (int k = 0; k < 4; ++k) p.rect(112 + 24 * k, 28, 16, 24, Rgba{70, 44, 20, 255});
    p.speckle(23, 2);
    return bm;
}

AssetStore build_asset_pack() {
    const ContentManifest& m = content_manifest();
    AssetStore store;
    const std::string base = "asset://spritecheck/";
    store.put("cloud", draw_cloud(), base + "cloud.png");
    store.put("hills", draw_hills(), base + "hills.png");
    store.put("ship", draw_ship(m), base + "ship.png");
    store.put("trees", draw_trees(), base + "trees.png");
    store.put("bunny", draw_bunny(), base + "bunny.png");
    store.put("bushes", draw_bushes(), base + "bushes.png");
    store.put("beach", draw_beach(), base + "beach.png");
    store.put("player", draw_player(m), base + "player.png");
    store.put("log", draw_log(), base + "log.png");
    store.put("fallen_log", draw_fallen_log(m), base + "fallen_log.png");
    store.put("button", draw_button(), base + "button.png");
    return store;
}

// Layout, derived from the canvas size.
struct Layout {
    int w;
    int h;
    int hills_y;
    int trees_y;
    int ship_y;
    int bunny_y;
    int bushes_y;
    int beach_y;
    int player_y;
    double catch_y;
    double ground_y;

    explicit Layout(const GameConfig& c)
        : w(c.canvas_w),
          h(c.canvas_h),
          hills_y(c.canvas_h * 30 / 100),
          trees_y(c.canvas_h * 46 / 100),
          ship_y(c.canvas_h * 35 / 100),
          bunny_y(c.canvas_h - 220),
          bushes_y(c.canvas_h - 186),
          beach_y(c.canvas_h - 96),
          player_y(c.canvas_h - 168),
          catch_y(c.canvas_h - 160.0),
          ground_y(c.canvas_h - 40.0) {}
};

int wrap(int v, int period) {
    const int m = v % period;
    return m < 0 ? m + period : m;
}

SceneNode make_node(const std::string& id, const std::string& parent, NodeKind kind, int z) {
    SceneNode n;
    n.id = id;
    n.parent_id = parent;
    n.kind = kind;
    n.z_index = z;
    return n;
}

void add(SceneGraph& scene, SceneNode n) {
    if (n.parent_id) scene.node(*n.parent_id).children.push_back(n.id);
    scene.nodes.emplace(n.id, std::move(n));
}

SceneGraph build_scene(const GameConfig& config, const AssetStore& assets) {
    const Layout l(config);
    SceneGraph s;
    s.root_id = "root";
    SceneNode root;
    root.id = "root";
    s.nodes.emplace("root", root);
    add(s, make_node("background", "root", NodeKind::container, 0));
    add(s, make_node("game", "root", NodeKind::container, 1));
    add(s, make_node("ui", "root", NodeKind::container, 2));

    for (int i = 0; i < 3; ++i) {
        SceneNode n = make_node("cloud_" + std::to_string(i), "background", NodeKind::sprite, 0);
        n.asset_id = "cloud";
        add(s, n);
    }
    auto tiling = [&](const std::string& id, int z, int y) {
        SceneNode n = make_node(id, "background", NodeKind::tiling_sprite, z);
        n.asset_id = id;
        n.y = y;
        n.render_size_w = l.w;
        n.render_size_h = assets.find(id) ? assets.find(id)->image.height() : 0;
        add(s, n);
    };
    tiling("hills", 1, l.hills_y);
    SceneNode ship = make_node("ship", "background", NodeKind::sprite, 2);
    ship.asset_id = "ship";
    ship.y = l.ship_y;
    add(s, ship);
    tiling("trees", 3, l.trees_y);
    for (int i = 0; i < 2; ++i) {
        SceneNode n = make_node("bunny_" + std::to_string(i), "background", NodeKind::sprite, 4);
        n.asset_id = "bunny";
        n.y = l.bunny_y;
        add(s, n);
    }
    tiling("bushes", 5, l.bushes_y);
    tiling("beach", 6, l.beach_y);

    SceneNode fallen = make_node("fallen_log", "game", NodeKind::animated_sprite, 0);
    fallen.asset_id = "fallen_log";
    fallen.frame_count = content_manifest().fallen_log_frames;
    fallen.frame_index = 0;
    fallen.x = l.w - 150;
    fallen.y = l.h - 88;
    add(s, fallen);
    SceneNode player = make_node("player", "game", NodeKind::animated_sprite, 1);
    player.asset_id = "player";
    player.frame_count = content_manifest().player_frames;
    player.frame_index = 0;
    player.y = l.player_y;
    add(s, player);
    for (int i = 0; i < kProjectilePool; ++i) {
        SceneNode n = make_node("log_" + std::to_string(i), "game", NodeKind::sprite, 2);
        n.asset_id = "log";
        n.anchor_x = 0.5;
        n.anchor_y = 0.5;
        n.visible = false;
        add(s, n);
    }
    SceneNode button = make_node("button", "ui", NodeKind::sprite, 0);
    button.asset_id = "button";
    button.x = l.w / 2 - 120;
    button.y = l.h / 2 - 40;
    add(s, button);
    return s;
}

// Writes every time-dependent node property from the state.
void sync_scene(GameState& st) {
    const Layout l(st.config);
    SceneGraph& s = st.scene;
    const int t = st.tick;
    const int cloud_period = l.w + 320;
    for (int i = 0; i < 3; ++i) {
        SceneNode& n = s.node("cloud_" + std::to_string(i));
        n.x = wrap(st.cloud_x0[static_cast<std::size_t>(i)] - t / 2, cloud_period) - 160;
    }
    s.node("hills").tile_offset_x = -(t / 4);
    s.node("trees").tile_offset_x = -(t / 2);
    s.node("bushes").tile_offset_x = -t;
    s.node("beach").tile_offset_x = -(3 * t / 2);
    s.node("ship").x = wrap(st.ship_x0 + t / 3, l.w + 200) - 180;
    s.node("fallen_log").frame_index = (t / 8) % content_manifest().fallen_log_frames;
    SceneNode& player = s.node("player");
    player.x = std::lround(st.player_x) - content_manifest().player_frame.w / 2;
    player.frame_index = st.phase == GamePhase::playing ? (t / 6) % content_manifest().player_frames : 0;
    for (int i = 0; i < kProjectilePool; ++i) {
        const Projectile& p = st.projectiles[static_cast<std::size_t>(i)];
        SceneNode& n = s.node("log_" + std::to_string(i));
        n.visible = p.active;
        n.x = p.x;
        n.y = p.y;
        n.rotation = p.rotation;
    }
    s.node("button").visible = st.phase == GamePhase::title;
}

}  // namespace

const ContentManifest& content_manifest() {
    static const ContentManifest m;
    return m;
}

const AssetStore& default_asset_pack() {
    static const AssetStore pack = build_asset_pack();
    return pack;
}

std::string to_string(GamePhase phase) {
    switch (phase) {
        case GamePhase::title: return "title";
        case GamePhase::playing: return "playing";
        case GamePhase::life_lost: return "life_lost";
        case GamePhase::ended: return "ended";
    }
    return "unknown";
}

std::string run_id_for(const GameConfig& config) { return "seed-" + std::to_string(config.seed); }

GameState new_game(const GameConfig& config) {
    if (config.canvas_w < 320 || config.canvas_h < 240) throw Error("canvas must be at least 320x240");
    if (config.frame_rate <= 0) throw Error("frame_rate must be positive");
    if (config.snapshot_count <= 0) throw Error("snapshot_count must be positive");
    if (!(config.spawn_rate > 0.0) || !(config.player_speed > 0.0)) throw Error("rates must be positive");
    const Layout l(config);
    GameState st;
    st.config = config;
    st.rng = SplitMix64(config.seed);
    st.scene = build_scene(config, config.assets());
    st.player_x = l.w / 2.0;
    st.projectiles.resize(kProjectilePool);
    for (int i = 0; i < 3; ++i) {
        st.cloud_x0.push_back(static_cast<int>(st.rng.below(static_cast<std::uint64_t>(l.w + 320))));
        st.scene.node("cloud_" + std::to_string(i)).y = 20 + static_cast<int>(st.rng.below(static_cast<std::uint64_t>(l.h / 6)));
    }
    st.ship_x0 = static_cast<int>(st.rng.below(static_cast<std::uint64_t>(l.w + 200)));
    for (int i = 0; i < 2; ++i) {
        st.scene.node("bunny_" + std::to_string(i)).x = 40 + static_cast<int>(st.rng.below(static_cast<std::uint64_t>(l.w - 90)));
    }
    sync_scene(st);
    return st;
}

GameState step(const GameState& state, const PointerInput& input) {
    if (state.phase == GamePhase::ended) throw Error("step: game has ended");
    GameState st = state;
    const Layout l(st.config);
    const int t = st.tick;
    const double half_w = content_manifest().player_frame.w / 2.0;

    switch (st.phase) {
        case GamePhase::title:
            if (input.click) {
                st.phase = GamePhase::playing;
                st.phase_entered_tick = t;
                st.next_spawn_tick = t + 1;
            }
            break;
        case GamePhase::playing: {
            const double dx = std::clamp(input.x - st.player_x, -st.config.player_speed, st.config.player_speed);
            st.player_x = std::clamp(st.player_x + dx, half_w, l.w - half_w);
            if (t >= st.next_spawn_tick) {
                auto slot = std::find_if(st.projectiles.begin(), st.projectiles.end(),
                                         [](const Projectile& p) { return !p.active; });
                if (slot != st.projectiles.end()) {
                    slot->active = true;
                    slot->x = st.rng.uniform(80.0, l.w - 80.0);
                    slot->y = -30.0;
                    slot->vy = st.rng.uniform(3.0, 6.0);
                    slot->rotation = st.rng.uniform(0.0, 2.0 * std::numbers::pi);
                    slot->spin = st.rng.uniform(-0.12, 0.12);
                    const double mean = st.config.frame_rate / st.config.spawn_rate;
                    st.next_spawn_tick = t + std::max(20, static_cast<int>(std::lround(st.rng.exponential(mean))));
                }
            }
            for (auto& p : st.projectiles) {
                if (!p.active) continue;
                const double prev = p.y;
                p.y += p.vy;
                p.rotation = std::fmod(p.rotation + p.spin, 2.0 * std::numbers::pi);
                if (prev < l.catch_y && p.y >= l.catch_y && std::abs(p.x - st.player_x) <= half_w + 8.0) {
                    p.active = false;
                    ++st.caught;
                } else if (p.y >= l.ground_y && st.phase == GamePhase::playing) {
                    st.phase = GamePhase::life_lost;
                    st.phase_entered_tick = t + 1;
                    --st.lives;
                }
            }
            break;
        }
        case GamePhase::life_lost:
            if (t - st.phase_entered_tick >= 60) {
                for (auto& p : st.projectiles) p.active = false;
                st.phase = st.lives > 0 ? GamePhase::playing : GamePhase::ended;
                st.phase_entered_tick = t + 1;
                st.next_spawn_tick = t + 30;
            }
            break;
        case GamePhase::ended: break;
    }
    st.tick = t + 1;
    sync_scene(st);
    return st;
}

SnapshotBundle take_snapshot(const GameState& state, const AssetStore& assets, const RenderHook* hook,
                             int snapshot_index) {
    SnapshotBundle b;
    b.cor = state.scene;
    b.canvas_w = state.config.canvas_w;
    b.canvas_h = state.config.canvas_h;
    b.screenshot = render_scene(b.cor, assets, b.canvas_w, b.canvas_h, hook);
    b.timestamp = static_cast<std::int64_t>(state.tick) * 1000 / state.config.frame_rate;
    b.run_id = run_id_for(state.config);
    b.snapshot_index = snapshot_index;
    b.assets = assets;
    b.annotations["tick"] = std::to_string(state.tick);
    b.annotations["phase"] = to_string(state.phase);
    b.annotations["seed"] = std::to_string(state.config.seed);
    return b;
}

PointerInput scripted_input(const GameConfig& config, int tick) {
    const double margin = 80.0;
    const double period = 220.0;
    const double u = std::fmod(static_cast<double>(tick), period) / period;
    const double tri = u < 0.5 ? 2.0 * u : 2.0 - 2.0 * u;
    return {margin + (config.canvas_w - 2.0 * margin) * tri, tick == config.start_click_tick};
}

std::vector<int> snapshot_ticks(int final_tick, int snapshot_count) {
    std::vector<int> ticks;
    if (snapshot_count == 1) return {final_tick};
    for (int i = 0; i < snapshot_count; ++i) {
        ticks.push_back(static_cast<int>((static_cast<long long>(i) * final_tick * 2 + (snapshot_count - 1)) /
                                         (2LL * (snapshot_count - 1))));
    }
    return ticks;
}

std::vector<SnapshotBundle> run_test_case(const GameConfig& config, const RenderHook* hook) {
    auto finished = [&](const GameState& s) {
        return s.phase == GamePhase::life_lost || s.phase == GamePhase::ended || s.tick >= config.tick_cap;
    };
    // Pass one finds the run length; pass two replays it and snapshots.
    GameState st = new_game(config);
    while (!finished(st)) st = step(st, scripted_input(config, st.tick));
    const std::vector<int> ticks = snapshot_ticks(st.tick, config.snapshot_count);

    const AssetStore& assets = config.assets();
    std::vector<SnapshotBundle> out;
    out.reserve(ticks.size());
    st = new_game(config);
    for (std::size_t i = 0; i < ticks.size(); ++i) {
        while (st.tick < ticks[i]) st = step(st, scripted_input(config, st.tick));
        out.push_back(take_snapshot(st, assets, hook, static_cast<int>(i)));
    }
    return out;
}

}  // namespace spritecheck
