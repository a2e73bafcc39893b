#pragma once

#include <algorithm>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "spritecheck/error.hpp"

namespace spritecheck {

struct Rgba {
    std::uint8_t r = 0;
    std::uint8_t g = 0;
    std::uint8_t b = 0;
    std::uint8_t a = 255;

    friend bool operator==(const Rgba&, const Rgba&) = default;
};

// Integer rectangle, half-open: [x, x+w) x [y, y+h).
struct Rect {
    int x = 0;
    int y = 0;
    int w = 0;
    int h = 0;

    [[nodiscard]] bool empty() const { return w <= 0 || h <= 0; }
    [[nodiscard]] int right() const { return x + w; }
    [[nodiscard]] int bottom() const { return y + h; }
    [[nodiscard]] long long area() const { return empty() ? 0 : static_cast<long long>(w) * h; }
    [[nodiscard]] bool contains(int px, int py) const {
        return px >= x && py >= y && px < right() && py < bottom();
    }
    [[nodiscard]] bool contains(const Rect& o) const {
        return o.empty() || (o.x >= x && o.y >= y && o.right() <= right() && o.bottom() <= bottom());
    }

    friend bool operator==(const Rect&, const Rect&) = default;
};

inline Rect intersect(const Rect& a, const Rect& b) {
    const int x0 = std::max(a.x, b.x);
    const int y0 = std::max(a.y, b.y);
    const int x1 = std::min(a.right(), b.right());
    const int y1 = std::min(a.bottom(), b.bottom());
    if (x1 <= x0 || y1 <= y0) return {};
    return {x0, y0, x1 - x0, y1 - y0};
}

// Straight-alpha RGBA8 raster, row-major, tightly packed.
class Bitmap {
public:
    Bitmap() = default;
    Bitmap(int width, int height, Rgba fill = {0, 0, 0, 0});

    [[nodiscard]] int width() const { return width_; }
    [[nodiscard]] int height() const { return height_; }
    [[nodiscard]] bool empty() const { return width_ == 0 || height_ == 0; }
    [[nodiscard]] Rect bounds() const { return {0, 0, width_, height_}; }
    [[nodiscard]] std::size_t pixel_count() const {
        return static_cast<std::size_t>(width_) * static_cast<std::size_t>(height_);
    }

    [[nodiscard]] Rgba at(int x, int y) const {
        const std::uint8_t* p = &data_[offset(x, y)];
        return {p[0], p[1], p[2], p[3]};
    }
    void set(int x, int y, Rgba c) {
        std::uint8_t* p = &data_[offset(x, y)];
        p[0] = c.r;
        p[1] = c.g;
        p[2] = c.b;
        p[3] = c.a;
    }

    [[nodiscard]] std::span<const std::uint8_t> bytes() const { return data_; }
    [[nodiscard]] std::span<std::uint8_t> bytes() { return data_; }
    [[nodiscard]] const std::uint8_t* row(int y) const { return &data_[offset(0, y)]; }
    [[nodiscard]] std::uint8_t* row(int y) { return &data_[offset(0, y)]; }

    // Copy of the pixels inside `r`, which must lie within bounds().
    [[nodiscard]] Bitmap crop(const Rect& r) const;
    void fill(Rgba c);

    static Bitmap from_bytes(int width, int height, std::vector<std::uint8_t> rgba);

    friend bool operator==(const Bitmap&, const Bitmap&) = default;

private:
    [[nodiscard]] std::size_t offset(int x, int y) const {
        return (static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x)) * 4;
    }

    int width_ = 0;
    int height_ = 0;
    std::vector<std::uint8_t> data_;
};

// Rounds to nearest with ties away from zero, clamped to [0, 255].
inline std::uint8_t to_u8(double v) {
    if (!(v > 0.0)) return 0;
    if (v >= 255.0) return 255;
    return static_cast<std::uint8_t>(v + 0.5);
}

}  // namespace spritecheck
