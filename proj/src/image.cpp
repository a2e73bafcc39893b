#include "spritecheck/image.hpp"

#include <cstring>

namespace spritecheck {

Bitmap::Bitmap(int width, int height, Rgba fill_colour) : width_(width), height_(height) {
    if (width < 0 || height < 0) throw Error("bitmap dimensions must be non-negative");
    data_.resize(pixel_count() * 4);
    fill(fill_colour);
}

Bitmap Bitmap::crop(const Rect& r) const {
    if (!bounds().contains(r)) throw Error("crop rectangle outside bitmap");
    Bitmap out(r.w, r.h);
    for (int y = 0; y < r.h; ++y) {
        std::memcpy(out.row(y), &data_[offset(r.x, r.y + y)], static_cast<std::size_t>(r.w) * 4);
    }
    return out;
}

void Bitmap::fill(Rgba c) {
    for (std::size_t i = 0; i < data_.size(); i += 4) {
        data_[i] = c.r;
        data_[i + 1] = c.g;
        data_[i + 2] = c.b;
        data_[i + 3] = c.a;
    }
}

Bitmap Bitmap::from_bytes(int width, int height, std::vector<std::uint8_t> rgba) {
    if (width < 0 || height < 0) throw Error("bitmap dimensions must be non-negative");
    if (rgba.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height) * 4) {
        throw Error("RGBA buffer size does not match dimensions");
    }
    Bitmap b;
    b.width_ = width;
    b.height_ = height;
    b.data_ = std::move(rgba);
    return b;
}

}  // namespace spritecheck
