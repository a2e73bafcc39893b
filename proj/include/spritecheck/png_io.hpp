#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "spritecheck/image.hpp"

namespace spritecheck {

Bitmap read_png(const std::filesystem::path& path);
void write_png(const Bitmap& image, const std::filesystem::path& path);

std::vector<std::uint8_t> encode_png(const Bitmap& image);
Bitmap decode_png(std::span<const std::uint8_t> bytes);

}  // namespace spritecheck
