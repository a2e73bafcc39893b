#include "spritecheck/png_io.hpp"

#include <png.h>

#include <cstring>
#include <fstream>
#include <iterator>

namespace spritecheck {

namespace {

Bitmap finish_read(png_image& image, const std::string& what) {
    image.format = PNG_FORMAT_RGBA;
    std::vector<std::uint8_t> buffer(PNG_IMAGE_SIZE(image));
    if (png_image_finish_read(&image, nullptr, buffer.data(), 0, nullptr) == 0) {
        std::string msg = image.message;
        png_image_free(&image);
        throw Error("cannot decode PNG " + what + ": " + msg);
    }
    const int w = static_cast<int>(image.width);
    const int h = static_cast<int>(image.height);
    png_image_free(&image);
    return Bitmap::from_bytes(w, h, std::move(buffer));
}

}  // namespace

std::vector<std::uint8_t> encode_png(const Bitmap& bitmap) {
    if (bitmap.empty()) throw Error("cannot encode empty bitmap as PNG");
    png_image image;
    std::memset(&image, 0, sizeof image);
    image.version = PNG_IMAGE_VERSION;
    image.width = static_cast<png_uint_32>(bitmap.width());
    image.height = static_cast<png_uint_32>(bitmap.height());
    image.format = PNG_FORMAT_RGBA;

    png_alloc_size_t size = 0;
    if (png_image_write_to_memory(&image, nullptr, &size, 0, bitmap.bytes().data(), 0, nullptr) == 0) {
        throw Error(std::string("cannot encode PNG: ") + image.message);
    }
    std::vector<std::uint8_t> out(size);
    if (png_image_write_to_memory(&image, out.data(), &size, 0, bitmap.bytes().data(), 0, nullptr) == 0) {
        throw Error(std::string("cannot encode PNG: ") + image.message);
    }
    out.resize(size);
    return out;
}

Bitmap decode_png(std::span<const std::uint8_t> bytes) {
    png_image image;
    std::memset(&image, 0, sizeof image);
    image.version = PNG_IMAGE_VERSION;
    if (png_image_begin_read_from_memory(&image, bytes.data(), bytes.size()) == 0) {
        throw Error(std::string("cannot decode PNG stream: ") + image.message);
    }
    return finish_read(image, "stream");
}

Bitmap read_png(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    png_image image;
    std::memset(&image, 0, sizeof image);
    image.version = PNG_IMAGE_VERSION;
    if (png_image_begin_read_from_memory(&image, bytes.data(), bytes.size()) == 0) {
        throw Error("cannot decode PNG " + path.string() + ": " + image.message);
    }
    return finish_read(image, path.string());
}

void write_png(const Bitmap& image, const std::filesystem::path& path) {
    const auto bytes = encode_png(image);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error("cannot write " + path.string());
}

}  // namespace spritecheck
