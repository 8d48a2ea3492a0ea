#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

namespace provnet {

// 8-bit raster, channels interleaved, rows top to bottom.
struct Raster {
    std::size_t width = 0;
    std::size_t height = 0;
    std::size_t channels = 0;
    std::vector<std::uint8_t> pixels;

    Raster() = default;
    Raster(std::size_t w, std::size_t h, std::size_t c)
        : width(w), height(h), channels(c), pixels(w * h * c, 0) {}

    std::uint8_t& at(std::size_t x, std::size_t y, std::size_t c) { return pixels[(y * width + x) * channels + c]; }
    std::uint8_t at(std::size_t x, std::size_t y, std::size_t c) const { return pixels[(y * width + x) * channels + c]; }

    bool operator==(const Raster&) const = default;
};

// Binary netpbm: P5 (grayscale) and P6 (RGB), maxval 255.
Raster read_netpbm(const std::filesystem::path& path);
void write_netpbm(const std::filesystem::path& path, const Raster& image);

} // namespace provnet
