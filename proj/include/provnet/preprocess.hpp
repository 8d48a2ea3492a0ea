#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "provnet/image.hpp"
#include "provnet/tensor.hpp"

namespace provnet::prep {

inline constexpr std::size_t default_patch_size = 256;

// Real-valued single-channel plane (luma or residual), row-major.
struct FramePlane {
    std::size_t width = 0;
    std::size_t height = 0;
    std::vector<double> values;

    FramePlane() = default;
    FramePlane(std::size_t w, std::size_t h, double fill = 0.0) : width(w), height(h), values(w * h, fill) {}

    double& at(std::size_t x, std::size_t y) { return values[y * width + x]; }
    double at(std::size_t x, std::size_t y) const { return values[y * width + x]; }
};

enum class PatchKind : char { I = 'I', P = 'P' };

// (row, col) are the pixel coordinates of the tile's top-left corner.
struct PatchOrigin {
    std::string video_id;
    std::uint32_t frame_index = 0;
    std::uint32_t row = 0;
    std::uint32_t col = 0;

    bool operator==(const PatchOrigin&) const = default;
};

struct Patch {
    nn::Tensor<float> tensor;   // (1, 1|3, size, size)
    int label = -1;
    PatchOrigin origin;
    PatchKind kind = PatchKind::I;
};

// Three consecutive P-frames of one video, in temporal order.
struct PFrameStack {
    std::array<Raster, 3> frames;
    std::string video_id;
    std::uint32_t center_index = 0;
};

struct GridCell {
    std::size_t row = 0;
    std::size_t col = 0;
    bool operator==(const GridCell&) const = default;
};

struct Tile {
    GridCell origin;
    nn::Tensor<float> tensor;
};

// Full-range BT.601 luma, unrounded.
FramePlane rgb_to_luma(const Raster& rgb);

// 5x5 SRM "square" residual kernel, row-major, already divided by 12.
const std::array<double, 25>& s5a_kernel();
// 5x5 Gaussian, sigma 1, normalized to sum 1.
const std::array<double, 25>& gaussian_kernel();

// High-pass residual: 2-D convolution with the S5a kernel, reflect-101 borders.
FramePlane hpf_s5a(const FramePlane& y);
// Y - G(Y) with the 5x5 Gaussian, reflect-101 borders.
FramePlane gaussian_residual(const FramePlane& y);

// Top-left corners of the floor(W/size) x floor(H/size) grid anchored at
// (0, 0), row-major. Remainder pixels on the right and bottom are dropped.
std::vector<GridCell> patch_grid(std::size_t width, std::size_t height, std::size_t size = default_patch_size);

// Cuts co-registered planes into tiles; channel k of each tile comes from
// planes[k]. An input smaller than one tile yields nothing (with a log line).
std::vector<Tile> crop_patches(std::span<const FramePlane> planes, std::size_t size = default_patch_size);

// The tile at a given origin, exactly as crop_patches would produce it.
nn::Tensor<float> extract_tile(std::span<const FramePlane> planes, GridCell origin,
                               std::size_t size = default_patch_size);

// luma -> S5a residual -> tiles of kind I. With do_crop = false the whole
// residual frame is returned as a single patch at origin (0, 0).
std::vector<Patch> make_iframe_input(const Raster& frame, const std::string& video_id,
                                     std::uint32_t frame_index, int label,
                                     std::size_t size = default_patch_size, bool do_crop = true);

// Per-frame luma -> Gaussian residual, stacked as 3 channels -> tiles of kind P.
std::vector<Patch> make_pframe_input(const PFrameStack& stack, int label,
                                     std::size_t size = default_patch_size);

// Patch file:
//   "PNETPTCH" u32 version, u8 kind ('I'|'P'), u32 c, u32 h, u32 w, i32 label,
//   string video_id, u32 frame_index, u32 row, u32 col, f32 values[c*h*w]
void write_patch(std::ostream& out, const Patch& patch);
Patch read_patch(std::istream& in);
void save_patch(const std::filesystem::path& path, const Patch& patch);
Patch load_patch(const std::filesystem::path& path);

} // namespace provnet::prep
