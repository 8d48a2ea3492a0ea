#include "provnet/preprocess.hpp"

#include <cmath>
#include <fstream>

#include "provnet/binary_io.hpp"
#include "provnet/log.hpp"

namespace provnet::prep {

namespace {

constexpr std::size_t kernel_size = 5;
constexpr std::size_t radius = kernel_size / 2;

// Reflect-101 (mirror without repeating the edge pixel).
std::size_t reflect(std::ptrdiff_t i, std::size_t n) {
    const auto len = static_cast<std::ptrdiff_t>(n);
    while (i < 0 || i >= len) {
        if (i < 0) i = -i;
        if (i >= len) i = 2 * (len - 1) - i;
    }
    return static_cast<std::size_t>(i);
}

FramePlane pad_reflect(const FramePlane& plane, std::size_t pad) {
    FramePlane out(plane.width + 2 * pad, plane.height + 2 * pad);
    for (std::size_t y = 0; y < out.height; ++y) {
        const std::size_t sy = reflect(static_cast<std::ptrdiff_t>(y) - static_cast<std::ptrdiff_t>(pad), plane.height);
        for (std::size_t x = 0; x < out.width; ++x) {
            const std::size_t sx = reflect(static_cast<std::ptrdiff_t>(x) - static_cast<std::ptrdiff_t>(pad), plane.width);
            out.at(x, y) = plane.at(sx, sy);
        }
    }
    return out;
}

// sign * sum_k K[k] * (x[p - k] - x[p]); for a zero-sum kernel this is the
// plain convolution, for a unit-sum kernel with sign -1 it is x - K*x. Either
// way a constant plane maps to exactly zero.
FramePlane convolve_centered(const FramePlane& plane, const std::array<double, 25>& kernel, double sign,
                             const char* what) {
    if (plane.width < kernel_size || plane.height < kernel_size) {
        throw InputError(std::string(what) + ": plane " + std::to_string(plane.width) + "x" +
                         std::to_string(plane.height) + " is smaller than the 5x5 kernel");
    }
    if (plane.values.size() != plane.width * plane.height) {
        throw InputError(std::string(what) + ": plane data does not match its dimensions");
    }
    const FramePlane padded = pad_reflect(plane, radius);
    FramePlane out(plane.width, plane.height);
    for (std::size_t y = 0; y < plane.height; ++y) {
        for (std::size_t x = 0; x < plane.width; ++x) {
            const double center = plane.at(x, y);
            double acc = 0.0;
            for (std::size_t i = 0; i < kernel_size; ++i) {
                // True convolution: kernel row i pairs with input row y - (i - radius).
                const double* src = &padded.values[(y + 2 * radius - i) * padded.width + x + 2 * radius];
                const double* k = &kernel[i * kernel_size];
                for (std::size_t j = 0; j < kernel_size; ++j) acc += k[j] * (*(src - j) - center);
            }
            out.at(x, y) = sign * acc;
        }
    }
    return out;
}

std::array<double, 25> make_s5a() {
    constexpr int base[25] = {-1, 2,  -2, 2,  -1,  //
                              2,  -6, 8,  -6, 2,   //
                              -2, 8,  -12, 8, -2,  //
                              2,  -6, 8,  -6, 2,   //
                              -1, 2,  -2, 2,  -1};
    std::array<double, 25> k{};
    for (std::size_t i = 0; i < 25; ++i) k[i] = static_cast<double>(base[i]) / 12.0;
    return k;
}

std::array<double, 25> make_gaussian() {
    constexpr double sigma = 1.0;
    std::array<double, 5> g{};
    double sum = 0.0;
    for (std::size_t i = 0; i < 5; ++i) {
        const double d = static_cast<double>(i) - 2.0;
        g[i] = std::exp(-d * d / (2.0 * sigma * sigma));
        sum += g[i];
    }
    for (auto& v : g) v /= sum;
    std::array<double, 25> k{};
    for (std::size_t i = 0; i < 5; ++i)
        for (std::size_t j = 0; j < 5; ++j) k[i * 5 + j] = g[i] * g[j];
    return k;
}

void check_planes(std::span<const FramePlane> planes) {
    if (planes.empty()) throw InputError("crop_patches: no planes given");
    for (const auto& p : planes) {
        if (p.width != planes[0].width || p.height != planes[0].height) {
            throw InputError("crop_patches: planes have different resolutions");
        }
    }
}

} // namespace

FramePlane rgb_to_luma(const Raster& rgb) {
    if (rgb.channels != 3) {
        throw InputError("rgb_to_luma: expected 3 channels, got " + std::to_string(rgb.channels));
    }
    FramePlane y(rgb.width, rgb.height);
    for (std::size_t i = 0; i < y.values.size(); ++i) {
        const std::uint8_t* px = &rgb.pixels[i * 3];
        y.values[i] = 0.299 * px[0] + 0.587 * px[1] + 0.114 * px[2];
    }
    return y;
}

const std::array<double, 25>& s5a_kernel() {
    static const std::array<double, 25> k = make_s5a();
    return k;
}

const std::array<double, 25>& gaussian_kernel() {
    static const std::array<double, 25> k = make_gaussian();
    return k;
}

FramePlane hpf_s5a(const FramePlane& y) { return convolve_centered(y, s5a_kernel(), 1.0, "hpf_s5a"); }

FramePlane gaussian_residual(const FramePlane& y) {
    return convolve_centered(y, gaussian_kernel(), -1.0, "gaussian_residual");
}

std::vector<GridCell> patch_grid(std::size_t width, std::size_t height, std::size_t size) {
    if (size == 0) throw ConfigError("patch size must be positive");
    std::vector<GridCell> cells;
    cells.reserve((width / size) * (height / size));
    for (std::size_t r = 0; r + size <= height; r += size)
        for (std::size_t c = 0; c + size <= width; c += size) cells.push_back({r, c});
    return cells;
}

nn::Tensor<float> extract_tile(std::span<const FramePlane> planes, GridCell origin, std::size_t size) {
    check_planes(planes);
    const FramePlane& first = planes[0];
    if (origin.row + size > first.height || origin.col + size > first.width) {
        throw InputError("extract_tile: tile at (" + std::to_string(origin.row) + ", " +
                         std::to_string(origin.col) + ") exceeds the plane");
    }
    nn::Tensor<float> t(nn::Shape{1, planes.size(), size, size});
    for (std::size_t c = 0; c < planes.size(); ++c) {
        for (std::size_t y = 0; y < size; ++y) {
            const double* src = &planes[c].values[(origin.row + y) * first.width + origin.col];
            float* dst = &t.at(0, c, y, 0);
            for (std::size_t x = 0; x < size; ++x) dst[x] = static_cast<float>(src[x]);
        }
    }
    return t;
}

std::vector<Tile> crop_patches(std::span<const FramePlane> planes, std::size_t size) {
    check_planes(planes);
    const auto grid = patch_grid(planes[0].width, planes[0].height, size);
    if (grid.empty()) {
        log::info("skipping " + std::to_string(planes[0].width) + "x" + std::to_string(planes[0].height) +
                  " input: smaller than one " + std::to_string(size) + "px patch");
        return {};
    }
    std::vector<Tile> tiles;
    tiles.reserve(grid.size());
    for (const GridCell cell : grid) tiles.push_back({cell, extract_tile(planes, cell, size)});
    return tiles;
}

std::vector<Patch> make_iframe_input(const Raster& frame, const std::string& video_id,
                                     std::uint32_t frame_index, int label, std::size_t size, bool do_crop) {
    const FramePlane residual = hpf_s5a(rgb_to_luma(frame));
    std::vector<Patch> patches;
    const std::span<const FramePlane> planes(&residual, 1);
    if (!do_crop) {
        Patch p;
        p.tensor = nn::Tensor<float>(nn::Shape{1, 1, residual.height, residual.width},
                                     std::vector<float>(residual.values.begin(), residual.values.end()));
        p.label = label;
        p.origin = {video_id, frame_index, 0, 0};
        p.kind = PatchKind::I;
        patches.push_back(std::move(p));
        return patches;
    }
    for (auto& tile : crop_patches(planes, size)) {
        Patch p;
        p.tensor = std::move(tile.tensor);
        p.label = label;
        p.origin = {video_id, frame_index, static_cast<std::uint32_t>(tile.origin.row),
                    static_cast<std::uint32_t>(tile.origin.col)};
        p.kind = PatchKind::I;
        patches.push_back(std::move(p));
    }
    return patches;
}

std::vector<Patch> make_pframe_input(const PFrameStack& stack, int label, std::size_t size) {
    const Raster& first = stack.frames[0];
    for (const auto& f : stack.frames) {
        if (f.width != first.width || f.height != first.height) {
            throw InputError("P-frame triplet of " + stack.video_id + " around frame " +
                             std::to_string(stack.center_index) + " mixes resolutions");
        }
    }
    std::array<FramePlane, 3> residuals;
    for (std::size_t k = 0; k < 3; ++k) residuals[k] = gaussian_residual(rgb_to_luma(stack.frames[k]));

    std::vector<Patch> patches;
    for (auto& tile : crop_patches(residuals, size)) {
        Patch p;
        p.tensor = std::move(tile.tensor);
        p.label = label;
        p.origin = {stack.video_id, stack.center_index, static_cast<std::uint32_t>(tile.origin.row),
                    static_cast<std::uint32_t>(tile.origin.col)};
        p.kind = PatchKind::P;
        patches.push_back(std::move(p));
    }
    return patches;
}

void write_patch(std::ostream& out, const Patch& patch) {
    const nn::Shape s = patch.tensor.shape();
    if (s.n != 1) throw ConfigError("patch tensors must have batch dimension 1");
    out.write("PNETPTCH", 8);
    io::write_u32(out, 1);
    io::write_u8(out, static_cast<std::uint8_t>(patch.kind));
    io::write_u32(out, static_cast<std::uint32_t>(s.c));
    io::write_u32(out, static_cast<std::uint32_t>(s.h));
    io::write_u32(out, static_cast<std::uint32_t>(s.w));
    io::write_i32(out, patch.label);
    io::write_string(out, patch.origin.video_id);
    io::write_u32(out, patch.origin.frame_index);
    io::write_u32(out, patch.origin.row);
    io::write_u32(out, patch.origin.col);
    for (const float v : patch.tensor.values()) io::write_f32(out, v);
    if (!out) throw DataError("failed writing patch");
}

Patch read_patch(std::istream& in) {
    io::expect_magic(in, "PNETPTCH", "patch");
    const std::uint32_t version = io::read_u32(in, "patch version");
    if (version != 1) throw DataError("unsupported patch version " + std::to_string(version));
    Patch p;
    const std::uint8_t kind = io::read_u8(in, "patch kind");
    if (kind != 'I' && kind != 'P') throw DataError("unknown patch kind byte " + std::to_string(kind));
    p.kind = static_cast<PatchKind>(kind);
    nn::Shape s{1, io::read_u32(in, "dims"), io::read_u32(in, "dims"), io::read_u32(in, "dims")};
    if (s.size() > (std::size_t{1} << 28)) throw DataError("implausible patch dims " + s.to_string());
    p.label = io::read_i32(in, "label");
    p.origin.video_id = io::read_string(in, "video id", 4096);
    p.origin.frame_index = io::read_u32(in, "frame index");
    p.origin.row = io::read_u32(in, "row");
    p.origin.col = io::read_u32(in, "col");
    std::vector<float> values(s.size());
    for (auto& v : values) v = io::read_f32(in, "patch values");
    p.tensor = nn::Tensor<float>(s, std::move(values));
    return p;
}

void save_patch(const std::filesystem::path& path, const Patch& patch) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot open " + path.string() + " for writing");
    write_patch(out, patch);
}

Patch load_patch(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("missing patch file " + path.string());
    try {
        return read_patch(in);
    } catch (const DataError& e) {
        throw DataError(path.string() + ": " + e.what());
    }
}

} // namespace provnet::prep
