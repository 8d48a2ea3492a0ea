#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "provnet/image.hpp"
#include "provnet/preprocess.hpp"

namespace provnet::synth {

using prep::FramePlane;

inline constexpr int min_quality = 10;
inline constexpr int max_quality = 95;

struct Stage {
    int quality = 90;
    double rescale = 1.0;  // resample by this factor before quantizing, then back
    bool operator==(const Stage&) const = default;
};

struct CompressionChain {
    std::string label;
    std::vector<Stage> stages;
    bool operator==(const CompressionChain&) const = default;
};

// Throws ConfigError on an empty chain, quality outside [10, 95] or a
// non-positive rescale factor.
void validate(const CompressionChain& chain);

// {"chains": [{"label": "SC", "stages": [{"quality": 90}, {"quality": 70, "rescale": 0.75}]}, ...]}
std::vector<CompressionChain> parse_chains(const std::string& json_text);
std::string chains_to_json(std::span<const CompressionChain> chains);

// Standard JPEG luminance table scaled by the libjpeg quality rule, row-major.
std::array<int, 64> quant_table(int quality);

// Orthonormal 8x8 DCT-II applied blockwise and its inverse. Dimensions must be
// multiples of 8.
FramePlane block_dct(const FramePlane& plane);
FramePlane block_idct(const FramePlane& coefficients);

// Per 8x8 block: DCT, divide by the table, round, multiply back, inverse DCT,
// clamp to [0, 255]. Other sizes are reflect-padded to a multiple of 8 and
// cropped back. The result stays real-valued.
FramePlane quantize_block_dct(const FramePlane& plane, int quality);

// Bilinear resampling to an explicit size.
FramePlane resample(const FramePlane& plane, std::size_t width, std::size_t height);

FramePlane apply_chain(const FramePlane& plane, const CompressionChain& chain);

// Seeded multi-scale smoothed noise plus a linear gradient and fine grain,
// values inside [20, 235].
FramePlane base_image(std::size_t width, std::size_t height, std::mt19937_64& rng);

// Integer translation with reflect-101 borders.
FramePlane shift(const FramePlane& plane, int dx, int dy);

// Rounds and clamps to 8 bits, replicating the plane into 3 channels.
Raster to_raster(const FramePlane& plane);

struct DatasetOptions {
    std::vector<CompressionChain> chains;
    std::size_t videos_per_chain = 10;
    std::size_t frames_per_video = 5;
    std::size_t width = 256;
    std::size_t height = 256;
    std::size_t devices = 5;       // video ids are spread over D01..Dnn
    std::uint64_t seed = 0;
    bool p_emulation = false;      // GOPs of one I-frame followed by P-frames
    std::size_t gop_length = 4;
};

struct GeneratedFrame {
    std::string video_id;
    std::uint32_t frame_index = 0;
    char pict_type = 'I';
    std::string label;
    std::filesystem::path frame_path;  // relative to the output directory
};

struct GeneratedDataset {
    std::filesystem::path sidecar;     // absolute path of frames.csv
    std::vector<GeneratedFrame> frames;
};

// Writes frames/<video>_<index>.ppm and frames.csv under out_dir. Identical
// options give byte-identical output.
GeneratedDataset generate_dataset(const DatasetOptions& options, const std::filesystem::path& out_dir);

struct SynthFrame {
    FramePlane plane;   // compressed, real-valued
    char pict_type = 'I';
};

// In-memory generator behind generate_dataset: all frames of one video of one
// chain. Without P-emulation every frame is an independently compressed I-frame.
std::vector<SynthFrame> synth_video(const DatasetOptions& options, std::size_t chain_index, std::size_t video);

std::string video_id(const DatasetOptions& options, std::size_t chain_index, std::size_t video);

struct KsResult {
    double statistic = 0.0;
    double critical_value = 0.0;  // 1% level
    bool distinguishable() const { return statistic > critical_value; }
};

// Two-sample Kolmogorov-Smirnov test at the 1% level (asymptotic critical value).
KsResult ks_two_sample(std::vector<double> a, std::vector<double> b);

// Mean absolute S5a residual of n independent size x size patches pushed
// through the chain and rounded to 8 bits.
std::vector<double> residual_energy_sample(const CompressionChain& chain, std::size_t n, std::size_t size,
                                           std::uint64_t seed);

} // namespace provnet::synth
