#include "provnet/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <set>

#include "json.hpp"
#include "provnet/error.hpp"
#include "provnet/hash.hpp"

namespace provnet::synth {

using nlohmann::json;

namespace {

constexpr std::array<int, 64> luma_table = {
    16, 11, 10, 16, 24,  40,  51,  61,   //
    12, 12, 14, 19, 26,  58,  60,  55,   //
    14, 13, 16, 24, 40,  57,  69,  56,   //
    14, 17, 22, 29, 51,  87,  80,  62,   //
    18, 22, 37, 56, 68,  109, 103, 77,   //
    24, 35, 55, 64, 81,  104, 113, 92,   //
    49, 64, 78, 87, 103, 121, 120, 101,  //
    72, 92, 95, 98, 112, 100, 103, 99};

using Block = std::array<double, 64>;

const Block& dct_matrix() {
    static const Block m = [] {
        Block c{};
        for (std::size_t u = 0; u < 8; ++u) {
            const double alpha = u == 0 ? std::sqrt(1.0 / 8.0) : std::sqrt(2.0 / 8.0);
            for (std::size_t x = 0; x < 8; ++x) {
                c[u * 8 + x] = alpha * std::cos((2.0 * static_cast<double>(x) + 1.0) * static_cast<double>(u) *
                                                std::numbers::pi / 16.0);
            }
        }
        return c;
    }();
    return m;
}

// out = C * in * C^T (forward) or C^T * in * C (inverse).
Block transform(const Block& in, bool inverse) {
    const Block& c = dct_matrix();
    const auto m = [&](std::size_t i, std::size_t j) { return inverse ? c[j * 8 + i] : c[i * 8 + j]; };
    Block tmp{}, out{};
    for (std::size_t i = 0; i < 8; ++i)
        for (std::size_t j = 0; j < 8; ++j) {
            double acc = 0.0;
            for (std::size_t k = 0; k < 8; ++k) acc += m(i, k) * in[k * 8 + j];
            tmp[i * 8 + j] = acc;
        }
    for (std::size_t i = 0; i < 8; ++i)
        for (std::size_t j = 0; j < 8; ++j) {
            double acc = 0.0;
            for (std::size_t k = 0; k < 8; ++k) acc += tmp[i * 8 + k] * m(j, k);
            out[i * 8 + j] = acc;
        }
    return out;
}

void require_block_aligned(const FramePlane& p, const char* what) {
    if (p.width % 8 != 0 || p.height % 8 != 0 || p.width == 0 || p.height == 0) {
        throw ConfigError(std::string(what) + ": dimensions " + std::to_string(p.width) + "x" +
                          std::to_string(p.height) + " are not positive multiples of 8");
    }
}

template <typename F>
FramePlane for_each_block(const FramePlane& plane, F&& f) {
    FramePlane out(plane.width, plane.height);
    Block b{};
    for (std::size_t by = 0; by < plane.height; by += 8)
        for (std::size_t bx = 0; bx < plane.width; bx += 8) {
            for (std::size_t y = 0; y < 8; ++y)
                for (std::size_t x = 0; x < 8; ++x) b[y * 8 + x] = plane.at(bx + x, by + y);
            const Block r = f(b);
            for (std::size_t y = 0; y < 8; ++y)
                for (std::size_t x = 0; x < 8; ++x) out.at(bx + x, by + y) = r[y * 8 + x];
        }
    return out;
}

std::size_t reflect(std::ptrdiff_t i, std::size_t n) {
    if (n == 1) return 0;
    const auto len = static_cast<std::ptrdiff_t>(n);
    while (i < 0 || i >= len) {
        if (i < 0) i = -i;
        if (i >= len) i = 2 * (len - 1) - i;
    }
    return static_cast<std::size_t>(i);
}

double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

double normal(std::mt19937_64& rng) {
    const double u1 = 1.0 - uniform01(rng);
    const double u2 = uniform01(rng);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::uint64_t derive_seed(std::uint64_t seed, std::string_view tag, std::uint64_t a, std::uint64_t b = 0) {
    Fnv1a h;
    h.update(tag);
    const std::array<std::uint64_t, 3> v{seed, a, b};
    h.update_values(std::span<const std::uint64_t>(v));
    return h.digest();
}

} // namespace

void validate(const CompressionChain& chain) {
    if (chain.stages.empty()) throw ConfigError("compression chain '" + chain.label + "' has no stages");
    for (const Stage& s : chain.stages) {
        if (s.quality < min_quality || s.quality > max_quality) {
            throw ConfigError("compression chain '" + chain.label + "': quality " + std::to_string(s.quality) +
                              " outside [10, 95]");
        }
        if (!(s.rescale > 0.0) || !std::isfinite(s.rescale)) {
            throw ConfigError("compression chain '" + chain.label + "': rescale factor must be positive");
        }
    }
}

std::vector<CompressionChain> parse_chains(const std::string& json_text) {
    std::vector<CompressionChain> chains;
    try {
        const json doc = json::parse(json_text);
        for (const auto& c : doc.at("chains")) {
            CompressionChain chain;
            chain.label = c.at("label").get<std::string>();
            for (const auto& s : c.at("stages")) {
                Stage stage;
                stage.quality = s.at("quality").get<int>();
                stage.rescale = s.value("rescale", 1.0);
                chain.stages.push_back(stage);
            }
            validate(chain);
            chains.push_back(std::move(chain));
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("chain definitions: ") + e.what());
    }
    return chains;
}

std::string chains_to_json(std::span<const CompressionChain> chains) {
    json doc;
    doc["chains"] = json::array();
    for (const auto& c : chains) {
        json stages = json::array();
        for (const auto& s : c.stages) stages.push_back({{"quality", s.quality}, {"rescale", s.rescale}});
        doc["chains"].push_back({{"label", c.label}, {"stages", stages}});
    }
    return doc.dump(2);
}

std::array<int, 64> quant_table(int quality) {
    if (quality < 1 || quality > 100) throw ConfigError("quality " + std::to_string(quality) + " outside [1, 100]");
    const int scale = quality < 50 ? 5000 / quality : 200 - 2 * quality;
    std::array<int, 64> t{};
    for (std::size_t i = 0; i < 64; ++i) t[i] = std::clamp((luma_table[i] * scale + 50) / 100, 1, 255);
    return t;
}

FramePlane block_dct(const FramePlane& plane) {
    require_block_aligned(plane, "block_dct");
    return for_each_block(plane, [](const Block& b) { return transform(b, false); });
}

FramePlane block_idct(const FramePlane& coefficients) {
    require_block_aligned(coefficients, "block_idct");
    return for_each_block(coefficients, [](const Block& b) { return transform(b, true); });
}

FramePlane quantize_block_dct(const FramePlane& plane, int quality) {
    const auto table = quant_table(quality);
    if (plane.width == 0 || plane.height == 0) return plane;
    const std::size_t pw = (plane.width + 7) / 8 * 8;
    const std::size_t ph = (plane.height + 7) / 8 * 8;
    FramePlane padded(pw, ph);
    for (std::size_t y = 0; y < ph; ++y)
        for (std::size_t x = 0; x < pw; ++x)
            padded.at(x, y) = plane.at(reflect(static_cast<std::ptrdiff_t>(x), plane.width),
                                       reflect(static_cast<std::ptrdiff_t>(y), plane.height));

    const FramePlane q = for_each_block(padded, [&](const Block& b) {
        Block f = transform(b, false);
        for (std::size_t i = 0; i < 64; ++i) {
            const double step = static_cast<double>(table[i]);
            f[i] = std::round(f[i] / step) * step;
        }
        Block r = transform(f, true);
        for (double& v : r) v = std::clamp(v, 0.0, 255.0);
        return r;
    });
    if (pw == plane.width && ph == plane.height) return q;
    FramePlane out(plane.width, plane.height);
    for (std::size_t y = 0; y < plane.height; ++y)
        for (std::size_t x = 0; x < plane.width; ++x) out.at(x, y) = q.at(x, y);
    return out;
}

FramePlane resample(const FramePlane& plane, std::size_t width, std::size_t height) {
    if (width == 0 || height == 0) throw ConfigError("resample: target size must be positive");
    if (width == plane.width && height == plane.height) return plane;
    FramePlane out(width, height);
    const double sx = static_cast<double>(plane.width) / static_cast<double>(width);
    const double sy = static_cast<double>(plane.height) / static_cast<double>(height);
    const auto max_x = static_cast<double>(plane.width - 1);
    const auto max_y = static_cast<double>(plane.height - 1);
    for (std::size_t y = 0; y < height; ++y) {
        const double fy = std::clamp((static_cast<double>(y) + 0.5) * sy - 0.5, 0.0, max_y);
        const auto y0 = static_cast<std::size_t>(fy);
        const std::size_t y1 = std::min(y0 + 1, plane.height - 1);
        const double wy = fy - static_cast<double>(y0);
        for (std::size_t x = 0; x < width; ++x) {
            const double fx = std::clamp((static_cast<double>(x) + 0.5) * sx - 0.5, 0.0, max_x);
            const auto x0 = static_cast<std::size_t>(fx);
            const std::size_t x1 = std::min(x0 + 1, plane.width - 1);
            const double wx = fx - static_cast<double>(x0);
            const double top = plane.at(x0, y0) * (1.0 - wx) + plane.at(x1, y0) * wx;
            const double bottom = plane.at(x0, y1) * (1.0 - wx) + plane.at(x1, y1) * wx;
            out.at(x, y) = top * (1.0 - wy) + bottom * wy;
        }
    }
    return out;
}

FramePlane apply_chain(const FramePlane& plane, const CompressionChain& chain) {
    validate(chain);
    FramePlane current = plane;
    for (const Stage& s : chain.stages) {
        if (s.rescale == 1.0) {
            current = quantize_block_dct(current, s.quality);
            continue;
        }
        const auto w = std::max<std::size_t>(8, static_cast<std::size_t>(std::lround(static_cast<double>(plane.width) * s.rescale)));
        const auto h = std::max<std::size_t>(8, static_cast<std::size_t>(std::lround(static_cast<double>(plane.height) * s.rescale)));
        current = resample(quantize_block_dct(resample(current, w, h), s.quality), plane.width, plane.height);
    }
    return current;
}

FramePlane base_image(std::size_t width, std::size_t height, std::mt19937_64& rng) {
    FramePlane field(width, height);
    for (const std::size_t cell : {64u, 32u, 16u, 8u, 4u}) {
        const std::size_t gw = width / cell + 2;
        const std::size_t gh = height / cell + 2;
        std::vector<double> lattice(gw * gh);
        for (double& v : lattice) v = 2.0 * uniform01(rng) - 1.0;
        const double amplitude = std::pow(static_cast<double>(cell), 0.7);
        for (std::size_t y = 0; y < height; ++y) {
            const double fy = static_cast<double>(y) / static_cast<double>(cell);
            const auto y0 = static_cast<std::size_t>(fy);
            const double ty = fy - static_cast<double>(y0);
            const double wy = ty * ty * (3.0 - 2.0 * ty);
            for (std::size_t x = 0; x < width; ++x) {
                const double fx = static_cast<double>(x) / static_cast<double>(cell);
                const auto x0 = static_cast<std::size_t>(fx);
                const double tx = fx - static_cast<double>(x0);
                const double wx = tx * tx * (3.0 - 2.0 * tx);
                const double top = lattice[y0 * gw + x0] * (1.0 - wx) + lattice[y0 * gw + x0 + 1] * wx;
                const double bottom = lattice[(y0 + 1) * gw + x0] * (1.0 - wx) + lattice[(y0 + 1) * gw + x0 + 1] * wx;
                field.at(x, y) += amplitude * (top * (1.0 - wy) + bottom * wy);
            }
        }
    }
    const double gx = 2.0 * uniform01(rng) - 1.0;
    const double gy = 2.0 * uniform01(rng) - 1.0;
    for (std::size_t y = 0; y < height; ++y)
        for (std::size_t x = 0; x < width; ++x)
            field.at(x, y) += 10.0 * (gx * static_cast<double>(x) / static_cast<double>(width) +
                                      gy * static_cast<double>(y) / static_cast<double>(height));

    const auto [lo, hi] = std::minmax_element(field.values.begin(), field.values.end());
    const double low = *lo;
    const double span = std::max(*hi - low, 1e-9);
    for (double& v : field.values) {
        v = 40.0 + 175.0 * (v - low) / span + 3.0 * normal(rng);
        v = std::clamp(v, 20.0, 235.0);
    }
    return field;
}

FramePlane shift(const FramePlane& plane, int dx, int dy) {
    FramePlane out(plane.width, plane.height);
    for (std::size_t y = 0; y < plane.height; ++y)
        for (std::size_t x = 0; x < plane.width; ++x)
            out.at(x, y) = plane.at(reflect(static_cast<std::ptrdiff_t>(x) - dx, plane.width),
                                    reflect(static_cast<std::ptrdiff_t>(y) - dy, plane.height));
    return out;
}

Raster to_raster(const FramePlane& plane) {
    Raster r(plane.width, plane.height, 3);
    for (std::size_t i = 0; i < plane.values.size(); ++i) {
        const auto v = static_cast<std::uint8_t>(std::lround(std::clamp(plane.values[i], 0.0, 255.0)));
        r.pixels[3 * i] = r.pixels[3 * i + 1] = r.pixels[3 * i + 2] = v;
    }
    return r;
}

std::string video_id(const DatasetOptions& options, std::size_t chain_index, std::size_t video) {
    const std::size_t devices = std::max<std::size_t>(options.devices, 1);
    char buf[64];
    std::snprintf(buf, sizeof buf, "D%02zu_", video % devices + 1);
    char tail[32];
    std::snprintf(tail, sizeof tail, "_%04zu", video);
    return buf + options.chains.at(chain_index).label + tail;
}

std::vector<SynthFrame> synth_video(const DatasetOptions& options, std::size_t chain_index, std::size_t video) {
    const CompressionChain& chain = options.chains.at(chain_index);
    validate(chain);
    std::mt19937_64 rng(derive_seed(options.seed, "video", chain_index, video));
    const FramePlane scene = base_image(options.width, options.height, rng);

    std::vector<SynthFrame> frames;
    int ox = 0, oy = 0;
    const auto motion = [&] { return static_cast<int>(rng() % 5) - 2; };
    for (std::size_t k = 0; k < options.frames_per_video; ++k) {
        const int dx = motion(), dy = motion();
        ox += dx;
        oy += dy;
        const bool is_p = options.p_emulation && options.gop_length > 0 && k % options.gop_length != 0;
        FramePlane input = is_p ? shift(frames.back().plane, dx, dy) : shift(scene, ox, oy);
        for (double& v : input.values) v = std::clamp(v + 1.5 * normal(rng), 0.0, 255.0);
        frames.push_back({apply_chain(input, chain), is_p ? 'P' : 'I'});
    }
    return frames;
}

GeneratedDataset generate_dataset(const DatasetOptions& options, const std::filesystem::path& out_dir) {
    if (options.chains.size() < 2) throw ConfigError("generate_dataset needs at least two chains");
    std::set<std::string> labels;
    for (const auto& c : options.chains) {
        validate(c);
        if (c.label.empty() || c.label.find_first_of(", \t\n") != std::string::npos) {
            throw ConfigError("chain label '" + c.label + "' must be non-empty without commas or spaces");
        }
        if (!labels.insert(c.label).second) throw ConfigError("duplicate chain label '" + c.label + "'");
    }
    if (options.width < 8 || options.height < 8) throw ConfigError("frame size must be at least 8x8");
    if (options.videos_per_chain == 0 || options.frames_per_video == 0) {
        throw ConfigError("videos_per_chain and frames_per_video must be positive");
    }

    std::filesystem::create_directories(out_dir / "frames");
    GeneratedDataset out;
    out.sidecar = std::filesystem::absolute(out_dir / "frames.csv");
    std::ofstream csv(out.sidecar, std::ios::binary | std::ios::trunc);
    if (!csv) throw DataError("cannot write " + out.sidecar.string());
    csv << "video_id,frame_index,pict_type,width,height,frame_path,label\n";
    for (std::size_t c = 0; c < options.chains.size(); ++c) {
        for (std::size_t v = 0; v < options.videos_per_chain; ++v) {
            const std::string id = video_id(options, c, v);
            const auto frames = synth_video(options, c, v);
            for (std::size_t k = 0; k < frames.size(); ++k) {
                GeneratedFrame g;
                g.video_id = id;
                g.frame_index = static_cast<std::uint32_t>(k);
                g.pict_type = frames[k].pict_type;
                g.label = options.chains[c].label;
                g.frame_path = std::filesystem::path("frames") / (id + "_" + std::to_string(k) + ".ppm");
                write_netpbm(out_dir / g.frame_path, to_raster(frames[k].plane));
                csv << g.video_id << ',' << g.frame_index << ',' << g.pict_type << ',' << options.width << ','
                    << options.height << ',' << g.frame_path.generic_string() << ',' << g.label << '\n';
                out.frames.push_back(std::move(g));
            }
        }
    }
    if (!csv) throw DataError("failed writing " + out.sidecar.string());
    return out;
}

KsResult ks_two_sample(std::vector<double> a, std::vector<double> b) {
    if (a.empty() || b.empty()) throw ConfigError("ks_two_sample: empty sample");
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    const auto n = static_cast<double>(a.size());
    const auto m = static_cast<double>(b.size());
    std::size_t i = 0, j = 0;
    double d = 0.0;
    while (i < a.size() && j < b.size()) {
        const double x = std::min(a[i], b[j]);
        while (i < a.size() && a[i] <= x) ++i;
        while (j < b.size() && b[j] <= x) ++j;
        d = std::max(d, std::abs(static_cast<double>(i) / n - static_cast<double>(j) / m));
    }
    return {d, 1.628 * std::sqrt((n + m) / (n * m))};
}

std::vector<double> residual_energy_sample(const CompressionChain& chain, std::size_t n, std::size_t size,
                                           std::uint64_t seed) {
    std::vector<double> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::mt19937_64 rng(derive_seed(seed, "patch", i));
        const FramePlane compressed = apply_chain(base_image(size, size, rng), chain);
        FramePlane rounded(size, size);
        for (std::size_t k = 0; k < rounded.values.size(); ++k) {
            rounded.values[k] = static_cast<double>(std::lround(std::clamp(compressed.values[k], 0.0, 255.0)));
        }
        const FramePlane residual = prep::hpf_s5a(rounded);
        double acc = 0.0;
        for (const double v : residual.values) acc += std::abs(v);
        out.push_back(acc / static_cast<double>(residual.values.size()));
    }
    return out;
}

} // namespace provnet::synth
