#include "provnet/image.hpp"

#include <cctype>
#include <fstream>
#include <string>

#include "provnet/error.hpp"

namespace provnet {

namespace {

// Next whitespace-delimited header token, skipping '#' comments.
std::string header_token(std::istream& in) {
    std::string token;
    int ch = in.get();
    while (ch != EOF) {
        if (ch == '#') {
            while (ch != EOF && ch != '\n') ch = in.get();
        } else if (std::isspace(ch)) {
            if (!token.empty()) return token;
        } else {
            token.push_back(static_cast<char>(ch));
        }
        ch = in.get();
    }
    return token;
}

std::size_t header_number(std::istream& in, const std::filesystem::path& path) {
    const std::string token = header_token(in);
    try {
        std::size_t pos = 0;
        const unsigned long v = std::stoul(token, &pos);
        if (pos != token.size()) throw std::invalid_argument(token);
        return v;
    } catch (const std::exception&) {
        throw InputError(path.string() + ": malformed netpbm header near '" + token + "'");
    }
}

} // namespace

Raster read_netpbm(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open frame " + path.string());
    const std::string magic = header_token(in);
    std::size_t channels = 0;
    if (magic == "P5") {
        channels = 1;
    } else if (magic == "P6") {
        channels = 3;
    } else {
        throw InputError(path.string() + ": unsupported netpbm type '" + magic + "'");
    }
    const std::size_t width = header_number(in, path);
    const std::size_t height = header_number(in, path);
    const std::size_t maxval = header_number(in, path);
    if (maxval != 255) throw InputError(path.string() + ": only maxval 255 is supported");
    if (width == 0 || height == 0 || width > 1u << 15 || height > 1u << 15) {
        throw InputError(path.string() + ": implausible dimensions");
    }
    Raster image(width, height, channels);
    in.read(reinterpret_cast<char*>(image.pixels.data()), static_cast<std::streamsize>(image.pixels.size()));
    if (static_cast<std::size_t>(in.gcount()) != image.pixels.size()) {
        throw InputError(path.string() + ": truncated pixel data");
    }
    return image;
}

void write_netpbm(const std::filesystem::path& path, const Raster& image) {
    if (image.channels != 1 && image.channels != 3) {
        throw InputError("netpbm output needs 1 or 3 channels, got " + std::to_string(image.channels));
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot open " + path.string() + " for writing");
    out << (image.channels == 1 ? "P5" : "P6") << '\n' << image.width << ' ' << image.height << "\n255\n";
    out.write(reinterpret_cast<const char*>(image.pixels.data()), static_cast<std::streamsize>(image.pixels.size()));
    if (!out) throw DataError("failed writing " + path.string());
}

} // namespace provnet
