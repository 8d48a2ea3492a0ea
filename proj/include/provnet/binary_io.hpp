#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>
#include <string_view>

#include "provnet/error.hpp"

// Explicit little-endian encoding, independent of host byte order.
namespace provnet::io {

inline void write_u8(std::ostream& out, std::uint8_t v) { out.put(static_cast<char>(v)); }

template <typename U>
void write_le(std::ostream& out, U value) {
    for (std::size_t i = 0; i < sizeof(U); ++i) {
        out.put(static_cast<char>((static_cast<std::uint64_t>(value) >> (8 * i)) & 0xffu));
    }
}

inline void write_u32(std::ostream& out, std::uint32_t v) { write_le(out, v); }
inline void write_u64(std::ostream& out, std::uint64_t v) { write_le(out, v); }
inline void write_i32(std::ostream& out, std::int32_t v) { write_le(out, static_cast<std::uint32_t>(v)); }
inline void write_f32(std::ostream& out, float v) { write_le(out, std::bit_cast<std::uint32_t>(v)); }
inline void write_f64(std::ostream& out, double v) { write_le(out, std::bit_cast<std::uint64_t>(v)); }

inline void write_string(std::ostream& out, std::string_view s) {
    write_u32(out, static_cast<std::uint32_t>(s.size()));
    out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline void read_exact(std::istream& in, char* dst, std::size_t n, std::string_view what) {
    in.read(dst, static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in.gcount()) != n) {
        throw DataError("truncated stream while reading " + std::string(what));
    }
}

template <typename U>
U read_le(std::istream& in, std::string_view what) {
    unsigned char bytes[sizeof(U)];
    read_exact(in, reinterpret_cast<char*>(bytes), sizeof(U), what);
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
    return static_cast<U>(v);
}

inline std::uint8_t read_u8(std::istream& in, std::string_view what) { return read_le<std::uint8_t>(in, what); }
inline std::uint32_t read_u32(std::istream& in, std::string_view what) { return read_le<std::uint32_t>(in, what); }
inline std::uint64_t read_u64(std::istream& in, std::string_view what) { return read_le<std::uint64_t>(in, what); }
inline std::int32_t read_i32(std::istream& in, std::string_view what) {
    return static_cast<std::int32_t>(read_le<std::uint32_t>(in, what));
}
inline float read_f32(std::istream& in, std::string_view what) {
    return std::bit_cast<float>(read_le<std::uint32_t>(in, what));
}
inline double read_f64(std::istream& in, std::string_view what) {
    return std::bit_cast<double>(read_le<std::uint64_t>(in, what));
}

inline std::string read_string(std::istream& in, std::string_view what, std::size_t limit = 1u << 26) {
    const std::uint32_t n = read_u32(in, what);
    if (n > limit) throw DataError("implausible string length in " + std::string(what));
    std::string s(n, '\0');
    read_exact(in, s.data(), n, what);
    return s;
}

inline void expect_magic(std::istream& in, std::string_view magic, std::string_view what) {
    std::string got(magic.size(), '\0');
    read_exact(in, got.data(), magic.size(), what);
    if (got != magic) throw DataError(std::string(what) + ": bad magic, expected " + std::string(magic));
}

} // namespace provnet::io
