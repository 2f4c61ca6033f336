#pragma once

#include <bit>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <string_view>

namespace toxtopic::binio {

// Little-endian encode/decode independent of host byte order.

template <typename U>
inline U load_le_uint(std::span<const std::byte> bytes, std::size_t offset) {
    U v = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i)
        v |= static_cast<U>(std::to_integer<std::uint8_t>(bytes[offset + i])) << (8 * i);
    return v;
}

inline std::uint32_t load_u32(std::span<const std::byte> b, std::size_t off) {
    return load_le_uint<std::uint32_t>(b, off);
}
inline std::uint64_t load_u64(std::span<const std::byte> b, std::size_t off) {
    return load_le_uint<std::uint64_t>(b, off);
}
inline float load_f32(std::span<const std::byte> b, std::size_t off) {
    return std::bit_cast<float>(load_u32(b, off));
}
inline double load_f64(std::span<const std::byte> b, std::size_t off) {
    return std::bit_cast<double>(load_u64(b, off));
}

template <typename U>
inline void append_le_uint(std::string& out, U v) {
    for (std::size_t i = 0; i < sizeof(U); ++i)
        out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline void append_u32(std::string& out, std::uint32_t v) { append_le_uint(out, v); }
inline void append_u64(std::string& out, std::uint64_t v) { append_le_uint(out, v); }
inline void append_f32(std::string& out, float v) { append_u32(out, std::bit_cast<std::uint32_t>(v)); }
inline void append_f64(std::string& out, double v) { append_u64(out, std::bit_cast<std::uint64_t>(v)); }

inline std::span<const std::byte> as_bytes(std::string_view s) {
    return std::as_bytes(std::span(s.data(), s.size()));
}

}  // namespace toxtopic::binio
