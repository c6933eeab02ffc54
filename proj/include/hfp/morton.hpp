#pragma once

#include <cstdint>

namespace hfp {

// Z-order curve with x in the even bit positions and y in the odd ones.
// The convention is frozen: test vectors and dataset cell orders depend on it.

namespace detail {

inline std::uint32_t spread_bits16(std::uint32_t v) {
    v &= 0xFFFFu;
    v = (v | (v << 8)) & 0x00FF00FFu;
    v = (v | (v << 4)) & 0x0F0F0F0Fu;
    v = (v | (v << 2)) & 0x33333333u;
    v = (v | (v << 1)) & 0x55555555u;
    return v;
}

inline std::uint32_t gather_bits16(std::uint32_t v) {
    v &= 0x55555555u;
    v = (v | (v >> 1)) & 0x33333333u;
    v = (v | (v >> 2)) & 0x0F0F0F0Fu;
    v = (v | (v >> 4)) & 0x00FF00FFu;
    v = (v | (v >> 8)) & 0x0000FFFFu;
    return v;
}

} // namespace detail

inline std::uint32_t morton_encode(std::uint32_t x, std::uint32_t y) {
    return detail::spread_bits16(x) | (detail::spread_bits16(y) << 1);
}

inline void morton_decode(std::uint32_t code, std::uint32_t& x, std::uint32_t& y) {
    x = detail::gather_bits16(code);
    y = detail::gather_bits16(code >> 1);
}

} // namespace hfp
