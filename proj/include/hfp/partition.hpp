#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace hfp {

// One off-diagonal tile: a pair of adjacent, equal-length leaf ranges.
// Row range precedes the column range; span is the number of leaves on a side.
struct TileSpec {
    std::size_t id = 0;
    std::size_t span = 0;
    std::size_t row_begin = 0; // leaf index, rows [row_begin, row_begin+span)
    std::size_t col_begin = 0; // leaf index, cols [col_begin, col_begin+span)
    std::size_t depth = 0;     // bisection-tree depth of the emitting node
};

// Weak-admissibility partition of [0, N) into K = N/L contiguous leaves plus
// K-1 off-diagonal tiles from recursive bisection, enumerated breadth-first
// (largest spans first) so packed offsets are stable.
struct HPartition {
    std::size_t n = 0;         // matrix dimension
    std::size_t leaf_size = 0; // L
    std::size_t leaf_count = 0; // K = N/L, power of two >= 2
    std::size_t admissibility = 1;
    std::vector<TileSpec> tiles;

    // Membership lists: for each leaf, the tiles whose row (resp. column)
    // range contains it. Each leaf appears in exactly log2(K) tiles total.
    std::vector<std::vector<std::size_t>> row_tiles_of_leaf;
    std::vector<std::vector<std::size_t>> col_tiles_of_leaf;

    std::size_t tile_count() const { return tiles.size(); }
    std::size_t leaf_begin(std::size_t k) const { return k * leaf_size; }

    std::string to_json(std::size_t coarse_size = 0) const;
};

// Throws std::invalid_argument unless L | N and N/L is a power of two >= 2.
HPartition build_partition(std::size_t n, std::size_t leaf_size);

// Exact element count of the packed factor tensor for a coarse token count
// of L_s per tile: K L^2 + M_H L_s^2 + 2 N L_s + N. Requires L_s | L.
std::size_t packed_width(const HPartition& p, std::size_t coarse_size);

// Leaf size clamp for tiny systems: a valid partition needs K >= 2.
inline std::size_t clamp_leaf_size(std::size_t n, std::size_t leaf_size) {
    return (n < 2 * leaf_size) ? n / 2 : leaf_size;
}

} // namespace hfp
