#include "hfp/partition.hpp"

#include "json.hpp"

#include <stdexcept>

namespace hfp {

HPartition build_partition(std::size_t n, std::size_t leaf_size) {
    if (leaf_size == 0 || n % leaf_size != 0)
        throw std::invalid_argument("build_partition: leaf size must divide N");
    const std::size_t k = n / leaf_size;
    if (k < 2 || (k & (k - 1)) != 0)
        throw std::invalid_argument(
            "build_partition: leaf count must be a power of two >= 2");

    HPartition p;
    p.n = n;
    p.leaf_size = leaf_size;
    p.leaf_count = k;

    // Breadth-first over the bisection tree: depth d holds 2^d nodes, each
    // covering k / 2^d leaves and emitting one tile between its halves.
    for (std::size_t depth = 0, nodes = 1, width = k; width >= 2;
         ++depth, nodes *= 2, width /= 2) {
        for (std::size_t i = 0; i < nodes; ++i) {
            TileSpec t;
            t.id = p.tiles.size();
            t.depth = depth;
            t.span = width / 2;
            t.row_begin = i * width;
            t.col_begin = i * width + t.span;
            p.tiles.push_back(t);
        }
    }

    p.row_tiles_of_leaf.resize(k);
    p.col_tiles_of_leaf.resize(k);
    for (const TileSpec& t : p.tiles) {
        for (std::size_t l = 0; l < t.span; ++l) {
            p.row_tiles_of_leaf[t.row_begin + l].push_back(t.id);
            p.col_tiles_of_leaf[t.col_begin + l].push_back(t.id);
        }
    }
    return p;
}

std::size_t packed_width(const HPartition& p, std::size_t coarse_size) {
    if (coarse_size == 0 || p.leaf_size % coarse_size != 0)
        throw std::invalid_argument("packed_width: coarse size must divide leaf size");
    const std::size_t l = p.leaf_size, ls = coarse_size;
    return p.leaf_count * l * l + p.tile_count() * ls * ls + 2 * p.n * ls + p.n;
}

std::string HPartition::to_json(std::size_t coarse_size) const {
    nlohmann::json j;
    j["n"] = n;
    j["leaf_size"] = leaf_size;
    j["leaf_count"] = leaf_count;
    j["admissibility"] = admissibility;
    j["tile_count"] = tiles.size();
    nlohmann::json jt = nlohmann::json::array();
    for (const TileSpec& t : tiles)
        jt.push_back({{"id", t.id},
                      {"span", t.span},
                      {"row_begin", t.row_begin},
                      {"col_begin", t.col_begin},
                      {"depth", t.depth}});
    j["tiles"] = jt;
    if (coarse_size != 0) {
        j["coarse_size"] = coarse_size;
        j["packed_width"] = packed_width(*this, coarse_size);
        const std::size_t l = leaf_size, ls = coarse_size;
        j["sections"] = {{"leaf_factors", {{"offset", 0}, {"length", leaf_count * l * l}}},
                         {"tile_factors",
                          {{"offset", leaf_count * l * l},
                           {"length", tiles.size() * ls * ls}}},
                         {"bridges",
                          {{"offset", leaf_count * l * l + tiles.size() * ls * ls},
                           {"length", 2 * n * ls}}},
                         {"gate",
                          {{"offset",
                            leaf_count * l * l + tiles.size() * ls * ls + 2 * n * ls},
                           {"length", n}}}};
    }
    return j.dump(2);
}

} // namespace hfp
