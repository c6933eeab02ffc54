#include "hfp/factor_tensor.hpp"

#include <stdexcept>

namespace hfp {

FactorLayout make_factor_layout(const HPartition& partition, std::size_t coarse_size) {
    if (coarse_size == 0 || partition.leaf_size % coarse_size != 0)
        throw std::invalid_argument("factor layout: coarse size must divide leaf size");
    if (coarse_size % 2 != 0)
        throw std::invalid_argument("factor layout: coarse size must be even");
    FactorLayout l;
    l.n = partition.n;
    l.leaf_size = partition.leaf_size;
    l.coarse_size = coarse_size;
    l.coupling_rank = coarse_size / 2;
    l.leaf_count = partition.leaf_count;
    l.tile_count = partition.tile_count();
    l.leaf_base = 0;
    l.tile_base = l.leaf_base + l.leaf_count * l.leaf_size * l.leaf_size;
    l.bridge_base = l.tile_base + l.tile_count * l.coarse_size * l.coarse_size;
    l.gate_base = l.bridge_base + 2 * l.n * l.coarse_size;
    l.total = l.gate_base + l.n;
    l.tiles = partition.tiles;
    if (l.total != packed_width(partition, coarse_size))
        throw std::logic_error("factor layout: width mismatch");
    return l;
}

template <typename T>
PackedFactors<T> init_factors(const HPartition& partition, std::size_t coarse_size,
                              FactorInit mode, double sigma, RngStream& stream) {
    (void)mode; // both modes share the shape; they differ in the sigma callers pass
    PackedFactors<T> f(make_factor_layout(partition, coarse_size));
    for (std::size_t i = 0; i < f.layout.gate_base; ++i)
        f.data[i] = static_cast<T>(sigma == 0.0 ? 0.0 : sigma * stream.next_normal());
    for (std::size_t i = f.layout.gate_base; i < f.layout.total; ++i) f.data[i] = T(1);
    return f;
}

template PackedFactors<float> init_factors<float>(const HPartition&, std::size_t,
                                                  FactorInit, double, RngStream&);
template PackedFactors<double> init_factors<double>(const HPartition&, std::size_t,
                                                    FactorInit, double, RngStream&);

} // namespace hfp
