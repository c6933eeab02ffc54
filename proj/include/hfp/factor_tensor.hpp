#pragma once

#include "hfp/partition.hpp"
#include "hfp/rng.hpp"

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace hfp {

// Element layout of the packed factor tensor. Section order follows the
// packed-width formula term by term: leaf factors, tile coupling factors,
// bridges, gate. Each tile slot holds the factor pair (U_m | V_m), each
// L_s x (L_s/2) row-major, so a slot is exactly L_s^2 elements and the
// total is K L^2 + M_H L_s^2 + 2 N L_s + N.
struct FactorLayout {
    std::size_t n = 0;
    std::size_t leaf_size = 0;   // L
    std::size_t coarse_size = 0; // L_s
    std::size_t coupling_rank = 0; // L_s / 2, inner rank of U V^T
    std::size_t leaf_count = 0;  // K
    std::size_t tile_count = 0;  // M_H

    std::size_t leaf_base = 0;
    std::size_t tile_base = 0;
    std::size_t bridge_base = 0;
    std::size_t gate_base = 0;
    std::size_t total = 0;

    std::vector<TileSpec> tiles; // copied from the partition

    std::size_t leaf_factor(std::size_t k) const { return leaf_base + k * leaf_size * leaf_size; }
    std::size_t tile_u(std::size_t m) const {
        return tile_base + m * coarse_size * coarse_size;
    }
    std::size_t tile_v(std::size_t m) const {
        return tile_u(m) + coarse_size * coupling_rank;
    }
    std::size_t bridge_u(std::size_t k) const {
        return bridge_base + k * 2 * leaf_size * coarse_size;
    }
    std::size_t bridge_v(std::size_t k) const {
        return bridge_u(k) + leaf_size * coarse_size;
    }
    std::size_t gate() const { return gate_base; }
};

// Requires L_s | L and L_s even (the coupling factor pair splits the slot).
FactorLayout make_factor_layout(const HPartition& partition, std::size_t coarse_size);

// The preconditioner: one contiguous array over the FactorLayout. float for
// the solve path, double for the training/oracle path. Strict SPD is not
// enforced; the optional softplus-parameterized diagonal shift adds
// log(1 + exp(spd_shift_raw)) * I when enabled (off by default).
template <typename T>
struct PackedFactors {
    FactorLayout layout;
    std::vector<T> data;
    bool spd_shift_enabled = false;
    double spd_shift_raw = 0.0;

    double spd_shift() const {
        return spd_shift_enabled ? std::log1p(std::exp(spd_shift_raw)) : 0.0;
    }

    PackedFactors() = default;
    explicit PackedFactors(const FactorLayout& l) : layout(l), data(l.total, T(0)) {}

    std::span<T> leaf_factor(std::size_t k) {
        return {data.data() + layout.leaf_factor(k), layout.leaf_size * layout.leaf_size};
    }
    std::span<const T> leaf_factor(std::size_t k) const {
        return {data.data() + layout.leaf_factor(k), layout.leaf_size * layout.leaf_size};
    }
    std::span<T> tile_u(std::size_t m) {
        return {data.data() + layout.tile_u(m), layout.coarse_size * layout.coupling_rank};
    }
    std::span<const T> tile_u(std::size_t m) const {
        return {data.data() + layout.tile_u(m), layout.coarse_size * layout.coupling_rank};
    }
    std::span<T> tile_v(std::size_t m) {
        return {data.data() + layout.tile_v(m), layout.coarse_size * layout.coupling_rank};
    }
    std::span<const T> tile_v(std::size_t m) const {
        return {data.data() + layout.tile_v(m), layout.coarse_size * layout.coupling_rank};
    }
    std::span<T> bridge_u(std::size_t k) {
        return {data.data() + layout.bridge_u(k), layout.leaf_size * layout.coarse_size};
    }
    std::span<const T> bridge_u(std::size_t k) const {
        return {data.data() + layout.bridge_u(k), layout.leaf_size * layout.coarse_size};
    }
    std::span<T> bridge_v(std::size_t k) {
        return {data.data() + layout.bridge_v(k), layout.leaf_size * layout.coarse_size};
    }
    std::span<const T> bridge_v(std::size_t k) const {
        return {data.data() + layout.bridge_v(k), layout.leaf_size * layout.coarse_size};
    }
    std::span<T> gate() { return {data.data() + layout.gate(), layout.n}; }
    std::span<const T> gate() const { return {data.data() + layout.gate(), layout.n}; }

    template <typename U>
    PackedFactors<U> cast() const {
        PackedFactors<U> out(layout);
        out.spd_shift_enabled = spd_shift_enabled;
        out.spd_shift_raw = spd_shift_raw;
        for (std::size_t i = 0; i < data.size(); ++i) out.data[i] = static_cast<U>(data[i]);
        return out;
    }
};

using FactorTensor = PackedFactors<float>;

enum class FactorInit { jacobi_seed, random };

// jacobi_seed: gate = 1, structured sections i.i.d. N(0, sigma^2) with
// sigma defaulting to 1e-2. random: same shape with caller-chosen sigma.
// With sigma = 0 only the gate survives and the apply reduces to
// diag(A)^{-1}.
template <typename T>
PackedFactors<T> init_factors(const HPartition& partition, std::size_t coarse_size,
                              FactorInit mode, double sigma, RngStream& stream);

extern template PackedFactors<float> init_factors<float>(const HPartition&, std::size_t,
                                                         FactorInit, double, RngStream&);
extern template PackedFactors<double> init_factors<double>(const HPartition&, std::size_t,
                                                           FactorInit, double, RngStream&);

} // namespace hfp
