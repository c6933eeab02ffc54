#pragma once

#include "hfp/csr.hpp"
#include "hfp/rng.hpp"

#include <cstdint>
#include <utility>
#include <vector>

namespace hfp {

enum class BarrierOrientation : std::uint8_t { vertical = 0, horizontal = 1 };
enum class BarrierGap : std::uint8_t { top = 0, bottom = 1, middle_hole = 2, closed = 3 };

// A rectangular heavy-density slab, axis-aligned, in normalized grid
// coordinates. The gap (when present) removes 20% of the slab's long axis.
struct BarrierSpec {
    BarrierOrientation orientation = BarrierOrientation::vertical;
    double center = 0.5;    // cross-axis coordinate, in [0.2, 0.8]
    double thickness = 0.1; // in [0.05, 0.20]
    BarrierGap gap = BarrierGap::closed;
};

// One benchmark instance: a Morton-ordered multiphase pressure-Poisson
// system with zero-flux boundaries.
struct Frame {
    std::size_t n = 0;     // retained cell count (DOFs)
    std::size_t width = 0; // grid W
    std::size_t height = 0;
    std::vector<std::uint32_t> cell_order; // Morton-sorted cell ids, length n
    std::vector<double> rho;               // per retained cell, > 0
    CsrMatrix A;
    std::vector<double> b; // 1^T b = 0
    std::uint64_t master_seed = 0;
    std::uint64_t frame_index = 0;
    double rho_heavy = 0.0;
    std::vector<BarrierSpec> barriers;

    std::pair<std::uint32_t, std::uint32_t> cell_xy(std::size_t rank) const;
};

// W = ceil(sqrt(N)), H = ceil(N / W). Requires N >= 4.
std::pair<std::size_t, std::size_t> grid_dims(std::size_t n);

// All W*H cells sorted by Morton code, truncated to the first n.
std::vector<std::uint32_t> morton_cell_order(std::size_t width, std::size_t height,
                                             std::size_t n);

struct DensitySample {
    std::vector<double> rho;
    std::vector<BarrierSpec> barriers;
    double rho_heavy = 0.0;
};

// Density for the retained cells given a fixed barrier layout: heavy where
// any barrier covers the cell, light (1) elsewhere, times a multiplicative
// 1 + N(0, 0.05^2) noise clamped to >= 0.5.
std::vector<double> density_from_barriers(std::size_t width, std::size_t height,
                                          const std::vector<std::uint32_t>& cell_order,
                                          const std::vector<BarrierSpec>& barriers,
                                          double rho_heavy, RngStream& stream);

// Draws rho_heavy ~ loguniform[5, 100], 1-3 barriers, then the noisy field.
DensitySample sample_density(std::size_t width, std::size_t height,
                             const std::vector<std::uint32_t>& cell_order,
                             RngStream& stream);

// 5-point variable-coefficient Laplacian with harmonic-mean face conductances
// w_ij = 2 rho_i rho_j / (rho_i + rho_j); faces to absent cells contribute
// nothing (zero-flux). Throws on nonpositive density.
CsrMatrix assemble_operator(const std::vector<double>& rho, std::size_t width,
                            std::size_t height,
                            const std::vector<std::uint32_t>& cell_order);

// b -= (1^T b / n) 1, exact annihilation of the constant component.
void project_out_constant(std::span<double> b);

// Standard normal projected onto the complement of the constant vector.
std::vector<double> sample_rhs(std::size_t n, RngStream& stream);

// Full frame from (master seed, frame index). Requires n >= 4.
Frame make_frame(std::size_t n, std::uint64_t master_seed, std::uint64_t frame_index);

// Frame ids for the train/test splits; disjoint across splits and scales.
inline std::uint64_t train_frame_id(std::size_t scale, std::uint64_t i) {
    return (static_cast<std::uint64_t>(scale) << 24) | i;
}
inline std::uint64_t test_frame_id(std::size_t scale, std::uint64_t i) {
    return (static_cast<std::uint64_t>(scale) << 24) | (1ULL << 20) | i;
}

} // namespace hfp
