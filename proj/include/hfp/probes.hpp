#pragma once

#include "hfp/csr.hpp"
#include "hfp/rng.hpp"

#include <vector>

namespace hfp {

// Probe count rule: max(64, ceil(sqrt(N))).
std::size_t probe_count(std::size_t n);

// Hutchinson probe batch, row-major N x K_z (row i = node i across probes).
struct ProbeBatch {
    std::size_t n = 0;
    std::size_t count = 0; // K_z
    std::vector<double> z; // n * count
    double omega = 0.0;    // smoothing parameters actually applied
    std::size_t smooth_steps = 0;
    std::uint64_t frame_index = 0;
};

ProbeBatch sample_probes(std::size_t n, RngStream& stream);

// Damped-Jacobi smoothing z <- z - omega D^{-1} A z, applied `steps` times to
// every column. Pure fixed-point iteration; nothing differentiates through it.
void smooth_probes(const CsrMatrix& A, ProbeBatch& batch, double omega,
                   std::size_t steps);

} // namespace hfp
