#pragma once

#include "hfp/csr.hpp"
#include "hfp/rng.hpp"

#include <span>

namespace hfp {

enum class LossKind { cosine, sai };

// 1 - <Z, Y>_F / (|Z|_F |Y|_F): a single global angle over all entries,
// in [0, 2]. Throws std::domain_error when either norm vanishes (degenerate).
double cosine_loss(std::span<const double> z, std::span<const double> y);

// |(1/normA) A W - Z|_F^2 where W = M Z, evaluated column-wise on row-major
// batches of width kz.
double sai_loss(const CsrMatrix& A, std::span<const double> mz,
                std::span<const double> z, std::size_t kz, double norm_a);

// 2-norm estimate by power iteration (50 steps by default), deterministic
// start vector from the stream.
double power_iteration_norm(const CsrMatrix& A, RngStream& stream,
                            std::size_t steps = 50);

} // namespace hfp
