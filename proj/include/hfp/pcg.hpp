#pragma once

#include "hfp/apply.hpp"
#include "hfp/csr.hpp"

#include <functional>
#include <string>
#include <vector>

namespace hfp {

struct SolveConfig {
    double rtol = 1e-8;
    std::size_t max_iters = 20000;
    // Preconditioner applies may run in single precision; PCG scalars
    // (dot products, norms, step sizes) always accumulate in double.
};

enum class SolveStatus { converged, max_iters, breakdown };

struct SolveReport {
    std::string method;
    std::size_t n = 0;
    std::size_t iterations = 0; // first k with |r_k| / |r_0| <= rtol
    bool converged = false;
    SolveStatus status = SolveStatus::max_iters;
    std::vector<double> residual_history; // |r_k| / |r_0| per iteration
    double wall_ms = 0.0;
    std::string frame_id;
    std::size_t breakdown_iter = 0;

    std::string to_json() const;
};

// z = M r. Must be reentrant per thread.
using PrecondApplier = std::function<void(std::span<const double>, std::span<double>)>;

PrecondApplier identity_applier();

// y_i = r_i / A_ii. Throws on nonpositive diagonal entries.
PrecondApplier jacobi_applier(const CsrMatrix& A);

// Applier backed by a factor tensor; owns its workspace.
PrecondApplier factor_applier(const FactorTensor& factors, const CsrMatrix& A);

// Standard preconditioned conjugate gradient. The iteration count equals the
// number of A-multiplies; the first convergence check happens after one full
// iteration. Breakdown (p^T A p below -1e-12 |p|^2 |A|_F) is reported, not
// thrown.
SolveReport pcg_solve(const CsrMatrix& A, std::span<const double> b,
                      const PrecondApplier& precond, const SolveConfig& cfg,
                      std::vector<double>* x_out = nullptr,
                      std::vector<std::vector<double>>* residual_vectors = nullptr);

} // namespace hfp
