#pragma once

#include "hfp/csr.hpp"
#include "hfp/factor_tensor.hpp"
#include "hfp/loss.hpp"

#include <span>
#include <vector>

namespace hfp {

// Double-precision batched apply with every stage stashed for the reverse
// pass. Buffers are sized once per (layout, batch width) pair.
struct BatchApplyContext {
    BatchApplyContext(const FactorLayout& layout, std::size_t kz);

    std::size_t kz = 0;
    // Forward stashes (row-major blocks of width kz).
    std::vector<double> input;        // N x kz (the batch fed to the chain)
    std::vector<double> leaf_coef;    // N x kz   (F_k^T G_k per leaf)
    std::vector<double> row_restrict; // K L_s x kz
    std::vector<double> col_restrict; // K L_s x kz
    std::vector<double> row_strip;    // M_H L_s x kz
    std::vector<double> col_strip;    // M_H L_s x kz
    std::vector<double> row_coef;     // M_H rank x kz (U^T s_r)
    std::vector<double> col_coef;     // M_H rank x kz (V^T s_c)
    std::vector<double> coupled_row;  // M_H L_s x kz
    std::vector<double> coupled_col;  // M_H L_s x kz
    std::vector<double> row_gather;   // K L_s x kz
    std::vector<double> col_gather;   // K L_s x kz
    std::vector<double> output;       // N x kz
    // Reverse scratch.
    std::vector<double> bar_out;      // N x kz
    std::vector<double> bar_leaf;     // L x kz
    std::vector<double> bar_gather_r; // K L_s x kz
    std::vector<double> bar_gather_c; // K L_s x kz
    std::vector<double> bar_coupled_r; // M_H L_s x kz
    std::vector<double> bar_coupled_c; // M_H L_s x kz
    std::vector<double> bar_coef;      // rank x kz
    std::vector<double> bar_strip_r;   // M_H L_s x kz
    std::vector<double> bar_strip_c;   // M_H L_s x kz
    std::vector<double> bar_restrict_r; // K L_s x kz
    std::vector<double> bar_restrict_c; // K L_s x kz
};

// Y = M X for a row-major batch X (N x kz); stashes stay valid until the
// next forward call with the same context.
void factor_apply_batch(const PackedFactors<double>& factors,
                        std::span<const double> a_diag, std::span<const double> x,
                        BatchApplyContext& ctx, std::span<double> y);

// Accumulates d(loss)/d(params) into grad given the upstream adjoint
// bar_y = d(loss)/dY for the forward stored in ctx. No gradient flows to X.
void factor_apply_batch_adjoint(const PackedFactors<double>& factors,
                                std::span<const double> a_diag,
                                std::span<const double> bar_y, BatchApplyContext& ctx,
                                std::span<double> grad);

struct LossGradResult {
    double loss = 0.0;
    bool degenerate = false;
    std::vector<double> grad; // packed width
};

// Loss and gradient for one smoothed probe batch. cosine: Y = M (A Z) and
// the adjoint of 1 - cos(Z, Y); sai: W = M Z with the adjoint of
// |(1/normA) A W - Z|_F^2. The degenerate case (zero image) reports a zero
// gradient and sets the flag.
LossGradResult loss_gradient(const PackedFactors<double>& factors, const CsrMatrix& A,
                             std::span<const double> z_smoothed, std::size_t kz,
                             LossKind kind, double norm_a, BatchApplyContext& ctx);

} // namespace hfp
