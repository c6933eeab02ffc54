#include "hfp/adjoint.hpp"

#include "hfp/dense.hpp"

#include <cmath>
#include <cstring>
#include <stdexcept>

namespace hfp {

namespace {

inline void add_block(double* dst, const double* src, std::size_t len) {
    for (std::size_t i = 0; i < len; ++i) dst[i] += src[i];
}

} // namespace

BatchApplyContext::BatchApplyContext(const FactorLayout& lay, std::size_t kz_)
    : kz(kz_),
      input(lay.n * kz_),
      leaf_coef(lay.n * kz_),
      row_restrict(lay.leaf_count * lay.coarse_size * kz_),
      col_restrict(lay.leaf_count * lay.coarse_size * kz_),
      row_strip(lay.tile_count * lay.coarse_size * kz_),
      col_strip(lay.tile_count * lay.coarse_size * kz_),
      row_coef(lay.tile_count * lay.coupling_rank * kz_),
      col_coef(lay.tile_count * lay.coupling_rank * kz_),
      coupled_row(lay.tile_count * lay.coarse_size * kz_),
      coupled_col(lay.tile_count * lay.coarse_size * kz_),
      row_gather(lay.leaf_count * lay.coarse_size * kz_),
      col_gather(lay.leaf_count * lay.coarse_size * kz_),
      output(lay.n * kz_),
      bar_out(lay.n * kz_),
      bar_leaf(lay.leaf_size * kz_),
      bar_gather_r(lay.leaf_count * lay.coarse_size * kz_),
      bar_gather_c(lay.leaf_count * lay.coarse_size * kz_),
      bar_coupled_r(lay.tile_count * lay.coarse_size * kz_),
      bar_coupled_c(lay.tile_count * lay.coarse_size * kz_),
      bar_coef(lay.coupling_rank * kz_),
      bar_strip_r(lay.tile_count * lay.coarse_size * kz_),
      bar_strip_c(lay.tile_count * lay.coarse_size * kz_),
      bar_restrict_r(lay.leaf_count * lay.coarse_size * kz_),
      bar_restrict_c(lay.leaf_count * lay.coarse_size * kz_) {}

void factor_apply_batch(const PackedFactors<double>& factors,
                        std::span<const double> a_diag, std::span<const double> x,
                        BatchApplyContext& ctx, std::span<double> y) {
    const FactorLayout& lay = factors.layout;
    const std::size_t n = lay.n, l = lay.leaf_size, ls = lay.coarse_size,
                      rk = lay.coupling_rank, kz = ctx.kz;
    if (x.size() != n * kz || y.size() != n * kz || a_diag.size() != n)
        throw std::invalid_argument("factor_apply_batch: size mismatch");

    std::memcpy(ctx.input.data(), x.data(), n * kz * sizeof(double));
    const double* in = ctx.input.data();

    // Diagonal term.
    for (std::size_t k = 0; k < lay.leaf_count; ++k) {
        const double* f = factors.data.data() + lay.leaf_factor(k);
        double* h = ctx.leaf_coef.data() + k * l * kz;
        gemm_tn(f, in + k * l * kz, h, l, l, kz);
        gemm_nn(f, h, y.data() + k * l * kz, l, l, kz);
    }

    // Restriction.
    for (std::size_t k = 0; k < lay.leaf_count; ++k) {
        gemm_tn(factors.data.data() + lay.bridge_u(k), in + k * l * kz,
                ctx.row_restrict.data() + k * ls * kz, ls, l, kz);
        gemm_tn(factors.data.data() + lay.bridge_v(k), in + k * l * kz,
                ctx.col_restrict.data() + k * ls * kz, ls, l, kz);
    }

    // Strip aggregation and coarse coupling.
    for (const TileSpec& t : lay.tiles) {
        double* sr = ctx.row_strip.data() + t.id * ls * kz;
        double* sc = ctx.col_strip.data() + t.id * ls * kz;
        std::memset(sr, 0, ls * kz * sizeof(double));
        std::memset(sc, 0, ls * kz * sizeof(double));
        for (std::size_t s = 0; s < t.span; ++s) {
            add_block(sr, ctx.row_restrict.data() + (t.row_begin + s) * ls * kz, ls * kz);
            add_block(sc, ctx.col_restrict.data() + (t.col_begin + s) * ls * kz, ls * kz);
        }
        const double* u = factors.data.data() + lay.tile_u(t.id);
        const double* v = factors.data.data() + lay.tile_v(t.id);
        double* pu = ctx.row_coef.data() + t.id * rk * kz;
        double* qv = ctx.col_coef.data() + t.id * rk * kz;
        gemm_tn(u, sr, pu, rk, ls, kz);                                  // U^T s_r
        gemm_nn(v, pu, ctx.coupled_col.data() + t.id * ls * kz, ls, rk, kz); // B^T s_r
        gemm_tn(v, sc, qv, rk, ls, kz);                                  // V^T s_c
        gemm_nn(u, qv, ctx.coupled_row.data() + t.id * ls * kz, ls, rk, kz); // B s_c
    }

    // Gather tile outputs back to leaves.
    std::memset(ctx.row_gather.data(), 0, ctx.row_gather.size() * sizeof(double));
    std::memset(ctx.col_gather.data(), 0, ctx.col_gather.size() * sizeof(double));
    for (const TileSpec& t : lay.tiles) {
        for (std::size_t s = 0; s < t.span; ++s) {
            add_block(ctx.row_gather.data() + (t.row_begin + s) * ls * kz,
                      ctx.coupled_row.data() + t.id * ls * kz, ls * kz);
            add_block(ctx.col_gather.data() + (t.col_begin + s) * ls * kz,
                      ctx.coupled_col.data() + t.id * ls * kz, ls * kz);
        }
    }

    // Prolongation.
    for (std::size_t k = 0; k < lay.leaf_count; ++k) {
        gemm_nn(factors.data.data() + lay.bridge_u(k),
                ctx.row_gather.data() + k * ls * kz, y.data() + k * l * kz, l, ls, kz,
                /*accumulate=*/true);
        gemm_nn(factors.data.data() + lay.bridge_v(k),
                ctx.col_gather.data() + k * ls * kz, y.data() + k * l * kz, l, ls, kz,
                /*accumulate=*/true);
    }

    // Gate and optional SPD shift (the shift is a knob, not a parameter).
    const double* gate = factors.data.data() + lay.gate();
    const double shift = factors.spd_shift();
    for (std::size_t i = 0; i < n; ++i) {
        const double g = gate[i] / a_diag[i] + shift;
        const double* xi = in + i * kz;
        double* yi = y.data() + i * kz;
        for (std::size_t j = 0; j < kz; ++j) yi[j] += g * xi[j];
    }

    std::memcpy(ctx.output.data(), y.data(), n * kz * sizeof(double));
}

void factor_apply_batch_adjoint(const PackedFactors<double>& factors,
                                std::span<const double> a_diag,
                                std::span<const double> bar_y, BatchApplyContext& ctx,
                                std::span<double> grad) {
    const FactorLayout& lay = factors.layout;
    const std::size_t n = lay.n, l = lay.leaf_size, ls = lay.coarse_size,
                      rk = lay.coupling_rank, kz = ctx.kz;
    if (bar_y.size() != n * kz || grad.size() != lay.total)
        throw std::invalid_argument("factor_apply_batch_adjoint: size mismatch");
    const double* in = ctx.input.data();

    // Gate adjoint.
    {
        double* gbar = grad.data() + lay.gate();
        for (std::size_t i = 0; i < n; ++i) {
            const double* bi = bar_y.data() + i * kz;
            const double* xi = in + i * kz;
            double acc = 0.0;
            for (std::size_t j = 0; j < kz; ++j) acc += bi[j] * xi[j];
            gbar[i] += acc / a_diag[i];
        }
    }

    // Diagonal blocks: Y_k = F_k (F_k^T G_k) with H_k stashed.
    for (std::size_t k = 0; k < lay.leaf_count; ++k) {
        const double* f = factors.data.data() + lay.leaf_factor(k);
        const double* h = ctx.leaf_coef.data() + k * l * kz;
        const double* by = bar_y.data() + k * l * kz;
        double* fbar = grad.data() + lay.leaf_factor(k);
        // bar_F += bar_Y H^T
        gemm_nt(by, h, fbar, l, kz, l, /*accumulate=*/true);
        // W = F^T bar_Y; bar_F += G W^T
        gemm_tn(f, by, ctx.bar_leaf.data(), l, l, kz);
        gemm_nt(in + k * l * kz, ctx.bar_leaf.data(), fbar, l, kz, l, /*accumulate=*/true);
    }

    // Prolongation adjoint: Delta y_k = bridge_u[k] a_k + bridge_v[k] b_k.
    for (std::size_t k = 0; k < lay.leaf_count; ++k) {
        const double* by = bar_y.data() + k * l * kz;
        gemm_nt(by, ctx.row_gather.data() + k * ls * kz,
                grad.data() + lay.bridge_u(k), l, kz, ls, /*accumulate=*/true);
        gemm_nt(by, ctx.col_gather.data() + k * ls * kz,
                grad.data() + lay.bridge_v(k), l, kz, ls, /*accumulate=*/true);
        gemm_tn(factors.data.data() + lay.bridge_u(k), by,
                ctx.bar_gather_r.data() + k * ls * kz, ls, l, kz);
        gemm_tn(factors.data.data() + lay.bridge_v(k), by,
                ctx.bar_gather_c.data() + k * ls * kz, ls, l, kz);
    }

    // Gather adjoint: tiles sum the bar-gathers of their member leaves.
    for (const TileSpec& t : lay.tiles) {
        double* br = ctx.bar_coupled_r.data() + t.id * ls * kz;
        double* bc = ctx.bar_coupled_c.data() + t.id * ls * kz;
        std::memset(br, 0, ls * kz * sizeof(double));
        std::memset(bc, 0, ls * kz * sizeof(double));
        for (std::size_t s = 0; s < t.span; ++s) {
            add_block(br, ctx.bar_gather_r.data() + (t.row_begin + s) * ls * kz, ls * kz);
            add_block(bc, ctx.bar_gather_c.data() + (t.col_begin + s) * ls * kz, ls * kz);
        }
    }

    // Coupling adjoint through both directional products.
    for (const TileSpec& t : lay.tiles) {
        const double* u = factors.data.data() + lay.tile_u(t.id);
        const double* v = factors.data.data() + lay.tile_v(t.id);
        double* ubar = grad.data() + lay.tile_u(t.id);
        double* vbar = grad.data() + lay.tile_v(t.id);
        const double* sr = ctx.row_strip.data() + t.id * ls * kz;
        const double* sc = ctx.col_strip.data() + t.id * ls * kz;
        const double* pu = ctx.row_coef.data() + t.id * rk * kz;
        const double* qv = ctx.col_coef.data() + t.id * rk * kz;
        const double* btr = ctx.bar_coupled_r.data() + t.id * ls * kz;
        const double* btc = ctx.bar_coupled_c.data() + t.id * ls * kz;
        double* bsr = ctx.bar_strip_r.data() + t.id * ls * kz;
        double* bsc = ctx.bar_strip_c.data() + t.id * ls * kz;

        // coupled_row = U (V^T s_c): bar_U += bar_tr qv^T; bar_qv = U^T bar_tr;
        // bar_V += s_c bar_qv^T; bar_sc = V bar_qv.
        gemm_nt(btr, qv, ubar, ls, kz, rk, /*accumulate=*/true);
        gemm_tn(u, btr, ctx.bar_coef.data(), rk, ls, kz);
        gemm_nt(sc, ctx.bar_coef.data(), vbar, ls, kz, rk, /*accumulate=*/true);
        gemm_nn(v, ctx.bar_coef.data(), bsc, ls, rk, kz);

        // coupled_col = V (U^T s_r): mirror image.
        gemm_nt(btc, pu, vbar, ls, kz, rk, /*accumulate=*/true);
        gemm_tn(v, btc, ctx.bar_coef.data(), rk, ls, kz);
        gemm_nt(sr, ctx.bar_coef.data(), ubar, ls, kz, rk, /*accumulate=*/true);
        gemm_nn(u, ctx.bar_coef.data(), bsr, ls, rk, kz);
    }

    // Strip adjoint back to per-leaf restrictions.
    std::memset(ctx.bar_restrict_r.data(), 0, ctx.bar_restrict_r.size() * sizeof(double));
    std::memset(ctx.bar_restrict_c.data(), 0, ctx.bar_restrict_c.size() * sizeof(double));
    for (const TileSpec& t : lay.tiles) {
        for (std::size_t s = 0; s < t.span; ++s) {
            add_block(ctx.bar_restrict_r.data() + (t.row_begin + s) * ls * kz,
                      ctx.bar_strip_r.data() + t.id * ls * kz, ls * kz);
            add_block(ctx.bar_restrict_c.data() + (t.col_begin + s) * ls * kz,
                      ctx.bar_strip_c.data() + t.id * ls * kz, ls * kz);
        }
    }

    // Restriction adjoint: bar_bridge_u += G bar_ru^T, bar_bridge_v += G bar_rv^T.
    for (std::size_t k = 0; k < lay.leaf_count; ++k) {
        gemm_nt(in + k * l * kz, ctx.bar_restrict_r.data() + k * ls * kz,
                grad.data() + lay.bridge_u(k), l, kz, ls, /*accumulate=*/true);
        gemm_nt(in + k * l * kz, ctx.bar_restrict_c.data() + k * ls * kz,
                grad.data() + lay.bridge_v(k), l, kz, ls, /*accumulate=*/true);
    }
}

LossGradResult loss_gradient(const PackedFactors<double>& factors, const CsrMatrix& A,
                             std::span<const double> z_smoothed, std::size_t kz,
                             LossKind kind, double norm_a, BatchApplyContext& ctx) {
    const std::size_t n = factors.layout.n;
    if (z_smoothed.size() != n * kz)
        throw std::invalid_argument("loss_gradient: probe batch size mismatch");
    LossGradResult res;
    res.grad.assign(factors.layout.total, 0.0);
    const auto diag = A.diagonal();

    std::vector<double> y(n * kz);
    if (kind == LossKind::cosine) {
        // Y = M (A Z); dL/dY from the global cosine.
        std::vector<double> az(n * kz);
        spmm(A, z_smoothed, kz, az);
        factor_apply_batch(factors, diag, az, ctx, y);
        double zy = 0.0, zz = 0.0, yy = 0.0;
        for (std::size_t i = 0; i < y.size(); ++i) {
            zy += z_smoothed[i] * y[i];
            zz += z_smoothed[i] * z_smoothed[i];
            yy += y[i] * y[i];
        }
        if (zz == 0.0 || yy == 0.0) {
            res.degenerate = true;
            return res;
        }
        const double nz = std::sqrt(zz), ny = std::sqrt(yy);
        res.loss = 1.0 - zy / (nz * ny);
        std::vector<double> bar_y(n * kz);
        const double c1 = 1.0 / (nz * ny);
        const double c2 = zy / (nz * ny * ny * ny);
        for (std::size_t i = 0; i < y.size(); ++i)
            bar_y[i] = -(z_smoothed[i] * c1 - y[i] * c2);
        factor_apply_batch_adjoint(factors, diag, bar_y, ctx, res.grad);
    } else {
        // W = M Z; loss = |(1/normA) A W - Z|^2; dL/dW = (2/normA) A q.
        factor_apply_batch(factors, diag, z_smoothed, ctx, y);
        std::vector<double> q(n * kz);
        spmm(A, y, kz, q);
        double loss = 0.0;
        for (std::size_t i = 0; i < q.size(); ++i) {
            q[i] = q[i] / norm_a - z_smoothed[i];
            loss += q[i] * q[i];
        }
        res.loss = loss;
        std::vector<double> bar_w(n * kz);
        spmm(A, q, kz, bar_w); // A symmetric
        const double scale = 2.0 / norm_a;
        for (double& v : bar_w) v *= scale;
        factor_apply_batch_adjoint(factors, diag, bar_w, ctx, res.grad);
    }
    return res;
}

} // namespace hfp
