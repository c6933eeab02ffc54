#include "hfp/apply.hpp"

#include <cmath>
#include <stdexcept>

namespace hfp {

namespace {

// y = M x with M (rows x cols) row-major; double accumulator per output.
template <typename T>
inline void matvec(const T* M, std::size_t rows, std::size_t cols, const T* x, T* y,
                   std::size_t& mults) {
    for (std::size_t i = 0; i < rows; ++i) {
        double acc = 0.0;
        const T* mi = M + i * cols;
        for (std::size_t j = 0; j < cols; ++j)
            acc += static_cast<double>(mi[j]) * static_cast<double>(x[j]);
        y[i] = static_cast<T>(acc);
    }
    mults += rows * cols;
}

// y = M^T x.
template <typename T>
inline void matvec_t(const T* M, std::size_t rows, std::size_t cols, const T* x, T* y,
                     std::size_t& mults) {
    for (std::size_t j = 0; j < cols; ++j) y[j] = T(0);
    for (std::size_t i = 0; i < rows; ++i) {
        const T xi = x[i];
        const T* mi = M + i * cols;
        for (std::size_t j = 0; j < cols; ++j) y[j] += mi[j] * xi;
    }
    mults += rows * cols;
}

// Transposed matvec with an explicit double accumulator (used where the
// result feeds a double buffer directly).
template <typename T>
inline void matvec_add_double(const T* M, std::size_t rows, std::size_t cols, const T* x,
                              double* y, std::size_t& mults) {
    for (std::size_t i = 0; i < rows; ++i) {
        double acc = 0.0;
        const T* mi = M + i * cols;
        for (std::size_t j = 0; j < cols; ++j)
            acc += static_cast<double>(mi[j]) * static_cast<double>(x[j]);
        y[i] += acc;
    }
    mults += rows * cols;
}

} // namespace

template <typename T>
ApplyWorkspace<T>::ApplyWorkspace(const FactorLayout& layout)
    : input(layout.n),
      leaf_coef(layout.leaf_size),
      row_restrict(layout.leaf_count * layout.coarse_size),
      col_restrict(layout.leaf_count * layout.coarse_size),
      strip_cast(layout.coarse_size),
      coarse_coef(layout.coupling_rank),
      coupled_row(layout.tile_count * layout.coarse_size),
      coupled_col(layout.tile_count * layout.coarse_size),
      gather_cast(layout.coarse_size),
      row_strip(layout.tile_count * layout.coarse_size),
      col_strip(layout.tile_count * layout.coarse_size),
      row_gather(layout.leaf_count * layout.coarse_size),
      col_gather(layout.leaf_count * layout.coarse_size) {}

template <typename T>
std::size_t ApplyWorkspace<T>::capacity_signature() const {
    return input.capacity() + leaf_coef.capacity() + row_restrict.capacity() +
           col_restrict.capacity() + strip_cast.capacity() + coarse_coef.capacity() +
           coupled_row.capacity() + coupled_col.capacity() + gather_cast.capacity() +
           row_strip.capacity() + col_strip.capacity() + row_gather.capacity() +
           col_gather.capacity();
}

template <typename T>
void apply(const PackedFactors<T>& factors, std::span<const double> a_diag,
           std::span<const double> r, ApplyWorkspace<T>& ws, std::span<double> y) {
    const FactorLayout& lay = factors.layout;
    const std::size_t n = lay.n, l = lay.leaf_size, ls = lay.coarse_size,
                      rk = lay.coupling_rank, k_count = lay.leaf_count;
    if (r.size() != n || y.size() != n || a_diag.size() != n)
        throw std::invalid_argument("apply: length mismatch");
    if (ws.input.size() != n)
        throw std::invalid_argument("apply: workspace does not match layout");

    for (std::size_t i = 0; i < n; ++i) ws.input[i] = static_cast<T>(r[i]);
    const T* rin = ws.input.data();

    // Block-diagonal term: y_k = F_k (F_k^T r_k).
    for (std::size_t i = 0; i < n; ++i) y[i] = 0.0;
    for (std::size_t k = 0; k < k_count; ++k) {
        const T* f = factors.data.data() + lay.leaf_factor(k);
        matvec_t(f, l, l, rin + k * l, ws.leaf_coef.data(), ws.multiply_count);
        matvec_add_double(f, l, l, ws.leaf_coef.data(), y.data() + k * l,
                          ws.multiply_count);
    }

    // Restriction to the coarse coordinates of every leaf.
    for (std::size_t k = 0; k < k_count; ++k) {
        matvec_t(factors.data.data() + lay.bridge_u(k), l, ls, rin + k * l,
                 ws.row_restrict.data() + k * ls, ws.multiply_count);
        matvec_t(factors.data.data() + lay.bridge_v(k), l, ls, rin + k * l,
                 ws.col_restrict.data() + k * ls, ws.multiply_count);
    }

    // Strip aggregation (double accumulation), then coarse coupling through
    // the factored B_m = U_m V_m^T without materializing it.
    for (const TileSpec& t : lay.tiles) {
        double* sr = ws.row_strip.data() + t.id * ls;
        double* sc = ws.col_strip.data() + t.id * ls;
        for (std::size_t j = 0; j < ls; ++j) sr[j] = sc[j] = 0.0;
        for (std::size_t s = 0; s < t.span; ++s) {
            const T* ur = ws.row_restrict.data() + (t.row_begin + s) * ls;
            const T* vc = ws.col_restrict.data() + (t.col_begin + s) * ls;
            for (std::size_t j = 0; j < ls; ++j) {
                sr[j] += static_cast<double>(ur[j]);
                sc[j] += static_cast<double>(vc[j]);
            }
        }
        const T* u = factors.data.data() + lay.tile_u(t.id);
        const T* v = factors.data.data() + lay.tile_v(t.id);
        // coupled_col = B^T s_r = V (U^T s_r)
        for (std::size_t j = 0; j < ls; ++j) ws.strip_cast[j] = static_cast<T>(sr[j]);
        matvec_t(u, ls, rk, ws.strip_cast.data(), ws.coarse_coef.data(),
                 ws.multiply_count);
        matvec(v, ls, rk, ws.coarse_coef.data(), ws.coupled_col.data() + t.id * ls,
               ws.multiply_count);
        // coupled_row = B s_c = U (V^T s_c)
        for (std::size_t j = 0; j < ls; ++j) ws.strip_cast[j] = static_cast<T>(sc[j]);
        matvec_t(v, ls, rk, ws.strip_cast.data(), ws.coarse_coef.data(),
                 ws.multiply_count);
        matvec(u, ls, rk, ws.coarse_coef.data(), ws.coupled_row.data() + t.id * ls,
               ws.multiply_count);
    }

    // Redistribute tile outputs to their member leaves (double accumulation).
    for (double& v : ws.row_gather) v = 0.0;
    for (double& v : ws.col_gather) v = 0.0;
    for (const TileSpec& t : lay.tiles) {
        const T* tr = ws.coupled_row.data() + t.id * ls;
        const T* tc = ws.coupled_col.data() + t.id * ls;
        for (std::size_t s = 0; s < t.span; ++s) {
            double* gr = ws.row_gather.data() + (t.row_begin + s) * ls;
            double* gc = ws.col_gather.data() + (t.col_begin + s) * ls;
            for (std::size_t j = 0; j < ls; ++j) {
                gr[j] += static_cast<double>(tr[j]);
                gc[j] += static_cast<double>(tc[j]);
            }
        }
    }

    // Prolongation back to node resolution.
    for (std::size_t k = 0; k < k_count; ++k) {
        for (std::size_t j = 0; j < ls; ++j)
            ws.gather_cast[j] = static_cast<T>(ws.row_gather[k * ls + j]);
        matvec_add_double(factors.data.data() + lay.bridge_u(k), l, ls,
                          ws.gather_cast.data(), y.data() + k * l, ws.multiply_count);
        for (std::size_t j = 0; j < ls; ++j)
            ws.gather_cast[j] = static_cast<T>(ws.col_gather[k * ls + j]);
        matvec_add_double(factors.data.data() + lay.bridge_v(k), l, ls,
                          ws.gather_cast.data(), y.data() + k * l, ws.multiply_count);
    }

    // Gated Jacobi term, added last; optional SPD shift rides along.
    const T* gate = factors.data.data() + lay.gate();
    const double shift = factors.spd_shift();
    for (std::size_t i = 0; i < n; ++i)
        y[i] += static_cast<double>(gate[i]) * r[i] / a_diag[i] + shift * r[i];
    ws.multiply_count += n;
}

template <typename T>
std::vector<double> apply(const PackedFactors<T>& factors, std::span<const double> a_diag,
                          std::span<const double> r, ApplyWorkspace<T>& ws) {
    std::vector<double> y(factors.layout.n);
    apply(factors, a_diag, r, ws, y);
    return y;
}

template <typename T>
DenseMat assemble_dense(const PackedFactors<T>& factors, std::span<const double> a_diag,
                        std::size_t dense_cap) {
    const FactorLayout& lay = factors.layout;
    const std::size_t n = lay.n, l = lay.leaf_size, ls = lay.coarse_size,
                      rk = lay.coupling_rank;
    if (n > dense_cap)
        throw std::invalid_argument("assemble_dense: size exceeds dense cap");
    if (a_diag.size() != n) throw std::invalid_argument("assemble_dense: diag length");

    DenseMat M(n, n);

    // Diagonal blocks F_k F_k^T.
    std::vector<double> block(l * l);
    for (std::size_t k = 0; k < lay.leaf_count; ++k) {
        const T* f = factors.data.data() + lay.leaf_factor(k);
        for (std::size_t i = 0; i < l; ++i)
            for (std::size_t j = 0; j <= i; ++j) {
                double acc = 0.0;
                for (std::size_t p = 0; p < l; ++p)
                    acc += static_cast<double>(f[i * l + p]) *
                           static_cast<double>(f[j * l + p]);
                block[i * l + j] = block[j * l + i] = acc;
            }
        const std::size_t base = k * l;
        for (std::size_t i = 0; i < l; ++i)
            for (std::size_t j = 0; j < l; ++j) M.at(base + i, base + j) = block[i * l + j];
    }

    // Off-diagonal tiles: bridge_u[k_r] U_m V_m^T bridge_v[k_c]^T, mirrored.
    std::vector<double> left(l * rk), right(l * rk);
    for (const TileSpec& t : lay.tiles) {
        const T* u = factors.data.data() + lay.tile_u(t.id);
        const T* v = factors.data.data() + lay.tile_v(t.id);
        for (std::size_t sr = 0; sr < t.span; ++sr) {
            const std::size_t kr = t.row_begin + sr;
            const T* bu = factors.data.data() + lay.bridge_u(kr);
            // left = bridge_u[kr] * U  (l x rk)
            for (std::size_t i = 0; i < l; ++i)
                for (std::size_t q = 0; q < rk; ++q) {
                    double acc = 0.0;
                    for (std::size_t p = 0; p < ls; ++p)
                        acc += static_cast<double>(bu[i * ls + p]) *
                               static_cast<double>(u[p * rk + q]);
                    left[i * rk + q] = acc;
                }
            for (std::size_t sc = 0; sc < t.span; ++sc) {
                const std::size_t kc = t.col_begin + sc;
                const T* bv = factors.data.data() + lay.bridge_v(kc);
                for (std::size_t i = 0; i < l; ++i)
                    for (std::size_t q = 0; q < rk; ++q) {
                        double acc = 0.0;
                        for (std::size_t p = 0; p < ls; ++p)
                            acc += static_cast<double>(bv[i * ls + p]) *
                                   static_cast<double>(v[p * rk + q]);
                        right[i * rk + q] = acc;
                    }
                const std::size_t rbase = kr * l, cbase = kc * l;
                for (std::size_t i = 0; i < l; ++i)
                    for (std::size_t j = 0; j < l; ++j) {
                        double acc = 0.0;
                        for (std::size_t q = 0; q < rk; ++q)
                            acc += left[i * rk + q] * right[j * rk + q];
                        M.at(rbase + i, cbase + j) = acc;
                        M.at(cbase + j, rbase + i) = acc; // exact mirror
                    }
            }
        }
    }

    // Gate and optional SPD shift.
    const T* gate = factors.data.data() + lay.gate();
    const double shift = factors.spd_shift();
    for (std::size_t i = 0; i < n; ++i)
        M.at(i, i) += static_cast<double>(gate[i]) / a_diag[i] + shift;
    return M;
}

template <typename T>
double apply_transposed_tiles_check(const PackedFactors<T>& factors,
                                    std::span<const double> a_diag,
                                    std::span<const double> r) {
    ApplyWorkspace<T> ws(factors.layout);
    std::vector<double> y = apply(factors, a_diag, r, ws);
    DenseMat M = assemble_dense(factors, a_diag);
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < factors.layout.n; ++i) {
        double ref = 0.0;
        for (std::size_t j = 0; j < factors.layout.n; ++j) ref += M.at(i, j) * r[j];
        num += (y[i] - ref) * (y[i] - ref);
        den += ref * ref;
    }
    return std::sqrt(num) / std::sqrt(std::max(den, 1e-300));
}

template struct ApplyWorkspace<float>;
template struct ApplyWorkspace<double>;
template void apply<float>(const PackedFactors<float>&, std::span<const double>,
                           std::span<const double>, ApplyWorkspace<float>&,
                           std::span<double>);
template void apply<double>(const PackedFactors<double>&, std::span<const double>,
                            std::span<const double>, ApplyWorkspace<double>&,
                            std::span<double>);
template std::vector<double> apply<float>(const PackedFactors<float>&,
                                          std::span<const double>,
                                          std::span<const double>, ApplyWorkspace<float>&);
template std::vector<double> apply<double>(const PackedFactors<double>&,
                                           std::span<const double>,
                                           std::span<const double>,
                                           ApplyWorkspace<double>&);
template DenseMat assemble_dense<float>(const PackedFactors<float>&,
                                        std::span<const double>, std::size_t);
template DenseMat assemble_dense<double>(const PackedFactors<double>&,
                                         std::span<const double>, std::size_t);
template double apply_transposed_tiles_check<float>(const PackedFactors<float>&,
                                                    std::span<const double>,
                                                    std::span<const double>);
template double apply_transposed_tiles_check<double>(const PackedFactors<double>&,
                                                     std::span<const double>,
                                                     std::span<const double>);

} // namespace hfp
