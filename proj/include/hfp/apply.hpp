#pragma once

#include "hfp/dense.hpp"
#include "hfp/factor_tensor.hpp"

#include <span>
#include <vector>

namespace hfp {

// Preallocated buffers for one apply; no allocation happens inside apply().
// Stage intermediates live at storage precision T; strip aggregation and the
// output accumulate in double.
template <typename T>
struct ApplyWorkspace {
    explicit ApplyWorkspace(const FactorLayout& layout);

    std::vector<T> input;        // N, cast of r
    std::vector<T> leaf_coef;    // L scratch (F_k^T r_k)
    std::vector<T> row_restrict; // K x L_s
    std::vector<T> col_restrict; // K x L_s
    std::vector<T> strip_cast;   // L_s scratch
    std::vector<T> coarse_coef;  // coupling-rank scratch
    std::vector<T> coupled_row;  // M_H x L_s (B_m applied to column strips)
    std::vector<T> coupled_col;  // M_H x L_s (B_m^T applied to row strips)
    std::vector<T> gather_cast;  // L_s scratch
    std::vector<double> row_strip;  // M_H x L_s
    std::vector<double> col_strip;  // M_H x L_s
    std::vector<double> row_gather; // K x L_s
    std::vector<double> col_gather; // K x L_s

    std::size_t multiply_count = 0;

    // Sum of buffer capacities; constant across applies (no-alloc audit).
    std::size_t capacity_signature() const;
};

// y = M r: block-diagonal term, the restriction / strip-aggregation /
// coarse-coupling / prolongation chain, then the gated Jacobi term
// diag(gate) diag(A)^{-1} r added last.
template <typename T>
void apply(const PackedFactors<T>& factors, std::span<const double> a_diag,
           std::span<const double> r, ApplyWorkspace<T>& ws, std::span<double> y);

template <typename T>
std::vector<double> apply(const PackedFactors<T>& factors, std::span<const double> a_diag,
                          std::span<const double> r, ApplyWorkspace<T>& ws);

// Dense assembly oracle (double arithmetic on the stored factors):
// blockdiag(F_k F_k^T) + per-tile bridge-coupling products mirrored into
// both triangles + diag(gate)/diag(A). Refuses n above dense_cap.
template <typename T>
DenseMat assemble_dense(const PackedFactors<T>& factors, std::span<const double> a_diag,
                        std::size_t dense_cap = 4096);

// Relative disagreement between the chain apply and the dense oracle on one
// vector; exercises the transposed-tile reuse.
template <typename T>
double apply_transposed_tiles_check(const PackedFactors<T>& factors,
                                    std::span<const double> a_diag,
                                    std::span<const double> r);

extern template struct ApplyWorkspace<float>;
extern template struct ApplyWorkspace<double>;
extern template void apply<float>(const PackedFactors<float>&, std::span<const double>,
                                  std::span<const double>, ApplyWorkspace<float>&,
                                  std::span<double>);
extern template void apply<double>(const PackedFactors<double>&, std::span<const double>,
                                   std::span<const double>, ApplyWorkspace<double>&,
                                   std::span<double>);
extern template std::vector<double> apply<float>(const PackedFactors<float>&,
                                                 std::span<const double>,
                                                 std::span<const double>,
                                                 ApplyWorkspace<float>&);
extern template std::vector<double> apply<double>(const PackedFactors<double>&,
                                                  std::span<const double>,
                                                  std::span<const double>,
                                                  ApplyWorkspace<double>&);
extern template DenseMat assemble_dense<float>(const PackedFactors<float>&,
                                               std::span<const double>, std::size_t);
extern template DenseMat assemble_dense<double>(const PackedFactors<double>&,
                                                std::span<const double>, std::size_t);
extern template double apply_transposed_tiles_check<float>(const PackedFactors<float>&,
                                                           std::span<const double>,
                                                           std::span<const double>);
extern template double apply_transposed_tiles_check<double>(const PackedFactors<double>&,
                                                            std::span<const double>,
                                                            std::span<const double>);

} // namespace hfp
