#pragma once

#include "hfp/dense.hpp"

#include <vector>

namespace hfp {

struct EigResult {
    std::vector<double> eigenvalues; // ascending
    DenseMat vectors;                // orthonormal eigenvectors as columns
};

// Symmetric eigendecomposition. Rejects inputs whose asymmetry exceeds
// 1e-12 relative to max|A| and sizes above dense_cap. Cyclic Jacobi
// rotations for n <= 128; Householder tridiagonalization with implicit-shift
// QL above (see design notes in the repo ledger).
EigResult sym_eig(const DenseMat& A, bool compute_vectors = true,
                  std::size_t dense_cap = 4096);

// Descending singular values. Gram-matrix eigenvalues for min dimension
// <= 512, one-sided Jacobi orthogonalization above.
std::vector<double> singular_values(const DenseMat& B);

} // namespace hfp
