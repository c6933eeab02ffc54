#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace hfp {

// Compressed-sparse-row matrix, 64-bit values. For SPD use the pattern and
// values are symmetric; validate() checks the structural invariants.
struct CsrMatrix {
    std::size_t n_rows = 0;
    std::size_t n_cols = 0;
    std::vector<std::uint64_t> row_offsets; // length n_rows + 1
    std::vector<std::uint32_t> col_indices; // strictly increasing per row
    std::vector<double> values;

    std::size_t nnz() const { return values.size(); }

    // Throws std::invalid_argument on any violated structural invariant.
    // check_symmetric additionally requires A_ij == A_ji exactly.
    void validate(bool check_symmetric = false) const;

    std::vector<double> diagonal() const;

    // Single-precision view of the values (copy).
    std::vector<float> values_f32() const;

    double frobenius_norm() const;
};

// y = A x, accumulated in double precision.
void spmv(const CsrMatrix& A, std::span<const double> x, std::span<double> y);

std::vector<double> spmv(const CsrMatrix& A, std::span<const double> x);

// Y = A X for row-major X (n_cols x k), Y (n_rows x k).
void spmm(const CsrMatrix& A, std::span<const double> X, std::size_t k,
          std::span<double> Y);

} // namespace hfp
