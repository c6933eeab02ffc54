#include "hfp/csr.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace hfp {

void CsrMatrix::validate(bool check_symmetric) const {
    if (row_offsets.size() != n_rows + 1)
        throw std::invalid_argument("csr: row_offsets length != n_rows+1");
    if (row_offsets.front() != 0)
        throw std::invalid_argument("csr: row_offsets[0] != 0");
    if (row_offsets.back() != col_indices.size() ||
        col_indices.size() != values.size())
        throw std::invalid_argument("csr: nnz mismatch");
    for (std::size_t i = 0; i < n_rows; ++i) {
        if (row_offsets[i] > row_offsets[i + 1])
            throw std::invalid_argument("csr: row_offsets not nondecreasing");
        for (std::uint64_t p = row_offsets[i]; p < row_offsets[i + 1]; ++p) {
            if (col_indices[p] >= n_cols)
                throw std::invalid_argument("csr: column index out of range");
            if (p > row_offsets[i] && col_indices[p] <= col_indices[p - 1])
                throw std::invalid_argument(
                    "csr: column indices not strictly increasing in row " +
                    std::to_string(i));
        }
    }
    if (check_symmetric) {
        if (n_rows != n_cols)
            throw std::invalid_argument("csr: symmetric check on non-square");
        auto entry = [&](std::size_t r, std::uint32_t c) -> double {
            std::uint64_t lo = row_offsets[r], hi = row_offsets[r + 1];
            while (lo < hi) {
                std::uint64_t mid = (lo + hi) / 2;
                if (col_indices[mid] < c)
                    lo = mid + 1;
                else
                    hi = mid;
            }
            return (lo < row_offsets[r + 1] && col_indices[lo] == c)
                       ? values[lo]
                       : 0.0;
        };
        for (std::size_t i = 0; i < n_rows; ++i)
            for (std::uint64_t p = row_offsets[i]; p < row_offsets[i + 1]; ++p)
                if (values[p] != entry(col_indices[p], static_cast<std::uint32_t>(i)))
                    throw std::invalid_argument("csr: values not symmetric");
    }
}

std::vector<double> CsrMatrix::diagonal() const {
    std::vector<double> d(n_rows, 0.0);
    for (std::size_t i = 0; i < n_rows; ++i)
        for (std::uint64_t p = row_offsets[i]; p < row_offsets[i + 1]; ++p)
            if (col_indices[p] == i) d[i] = values[p];
    return d;
}

std::vector<float> CsrMatrix::values_f32() const {
    return std::vector<float>(values.begin(), values.end());
}

double CsrMatrix::frobenius_norm() const {
    double s = 0.0;
    for (double v : values) s += v * v;
    return std::sqrt(s);
}

void spmv(const CsrMatrix& A, std::span<const double> x, std::span<double> y) {
    if (x.size() != A.n_cols || y.size() != A.n_rows)
        throw std::invalid_argument("spmv: dimension mismatch");
    for (std::size_t i = 0; i < A.n_rows; ++i) {
        double acc = 0.0;
        for (std::uint64_t p = A.row_offsets[i]; p < A.row_offsets[i + 1]; ++p)
            acc += A.values[p] * x[A.col_indices[p]];
        y[i] = acc;
    }
}

std::vector<double> spmv(const CsrMatrix& A, std::span<const double> x) {
    std::vector<double> y(A.n_rows);
    spmv(A, x, y);
    return y;
}

void spmm(const CsrMatrix& A, std::span<const double> X, std::size_t k,
          std::span<double> Y) {
    if (X.size() != A.n_cols * k || Y.size() != A.n_rows * k)
        throw std::invalid_argument("spmm: dimension mismatch");
    for (std::size_t i = 0; i < A.n_rows; ++i) {
        double* yi = Y.data() + i * k;
        for (std::size_t j = 0; j < k; ++j) yi[j] = 0.0;
        for (std::uint64_t p = A.row_offsets[i]; p < A.row_offsets[i + 1]; ++p) {
            const double a = A.values[p];
            const double* xr = X.data() + static_cast<std::size_t>(A.col_indices[p]) * k;
            for (std::size_t j = 0; j < k; ++j) yi[j] += a * xr[j];
        }
    }
}

} // namespace hfp
