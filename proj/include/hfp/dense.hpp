#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace hfp {

enum class Precision { single, dbl };

// Row-major dense matrix. Storage is double; the precision tag records the
// intended arithmetic for kernels that honor it (see batched_gemm).
struct DenseMat {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data; // rows * cols, row-major
    Precision precision = Precision::dbl;

    DenseMat() = default;
    DenseMat(std::size_t r, std::size_t c, Precision p = Precision::dbl)
        : rows(r), cols(c), data(r * c, 0.0), precision(p) {}

    double& at(std::size_t i, std::size_t j) { return data[i * cols + j]; }
    double at(std::size_t i, std::size_t j) const { return data[i * cols + j]; }

    static DenseMat identity(std::size_t n);
    DenseMat transposed() const;
    double frobenius_norm() const;
    double max_abs() const;
};

// Raw row-major GEMM kernels, C(m x n) += or = op(A) * op(B).
// A may be float or double; B and C are double; accumulation is double.
template <typename T>
void gemm_nn(const T* A, const double* B, double* C, std::size_t m,
             std::size_t k, std::size_t n, bool accumulate = false);
template <typename T>
void gemm_tn(const T* A, const double* B, double* C, std::size_t m,
             std::size_t k, std::size_t n, bool accumulate = false);
// C(m x n) = A(m x k) * B(n x k)^T
template <typename T>
void gemm_nt(const T* A, const double* B, double* C, std::size_t m,
             std::size_t k, std::size_t n, bool accumulate = false);

// One element of a uniform-shape batched product.
struct GemmSpec {
    bool trans_a = false;
    bool trans_b = false;
    // When true, products are formed in single precision with a double
    // accumulator per output element; when false, plain single-precision
    // accumulation (double inputs always accumulate in double).
    bool double_accumulate = true;
};

// Per-element matrix product over a batch of (M_i, X_i) pairs sharing one
// shape. Honors the matrices' precision tags: single-tagged inputs are
// rounded to float before multiplying. Throws on nonuniform shapes.
std::vector<DenseMat> batched_gemm(const std::vector<DenseMat>& mats,
                                   const std::vector<DenseMat>& xs,
                                   const GemmSpec& spec = {});

} // namespace hfp
