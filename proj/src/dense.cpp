#include "hfp/dense.hpp"

#include <cmath>
#include <stdexcept>

namespace hfp {

DenseMat DenseMat::identity(std::size_t n) {
    DenseMat I(n, n);
    for (std::size_t i = 0; i < n; ++i) I.at(i, i) = 1.0;
    return I;
}

DenseMat DenseMat::transposed() const {
    DenseMat T(cols, rows, precision);
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < cols; ++j) T.at(j, i) = at(i, j);
    return T;
}

double DenseMat::frobenius_norm() const {
    double s = 0.0;
    for (double v : data) s += v * v;
    return std::sqrt(s);
}

double DenseMat::max_abs() const {
    double m = 0.0;
    for (double v : data) m = std::max(m, std::fabs(v));
    return m;
}

template <typename T>
void gemm_nn(const T* A, const double* B, double* C, std::size_t m,
             std::size_t k, std::size_t n, bool accumulate) {
    if (!accumulate)
        for (std::size_t i = 0; i < m * n; ++i) C[i] = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        const T* ai = A + i * k;
        double* ci = C + i * n;
        for (std::size_t p = 0; p < k; ++p) {
            const double a = static_cast<double>(ai[p]);
            const double* bp = B + p * n;
            for (std::size_t j = 0; j < n; ++j) ci[j] += a * bp[j];
        }
    }
}

template <typename T>
void gemm_tn(const T* A, const double* B, double* C, std::size_t m,
             std::size_t k, std::size_t n, bool accumulate) {
    // A is stored k x m; C = A^T B.
    if (!accumulate)
        for (std::size_t i = 0; i < m * n; ++i) C[i] = 0.0;
    for (std::size_t p = 0; p < k; ++p) {
        const T* ap = A + p * m;
        const double* bp = B + p * n;
        for (std::size_t i = 0; i < m; ++i) {
            const double a = static_cast<double>(ap[i]);
            double* ci = C + i * n;
            for (std::size_t j = 0; j < n; ++j) ci[j] += a * bp[j];
        }
    }
}

template <typename T>
void gemm_nt(const T* A, const double* B, double* C, std::size_t m,
             std::size_t k, std::size_t n, bool accumulate) {
    // B is stored n x k; C = A B^T. Row-by-row dot products.
    for (std::size_t i = 0; i < m; ++i) {
        const T* ai = A + i * k;
        double* ci = C + i * n;
        for (std::size_t j = 0; j < n; ++j) {
            const double* bj = B + j * k;
            double acc = 0.0;
            for (std::size_t p = 0; p < k; ++p)
                acc += static_cast<double>(ai[p]) * bj[p];
            ci[j] = accumulate ? ci[j] + acc : acc;
        }
    }
}

template void gemm_nn<float>(const float*, const double*, double*, std::size_t,
                             std::size_t, std::size_t, bool);
template void gemm_nn<double>(const double*, const double*, double*,
                              std::size_t, std::size_t, std::size_t, bool);
template void gemm_tn<float>(const float*, const double*, double*, std::size_t,
                             std::size_t, std::size_t, bool);
template void gemm_tn<double>(const double*, const double*, double*,
                              std::size_t, std::size_t, std::size_t, bool);
template void gemm_nt<float>(const float*, const double*, double*, std::size_t,
                             std::size_t, std::size_t, bool);
template void gemm_nt<double>(const double*, const double*, double*,
                              std::size_t, std::size_t, std::size_t, bool);

namespace {

// Scalar product core for batched_gemm: explicit about the precision of the
// multiply and of the accumulator.
template <typename In, typename Acc>
void product_into(const DenseMat& A, bool ta, const DenseMat& B, bool tb,
                  DenseMat& C) {
    const std::size_t m = ta ? A.cols : A.rows;
    const std::size_t k = ta ? A.rows : A.cols;
    const std::size_t n = tb ? B.rows : B.cols;
    auto a = [&](std::size_t i, std::size_t p) {
        return static_cast<In>(ta ? A.at(p, i) : A.at(i, p));
    };
    auto b = [&](std::size_t p, std::size_t j) {
        return static_cast<In>(tb ? B.at(j, p) : B.at(p, j));
    };
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            Acc acc = 0;
            for (std::size_t p = 0; p < k; ++p)
                acc += static_cast<Acc>(a(i, p)) * static_cast<Acc>(b(p, j));
            C.at(i, j) = static_cast<double>(acc);
        }
}

} // namespace

std::vector<DenseMat> batched_gemm(const std::vector<DenseMat>& mats,
                                   const std::vector<DenseMat>& xs,
                                   const GemmSpec& spec) {
    if (mats.size() != xs.size())
        throw std::invalid_argument("batched_gemm: batch size mismatch");
    if (mats.empty()) return {};
    const std::size_t ar = mats[0].rows, ac = mats[0].cols;
    const std::size_t br = xs[0].rows, bc = xs[0].cols;
    for (std::size_t e = 0; e < mats.size(); ++e)
        if (mats[e].rows != ar || mats[e].cols != ac || xs[e].rows != br ||
            xs[e].cols != bc)
            throw std::invalid_argument("batched_gemm: nonuniform shapes");
    const std::size_t inner_a = spec.trans_a ? ar : ac;
    const std::size_t inner_b = spec.trans_b ? bc : br;
    if (inner_a != inner_b)
        throw std::invalid_argument("batched_gemm: inner dimension mismatch");

    std::vector<DenseMat> out;
    out.reserve(mats.size());
    for (std::size_t e = 0; e < mats.size(); ++e) {
        const bool single = mats[e].precision == Precision::single ||
                            xs[e].precision == Precision::single;
        DenseMat C(spec.trans_a ? ac : ar, spec.trans_b ? br : bc,
                   single ? Precision::single : Precision::dbl);
        if (!single)
            product_into<double, double>(mats[e], spec.trans_a, xs[e],
                                         spec.trans_b, C);
        else if (spec.double_accumulate)
            product_into<float, double>(mats[e], spec.trans_a, xs[e],
                                        spec.trans_b, C);
        else
            product_into<float, float>(mats[e], spec.trans_a, xs[e],
                                       spec.trans_b, C);
        out.push_back(std::move(C));
    }
    return out;
}

} // namespace hfp
