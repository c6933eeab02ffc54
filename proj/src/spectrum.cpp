#include "hfp/spectrum.hpp"

#include <cmath>
#include <stdexcept>

namespace hfp {

DenseMat dense_from_csr(const CsrMatrix& A) {
    DenseMat D(A.n_rows, A.n_cols);
    for (std::size_t i = 0; i < A.n_rows; ++i)
        for (std::uint64_t p = A.row_offsets[i]; p < A.row_offsets[i + 1]; ++p)
            D.at(i, A.col_indices[p]) = A.values[p];
    return D;
}

SpectrumReport precond_spectrum(const CsrMatrix& A, const DenseMat& m_dense,
                                std::size_t dense_cap, Deflation deflation) {
    const std::size_t n = A.n_rows;
    if (n > dense_cap)
        throw std::invalid_argument("precond_spectrum: size exceeds dense cap");
    if (m_dense.rows != n || m_dense.cols != n)
        throw std::invalid_argument("precond_spectrum: preconditioner shape mismatch");

    EigResult ea = sym_eig(dense_from_csr(A));
    const double lmax = ea.eigenvalues.back();
    if (!(lmax > 0.0)) throw std::invalid_argument("precond_spectrum: operator not PSD");

    bool deflate = deflation == Deflation::on;
    if (deflation == Deflation::automatic)
        deflate = ea.eigenvalues.front() <= 1e-10 * lmax;

    std::vector<std::size_t> keep;
    for (std::size_t i = 0; i < n; ++i) {
        if (deflate && ea.eigenvalues[i] <= 1e-8 * lmax) continue;
        keep.push_back(i);
    }
    const std::size_t m = keep.size();
    if (m == 0) throw std::invalid_argument("precond_spectrum: empty deflated space");

    SpectrumReport rep;
    rep.deflated = deflate;
    rep.kappa_unpreconditioned = ea.eigenvalues[keep.back()] / ea.eigenvalues[keep[0]];

    // T = S^{1/2} Q^T M Q S^{1/2} on the retained eigenbasis.
    DenseMat W(n, m); // M Q_+
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t c = 0; c < m; ++c) {
            double acc = 0.0;
            for (std::size_t j = 0; j < n; ++j)
                acc += m_dense.at(i, j) * ea.vectors.at(j, keep[c]);
            W.at(i, c) = acc;
        }
    DenseMat T(m, m);
    for (std::size_t r = 0; r < m; ++r) {
        const double sr = std::sqrt(ea.eigenvalues[keep[r]]);
        for (std::size_t c = 0; c < m; ++c) {
            double acc = 0.0;
            for (std::size_t j = 0; j < n; ++j) acc += ea.vectors.at(j, keep[r]) * W.at(j, c);
            T.at(r, c) = acc * sr * std::sqrt(ea.eigenvalues[keep[c]]);
        }
    }
    for (std::size_t r = 0; r < m; ++r)
        for (std::size_t c = r + 1; c < m; ++c) {
            const double v = 0.5 * (T.at(r, c) + T.at(c, r));
            T.at(r, c) = T.at(c, r) = v;
        }

    EigResult et = sym_eig(T, /*compute_vectors=*/false);
    rep.eigenvalues = et.eigenvalues;
    double tmax = 0.0;
    for (double v : et.eigenvalues) tmax = std::max(tmax, std::fabs(v));
    const double tol = 1e-10 * std::max(tmax, 1e-300);
    double pos_min = 0.0, pos_max = 0.0;
    for (double v : et.eigenvalues) {
        if (v < -tol) ++rep.negative_count;
        if (v > tol) {
            if (pos_min == 0.0) pos_min = v;
            pos_max = std::max(pos_max, v);
        }
    }
    rep.kappa = (pos_min > 0.0) ? pos_max / pos_min : 0.0;
    rep.kappa_reduction = (rep.kappa > 0.0) ? rep.kappa_unpreconditioned / rep.kappa : 0.0;
    return rep;
}

SpectrumReport precond_spectrum(const CsrMatrix& A, const PrecondApplier& applier,
                                std::size_t dense_cap, Deflation deflation) {
    const std::size_t n = A.n_rows;
    if (n > dense_cap)
        throw std::invalid_argument("precond_spectrum: size exceeds dense cap");
    DenseMat M(n, n);
    std::vector<double> e(n, 0.0), col(n);
    for (std::size_t j = 0; j < n; ++j) {
        e[j] = 1.0;
        applier(e, col);
        for (std::size_t i = 0; i < n; ++i) M.at(i, j) = col[i];
        e[j] = 0.0;
    }
    // Symmetrize exactly; appliers are symmetric up to roundoff.
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            const double v = 0.5 * (M.at(i, j) + M.at(j, i));
            M.at(i, j) = M.at(j, i) = v;
        }
    return precond_spectrum(A, M, dense_cap, deflation);
}

DenseMat pseudo_inverse(const CsrMatrix& A, std::size_t dense_cap) {
    const std::size_t n = A.n_rows;
    if (n > dense_cap)
        throw std::invalid_argument("pseudo_inverse: size exceeds dense cap");
    EigResult ea = sym_eig(dense_from_csr(A));
    const double lmax = ea.eigenvalues.back();
    DenseMat X(n, n);
    for (std::size_t k = 0; k < n; ++k) {
        if (ea.eigenvalues[k] <= 1e-8 * lmax) continue;
        const double inv = 1.0 / ea.eigenvalues[k];
        for (std::size_t i = 0; i < n; ++i) {
            const double qik = ea.vectors.at(i, k) * inv;
            if (qik == 0.0) continue;
            for (std::size_t j = 0; j < n; ++j) X.at(i, j) += qik * ea.vectors.at(j, k);
        }
    }
    return X;
}

} // namespace hfp
