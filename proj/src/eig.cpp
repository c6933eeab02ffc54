#include "hfp/eig.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace hfp {

namespace {

void check_finite(const DenseMat& A, const char* who) {
    for (double v : A.data)
        if (!std::isfinite(v)) throw std::invalid_argument(std::string(who) + ": non-finite entry");
}

// Cyclic Jacobi rotations on a full symmetric copy. Quadratically
// convergent; the rotation zeroes S[p][q] exactly each visit.
void jacobi_eig(std::vector<double>& S, std::size_t n, DenseMat* V) {
    double fro = 0.0;
    for (double v : S) fro += v * v;
    fro = std::sqrt(fro);
    const double tol = 1e-15 * std::max(fro, 1e-300);

    auto off_norm = [&] {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) s += S[i * n + j] * S[i * n + j];
        return std::sqrt(2.0 * s);
    };

    for (int sweep = 0; sweep < 50 && off_norm() > tol; ++sweep) {
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = S[p * n + q];
                if (std::fabs(apq) <= 1e-300) continue;
                const double app = S[p * n + p], aqq = S[q * n + q];
                const double tau = (aqq - app) / (2.0 * apq);
                const double t = (tau >= 0.0)
                                     ? 1.0 / (tau + std::sqrt(1.0 + tau * tau))
                                     : 1.0 / (tau - std::sqrt(1.0 + tau * tau));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = t * c;
                for (std::size_t k = 0; k < n; ++k) {
                    if (k == p || k == q) continue;
                    const double akp = S[k * n + p], akq = S[k * n + q];
                    S[k * n + p] = S[p * n + k] = c * akp - s * akq;
                    S[k * n + q] = S[q * n + k] = s * akp + c * akq;
                }
                S[p * n + p] = app - t * apq;
                S[q * n + q] = aqq + t * apq;
                S[p * n + q] = S[q * n + p] = 0.0;
                if (V)
                    for (std::size_t k = 0; k < n; ++k) {
                        const double vkp = V->at(k, p), vkq = V->at(k, q);
                        V->at(k, p) = c * vkp - s * vkq;
                        V->at(k, q) = s * vkp + c * vkq;
                    }
            }
        }
    }
}

// Householder reduction to tridiagonal form (d: diagonal, e: subdiagonal),
// optionally accumulating the orthogonal transformation in place of A.
void tridiagonalize(std::vector<double>& a, std::size_t n, std::vector<double>& d,
                    std::vector<double>& e, bool vectors) {
    for (std::size_t i = n - 1; i >= 1; --i) {
        const std::size_t l = i - 1;
        double h = 0.0, scale = 0.0;
        if (l > 0) {
            for (std::size_t k = 0; k <= l; ++k) scale += std::fabs(a[i * n + k]);
            if (scale == 0.0) {
                e[i] = a[i * n + l];
            } else {
                for (std::size_t k = 0; k <= l; ++k) {
                    a[i * n + k] /= scale;
                    h += a[i * n + k] * a[i * n + k];
                }
                double f = a[i * n + l];
                double g = (f >= 0.0) ? -std::sqrt(h) : std::sqrt(h);
                e[i] = scale * g;
                h -= f * g;
                a[i * n + l] = f - g;
                f = 0.0;
                for (std::size_t j = 0; j <= l; ++j) {
                    if (vectors) a[j * n + i] = a[i * n + j] / h;
                    g = 0.0;
                    for (std::size_t k = 0; k <= j; ++k) g += a[j * n + k] * a[i * n + k];
                    for (std::size_t k = j + 1; k <= l; ++k) g += a[k * n + j] * a[i * n + k];
                    e[j] = g / h;
                    f += e[j] * a[i * n + j];
                }
                const double hh = f / (h + h);
                for (std::size_t j = 0; j <= l; ++j) {
                    f = a[i * n + j];
                    e[j] = g = e[j] - hh * f;
                    for (std::size_t k = 0; k <= j; ++k)
                        a[j * n + k] -= f * e[k] + g * a[i * n + k];
                }
            }
        } else {
            e[i] = a[i * n + l];
        }
        d[i] = h;
    }
    d[0] = 0.0;
    e[0] = 0.0;
    if (vectors) {
        for (std::size_t i = 0; i < n; ++i) {
            if (i > 0 && d[i] != 0.0) {
                for (std::size_t j = 0; j < i; ++j) {
                    double g = 0.0;
                    for (std::size_t k = 0; k < i; ++k) g += a[i * n + k] * a[k * n + j];
                    for (std::size_t k = 0; k < i; ++k) a[k * n + j] -= g * a[k * n + i];
                }
            }
            d[i] = a[i * n + i];
            a[i * n + i] = 1.0;
            for (std::size_t j = 0; j < i; ++j) a[j * n + i] = a[i * n + j] = 0.0;
        }
    } else {
        for (std::size_t i = 0; i < n; ++i) d[i] = a[i * n + i];
    }
}

// Implicit-shift QL on the tridiagonal (d, e); z (if non-null) accumulates
// eigenvectors in transposed layout (eigenvector k occupies row k), so the
// per-rotation updates touch two contiguous rows.
void tridiag_ql(std::vector<double>& d, std::vector<double>& e, std::size_t n,
                std::vector<double>* z) {
    auto sign2 = [](double a, double b) { return b >= 0.0 ? std::fabs(a) : -std::fabs(a); };
    for (std::size_t i = 1; i < n; ++i) e[i - 1] = e[i];
    e[n - 1] = 0.0;
    for (std::size_t l = 0; l < n; ++l) {
        int iter = 0;
        std::size_t m;
        do {
            for (m = l; m + 1 < n; ++m) {
                const double dd = std::fabs(d[m]) + std::fabs(d[m + 1]);
                if (std::fabs(e[m]) <= 1e-16 * dd) break;
            }
            if (m != l) {
                if (iter++ == 60)
                    throw std::runtime_error("sym_eig: QL failed to converge");
                double g = (d[l + 1] - d[l]) / (2.0 * e[l]);
                double r = std::hypot(g, 1.0);
                g = d[m] - d[l] + e[l] / (g + sign2(r, g));
                double s = 1.0, c = 1.0, p = 0.0;
                for (std::size_t i = m; i-- > l;) {
                    double f = s * e[i];
                    const double b = c * e[i];
                    r = std::hypot(f, g);
                    e[i + 1] = r;
                    if (r == 0.0) {
                        d[i + 1] -= p;
                        e[m] = 0.0;
                        break;
                    }
                    s = f / r;
                    c = g / r;
                    g = d[i + 1] - p;
                    r = (d[i] - g) * s + 2.0 * c * b;
                    p = s * r;
                    d[i + 1] = g + p;
                    g = c * r - b;
                    if (z) {
                        double* zi = z->data() + i * n;
                        double* zi1 = z->data() + (i + 1) * n;
                        for (std::size_t k = 0; k < n; ++k) {
                            f = zi1[k];
                            zi1[k] = s * zi[k] + c * f;
                            zi[k] = c * zi[k] - s * f;
                        }
                    }
                    if (i == l) break;
                }
                if (r == 0.0 && m - l > 1) continue;
                d[l] -= p;
                e[l] = g;
                e[m] = 0.0;
            }
        } while (m != l);
    }
}

} // namespace

EigResult sym_eig(const DenseMat& A, bool compute_vectors, std::size_t dense_cap) {
    const std::size_t n = A.rows;
    if (n == 0 || A.cols != n)
        throw std::invalid_argument("sym_eig: matrix must be square and nonempty");
    if (n > dense_cap)
        throw std::invalid_argument("sym_eig: size exceeds dense cap");
    check_finite(A, "sym_eig");
    const double scale = std::max(A.max_abs(), 1e-300);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            if (std::fabs(A.at(i, j) - A.at(j, i)) > 1e-12 * scale)
                throw std::invalid_argument("sym_eig: input not symmetric");

    EigResult res;
    res.eigenvalues.resize(n);
    std::vector<double> work = A.data;
    // Symmetrize exactly so downstream arithmetic sees one value per pair.
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            const double v = 0.5 * (work[i * n + j] + work[j * n + i]);
            work[i * n + j] = work[j * n + i] = v;
        }

    if (n <= 128) {
        DenseMat V = DenseMat::identity(n);
        jacobi_eig(work, n, compute_vectors ? &V : nullptr);
        for (std::size_t i = 0; i < n; ++i) res.eigenvalues[i] = work[i * n + i];
        if (compute_vectors) res.vectors = std::move(V);
    } else {
        std::vector<double> d(n), e(n);
        tridiagonalize(work, n, d, e, compute_vectors);
        if (compute_vectors) {
            // QL accumulates in transposed layout; hand it Q^T.
            std::vector<double> zt(n * n);
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < n; ++j) zt[j * n + i] = work[i * n + j];
            tridiag_ql(d, e, n, &zt);
            res.vectors.rows = res.vectors.cols = n;
            res.vectors.data.resize(n * n);
            for (std::size_t k = 0; k < n; ++k)
                for (std::size_t i = 0; i < n; ++i)
                    res.vectors.data[i * n + k] = zt[k * n + i];
        } else {
            tridiag_ql(d, e, n, nullptr);
        }
        res.eigenvalues = std::move(d);
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return res.eigenvalues[a] < res.eigenvalues[b];
    });
    std::vector<double> ev(n);
    for (std::size_t i = 0; i < n; ++i) ev[i] = res.eigenvalues[order[i]];
    res.eigenvalues = std::move(ev);
    if (compute_vectors) {
        DenseMat sorted(n, n);
        for (std::size_t j = 0; j < n; ++j)
            for (std::size_t i = 0; i < n; ++i)
                sorted.at(i, j) = res.vectors.at(i, order[j]);
        res.vectors = std::move(sorted);
    }
    return res;
}

namespace {

// One-sided Jacobi: orthogonalize the rows of W; their norms are the
// singular values of the original matrix.
std::vector<double> one_sided_jacobi_sv(std::vector<double> W, std::size_t rows,
                                        std::size_t cols) {
    bool converged = false;
    for (int sweep = 0; sweep < 60 && !converged; ++sweep) {
        converged = true;
        for (std::size_t i = 0; i + 1 < rows; ++i) {
            for (std::size_t j = i + 1; j < rows; ++j) {
                double* wi = W.data() + i * cols;
                double* wj = W.data() + j * cols;
                double a = 0.0, b = 0.0, g = 0.0;
                for (std::size_t k = 0; k < cols; ++k) {
                    a += wi[k] * wi[k];
                    b += wj[k] * wj[k];
                    g += wi[k] * wj[k];
                }
                if (std::fabs(g) <= 1e-15 * std::sqrt(a * b) || a == 0.0 || b == 0.0)
                    continue;
                converged = false;
                const double zeta = (b - a) / (2.0 * g);
                const double t = (zeta >= 0.0)
                                     ? 1.0 / (zeta + std::sqrt(1.0 + zeta * zeta))
                                     : 1.0 / (zeta - std::sqrt(1.0 + zeta * zeta));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = c * t;
                for (std::size_t k = 0; k < cols; ++k) {
                    const double x = wi[k], y = wj[k];
                    wi[k] = c * x - s * y;
                    wj[k] = s * x + c * y;
                }
            }
        }
    }
    std::vector<double> sv(rows);
    for (std::size_t i = 0; i < rows; ++i) {
        double a = 0.0;
        for (std::size_t k = 0; k < cols; ++k) a += W[i * cols + k] * W[i * cols + k];
        sv[i] = std::sqrt(a);
    }
    std::sort(sv.begin(), sv.end(), std::greater<>());
    return sv;
}

} // namespace

std::vector<double> singular_values(const DenseMat& B) {
    check_finite(B, "singular_values");
    const std::size_t md = std::min(B.rows, B.cols);
    if (md == 0) return {};

    if (md <= 512) {
        // Gram-matrix route: eigenvalues of B^T B (or B B^T) are sigma^2.
        const bool use_cols = B.cols <= B.rows;
        const std::size_t n = use_cols ? B.cols : B.rows;
        DenseMat G(n, n);
        if (use_cols)
            gemm_tn(B.data.data(), B.data.data(), G.data.data(), n, B.rows, n);
        else
            gemm_nt(B.data.data(), B.data.data(), G.data.data(), n, B.cols, n);
        EigResult eg = sym_eig(G, /*compute_vectors=*/false);
        std::vector<double> sv(n);
        for (std::size_t i = 0; i < n; ++i)
            sv[i] = std::sqrt(std::max(0.0, eg.eigenvalues[n - 1 - i]));
        return sv;
    }

    // Transpose if needed so the vectors being orthogonalized are rows.
    if (B.rows <= B.cols)
        return one_sided_jacobi_sv(B.data, B.rows, B.cols);
    return one_sided_jacobi_sv(B.transposed().data, B.cols, B.rows);
}

} // namespace hfp
