#include "hfp/loss.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace hfp {

double cosine_loss(std::span<const double> z, std::span<const double> y) {
    if (z.size() != y.size()) throw std::invalid_argument("cosine_loss: size mismatch");
    double zy = 0.0, zz = 0.0, yy = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) {
        zy += z[i] * y[i];
        zz += z[i] * z[i];
        yy += y[i] * y[i];
    }
    if (zz == 0.0 || yy == 0.0)
        throw std::domain_error("cosine_loss: degenerate (zero-norm operand)");
    return 1.0 - zy / (std::sqrt(zz) * std::sqrt(yy));
}

double sai_loss(const CsrMatrix& A, std::span<const double> mz,
                std::span<const double> z, std::size_t kz, double norm_a) {
    if (!(norm_a > 0.0)) throw std::invalid_argument("sai_loss: norm_a must be positive");
    if (mz.size() != z.size() || mz.size() != A.n_rows * kz)
        throw std::invalid_argument("sai_loss: size mismatch");
    std::vector<double> amz(mz.size());
    spmm(A, mz, kz, amz);
    double acc = 0.0;
    for (std::size_t i = 0; i < amz.size(); ++i) {
        const double q = amz[i] / norm_a - z[i];
        acc += q * q;
    }
    return acc;
}

double power_iteration_norm(const CsrMatrix& A, RngStream& stream, std::size_t steps) {
    const std::size_t n = A.n_rows;
    std::vector<double> v(n), av(n);
    stream.fill_normal(v);
    double norm = 0.0;
    for (double x : v) norm += x * x;
    norm = std::sqrt(norm);
    for (double& x : v) x /= norm;
    double sigma = 0.0;
    for (std::size_t s = 0; s < steps; ++s) {
        spmv(A, v, av);
        sigma = 0.0;
        for (double x : av) sigma += x * x;
        sigma = std::sqrt(sigma);
        if (sigma == 0.0) return 0.0;
        for (std::size_t i = 0; i < n; ++i) v[i] = av[i] / sigma;
    }
    return sigma;
}

} // namespace hfp
