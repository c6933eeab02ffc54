#include "hfp/probes.hpp"

#include <cmath>
#include <stdexcept>

namespace hfp {

std::size_t probe_count(std::size_t n) {
    const auto root =
        static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(n))));
    return std::max<std::size_t>(64, root);
}

ProbeBatch sample_probes(std::size_t n, RngStream& stream) {
    ProbeBatch b;
    b.n = n;
    b.count = probe_count(n);
    b.z.resize(n * b.count);
    stream.fill_normal(b.z);
    return b;
}

void smooth_probes(const CsrMatrix& A, ProbeBatch& batch, double omega,
                   std::size_t steps) {
    if (A.n_rows != batch.n)
        throw std::invalid_argument("smooth_probes: dimension mismatch");
    const auto diag = A.diagonal();
    for (double d : diag)
        if (!(d > 0.0))
            throw std::invalid_argument("smooth_probes: nonpositive diagonal");
    const std::size_t k = batch.count;
    std::vector<double> az(batch.z.size());
    for (std::size_t s = 0; s < steps; ++s) {
        spmm(A, batch.z, k, az);
        for (std::size_t i = 0; i < batch.n; ++i) {
            const double scale = omega / diag[i];
            double* zi = batch.z.data() + i * k;
            const double* ai = az.data() + i * k;
            for (std::size_t j = 0; j < k; ++j) zi[j] -= scale * ai[j];
        }
    }
    batch.omega = omega;
    batch.smooth_steps = steps;
}

} // namespace hfp
