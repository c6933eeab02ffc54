#include "hfp/pcg.hpp"

#include "json.hpp"

#include <chrono>
#include <cmath>
#include <memory>
#include <stdexcept>

namespace hfp {

std::string SolveReport::to_json() const {
    nlohmann::json j;
    j["method"] = method;
    j["n"] = n;
    j["iterations"] = iterations;
    j["converged"] = converged;
    j["status"] = status == SolveStatus::converged  ? "converged"
                  : status == SolveStatus::max_iters ? "max_iters"
                                                     : "breakdown";
    j["wall_ms"] = wall_ms;
    j["frame_id"] = frame_id;
    if (status == SolveStatus::breakdown) j["breakdown_iter"] = breakdown_iter;
    j["residual_history"] = residual_history;
    return j.dump();
}

PrecondApplier identity_applier() {
    return [](std::span<const double> r, std::span<double> z) {
        for (std::size_t i = 0; i < r.size(); ++i) z[i] = r[i];
    };
}

PrecondApplier jacobi_applier(const CsrMatrix& A) {
    auto diag = std::make_shared<std::vector<double>>(A.diagonal());
    for (double d : *diag)
        if (!(d > 0.0))
            throw std::invalid_argument("jacobi_applier: nonpositive diagonal entry");
    return [diag](std::span<const double> r, std::span<double> z) {
        for (std::size_t i = 0; i < r.size(); ++i) z[i] = r[i] / (*diag)[i];
    };
}

PrecondApplier factor_applier(const FactorTensor& factors, const CsrMatrix& A) {
    auto diag = std::make_shared<std::vector<double>>(A.diagonal());
    auto tensor = std::make_shared<FactorTensor>(factors);
    auto ws = std::make_shared<ApplyWorkspace<float>>(factors.layout);
    return [diag, tensor, ws](std::span<const double> r, std::span<double> z) {
        apply(*tensor, *diag, r, *ws, z);
    };
}

SolveReport pcg_solve(const CsrMatrix& A, std::span<const double> b,
                      const PrecondApplier& precond, const SolveConfig& cfg,
                      std::vector<double>* x_out,
                      std::vector<std::vector<double>>* residual_vectors) {
    if (cfg.rtol <= 0.0) throw std::invalid_argument("pcg_solve: rtol must be positive");
    const std::size_t n = A.n_rows;
    if (b.size() != n) throw std::invalid_argument("pcg_solve: rhs length mismatch");

    const auto t_start = std::chrono::steady_clock::now();
    SolveReport rep;
    rep.n = n;

    std::vector<double> x(n, 0.0), r(b.begin(), b.end()), z(n), p(n), ap(n);

    auto dot = [n](const std::vector<double>& a, const std::vector<double>& c) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += a[i] * c[i];
        return s;
    };

    const double r0_norm = std::sqrt(dot(r, r));
    if (r0_norm == 0.0) {
        rep.converged = true;
        rep.status = SolveStatus::converged;
        if (x_out) *x_out = x;
        return rep;
    }
    const double breakdown_tol = 1e-12 * A.frobenius_norm();

    precond(r, z);
    p = z;
    double rz = dot(r, z);

    for (std::size_t k = 1; k <= cfg.max_iters; ++k) {
        spmv(A, p, ap);
        const double pap = dot(p, ap);
        const double p2 = dot(p, p);
        if (pap < -breakdown_tol * p2 || pap == 0.0) {
            rep.status = SolveStatus::breakdown;
            rep.breakdown_iter = k;
            rep.iterations = k;
            break;
        }
        const double alpha = rz / pap;
        for (std::size_t i = 0; i < n; ++i) x[i] += alpha * p[i];
        for (std::size_t i = 0; i < n; ++i) r[i] -= alpha * ap[i];

        const double rel = std::sqrt(dot(r, r)) / r0_norm;
        rep.residual_history.push_back(rel);
        if (residual_vectors) residual_vectors->push_back(r);
        if (rel <= cfg.rtol) {
            rep.converged = true;
            rep.status = SolveStatus::converged;
            rep.iterations = k;
            break;
        }
        if (k == cfg.max_iters) {
            rep.iterations = k;
            break;
        }

        precond(r, z);
        const double rz_next = dot(r, z);
        const double beta = rz_next / rz;
        rz = rz_next;
        for (std::size_t i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
    }

    rep.wall_ms = std::chrono::duration<double, std::milli>(
                      std::chrono::steady_clock::now() - t_start)
                      .count();
    if (x_out) *x_out = std::move(x);
    return rep;
}

} // namespace hfp
