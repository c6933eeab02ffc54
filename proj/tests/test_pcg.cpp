#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "hfp/frame.hpp"
#include "hfp/ic0.hpp"
#include "hfp/pcg.hpp"

#include <cmath>
#include <set>

using namespace hfp;

namespace {

CsrMatrix diagonal_csr(const std::vector<double>& d) {
    CsrMatrix A;
    A.n_rows = A.n_cols = d.size();
    A.row_offsets.push_back(0);
    for (std::size_t i = 0; i < d.size(); ++i) {
        A.col_indices.push_back(static_cast<std::uint32_t>(i));
        A.values.push_back(d[i]);
        A.row_offsets.push_back(i + 1);
    }
    return A;
}

CsrMatrix tridiag_spd(std::size_t n) {
    CsrMatrix A;
    A.n_rows = A.n_cols = n;
    A.row_offsets.push_back(0);
    for (std::size_t i = 0; i < n; ++i) {
        if (i > 0) {
            A.col_indices.push_back(static_cast<std::uint32_t>(i - 1));
            A.values.push_back(-1.0);
        }
        A.col_indices.push_back(static_cast<std::uint32_t>(i));
        A.values.push_back(3.0);
        if (i + 1 < n) {
            A.col_indices.push_back(static_cast<std::uint32_t>(i + 1));
            A.values.push_back(-1.0);
        }
        A.row_offsets.push_back(A.col_indices.size());
    }
    return A;
}

} // namespace

TEST_CASE("identity system converges in one iteration") {
    CsrMatrix I = diagonal_csr(std::vector<double>(50, 1.0));
    RngStream rng(1, 0, RngPurpose::test);
    auto b = rng.normal_vector(50);
    std::vector<double> x;
    auto rep = pcg_solve(I, b, identity_applier(), {}, &x);
    CHECK(rep.converged);
    CHECK(rep.iterations == 1);
    for (std::size_t i = 0; i < 50; ++i) CHECK(x[i] == doctest::Approx(b[i]));
}

TEST_CASE("jacobi preconditioner finishes diagonal systems in one iteration") {
    RngStream rng(2, 0, RngPurpose::test);
    std::vector<double> d(64);
    for (double& v : d) v = 1.0 + std::fabs(rng.next_normal()) * 10.0;
    CsrMatrix A = diagonal_csr(d);
    auto b = rng.normal_vector(64);
    auto rep = pcg_solve(A, b, jacobi_applier(A), {});
    CHECK(rep.converged);
    CHECK(rep.iterations == 1);
}

TEST_CASE("jacobi applier analytic case and zero-diagonal rejection") {
    CsrMatrix A = diagonal_csr({2.0, 4.0});
    auto ap = jacobi_applier(A);
    std::vector<double> r{2.0, 4.0}, z(2);
    ap(r, z);
    CHECK(z[0] == 1.0);
    CHECK(z[1] == 1.0);
    CsrMatrix Z = diagonal_csr({1.0, 0.0});
    CHECK_THROWS_AS(jacobi_applier(Z), std::invalid_argument);
}

TEST_CASE("CG finite termination on clustered spectra") {
    RngStream rng(3, 0, RngPurpose::test);
    for (std::size_t c : {1u, 3u, 5u, 10u}) {
        std::vector<double> d(96);
        for (std::size_t i = 0; i < d.size(); ++i)
            d[i] = 1.0 + static_cast<double>(i % c) * 7.3;
        CsrMatrix A = diagonal_csr(d);
        auto b = rng.normal_vector(d.size());
        SolveConfig cfg;
        cfg.rtol = 1e-12;
        auto rep = pcg_solve(A, b, identity_applier(), cfg);
        CHECK(rep.converged);
        CHECK(rep.iterations <= c);
    }
}

TEST_CASE("tridiagonal IC(0) equals exact Cholesky") {
    CsrMatrix A = tridiag_spd(40);
    Ic0Factor f = ic0_factorize(A, Ic0Shift::none);
    // No fill: L L^T must reproduce A exactly on its pattern.
    RngStream rng(4, 0, RngPurpose::test);
    auto b = rng.normal_vector(40);
    auto rep = pcg_solve(A, b, ic0_applier(f), {});
    CHECK(rep.converged);
    CHECK(rep.iterations == 1);

    // Factor sparsity is contained in the lower triangle of A's pattern.
    for (std::size_t i = 0; i < f.lower.n_rows; ++i) {
        std::set<std::uint32_t> apat;
        for (std::uint64_t p = A.row_offsets[i]; p < A.row_offsets[i + 1]; ++p)
            if (A.col_indices[p] <= i) apat.insert(A.col_indices[p]);
        for (std::uint64_t p = f.lower.row_offsets[i]; p < f.lower.row_offsets[i + 1]; ++p)
            CHECK(apat.count(f.lower.col_indices[p]) == 1);
    }
}

TEST_CASE("benchmark frame: baseline ordering and singular consistency") {
    Frame fr = make_frame(1024, 42, 0);
    SolveConfig cfg;

    auto unprec = pcg_solve(fr.A, fr.b, identity_applier(), cfg);
    auto jacobi = pcg_solve(fr.A, fr.b, jacobi_applier(fr.A), cfg);
    auto ic = pcg_solve(fr.A, fr.b, ic0_applier(ic0_factorize(fr.A)), cfg);

    CHECK(unprec.converged); // singular consistent system, no deflation needed
    CHECK(jacobi.converged);
    CHECK(ic.converged);
    CHECK(jacobi.iterations < unprec.iterations);
    CHECK(ic.iterations < jacobi.iterations);

    // Recomputed true residual agrees with the recursive one at convergence.
    std::vector<double> x;
    auto rep = pcg_solve(fr.A, fr.b, jacobi_applier(fr.A), cfg, &x);
    auto ax = spmv(fr.A, x);
    double num = 0.0, bnorm = 0.0;
    for (std::size_t i = 0; i < fr.n; ++i) {
        num += (fr.b[i] - ax[i]) * (fr.b[i] - ax[i]);
        bnorm += fr.b[i] * fr.b[i];
    }
    CHECK(std::sqrt(num) <= 1e-6 * std::sqrt(bnorm));
    CHECK(rep.residual_history.back() <= cfg.rtol);
}

TEST_CASE("deterministic residual histories") {
    Frame fr = make_frame(256, 9, 1);
    SolveConfig cfg;
    auto r1 = pcg_solve(fr.A, fr.b, jacobi_applier(fr.A), cfg);
    auto r2 = pcg_solve(fr.A, fr.b, jacobi_applier(fr.A), cfg);
    CHECK(r1.iterations == r2.iterations);
    CHECK(r1.residual_history == r2.residual_history);
}

TEST_CASE("gate-only tensor applier equals the jacobi applier") {
    Frame fr = make_frame(256, 6, 2);
    HPartition p = build_partition(256, 128);
    RngStream rng(6, 2, RngPurpose::factor_init);
    FactorTensor f = init_factors<float>(p, 32, FactorInit::jacobi_seed, 0.0, rng);
    auto fa = factor_applier(f, fr.A);
    auto ja = jacobi_applier(fr.A);
    RngStream rr(6, 3, RngPurpose::test);
    auto r = rr.normal_vector(256);
    std::vector<double> zf(256), zj(256);
    fa(r, zf);
    ja(r, zj);
    for (std::size_t i = 0; i < 256; ++i) CHECK(zf[i] == zj[i]);
}

TEST_CASE("factor applier with a seeded tensor stays within 2x of jacobi") {
    Frame fr = make_frame(1024, 7, 3);
    HPartition p = build_partition(1024, 128);
    RngStream rng(7, 3, RngPurpose::factor_init);
    FactorTensor f = init_factors<float>(p, 32, FactorInit::jacobi_seed, 1e-2, rng);
    SolveConfig cfg;
    auto jac = pcg_solve(fr.A, fr.b, jacobi_applier(fr.A), cfg);
    auto hf = pcg_solve(fr.A, fr.b, factor_applier(f, fr.A), cfg);
    CHECK(hf.converged);
    CHECK(hf.iterations <= 2 * jac.iterations);
}

TEST_CASE("ic0 reports nonpositive pivots") {
    CsrMatrix bad = diagonal_csr({1.0, -4.0, 2.0});
    CHECK_THROWS_AS(ic0_factorize(bad, Ic0Shift::none), std::runtime_error);
}

TEST_CASE("breakdown is reported on an indefinite operator") {
    std::vector<double> d(8, 1.0);
    d[3] = -2.0;
    CsrMatrix A = diagonal_csr(d);
    RngStream rng(5, 0, RngPurpose::test);
    auto b = rng.normal_vector(8);
    auto rep = pcg_solve(A, b, identity_applier(), {});
    CHECK(!rep.converged);
    CHECK(rep.status == SolveStatus::breakdown);
    CHECK(rep.breakdown_iter > 0);
}

TEST_CASE("solve report serializes to json lines") {
    CsrMatrix I = diagonal_csr(std::vector<double>(4, 1.0));
    std::vector<double> b{1, 2, 3, 4};
    auto rep = pcg_solve(I, b, identity_applier(), {});
    rep.method = "none";
    rep.frame_id = "test";
    const std::string j = rep.to_json();
    CHECK(j.find("\"method\":\"none\"") != std::string::npos);
    CHECK(j.find("\"converged\":true") != std::string::npos);
}
