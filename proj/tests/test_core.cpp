#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "hfp/csr.hpp"
#include "hfp/dense.hpp"
#include "hfp/eig.hpp"
#include "hfp/morton.hpp"
#include "hfp/rng.hpp"

#include <cmath>
#include <vector>

using namespace hfp;

namespace {

CsrMatrix csr_from_dense(const DenseMat& D) {
    CsrMatrix A;
    A.n_rows = D.rows;
    A.n_cols = D.cols;
    A.row_offsets.push_back(0);
    for (std::size_t i = 0; i < D.rows; ++i) {
        for (std::size_t j = 0; j < D.cols; ++j)
            if (D.at(i, j) != 0.0) {
                A.col_indices.push_back(static_cast<std::uint32_t>(j));
                A.values.push_back(D.at(i, j));
            }
        A.row_offsets.push_back(A.col_indices.size());
    }
    return A;
}

DenseMat random_mat(std::size_t r, std::size_t c, RngStream& rng) {
    DenseMat M(r, c);
    for (double& v : M.data) v = rng.next_normal();
    return M;
}

DenseMat random_symmetric(std::size_t n, RngStream& rng) {
    DenseMat M(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i; j < n; ++j) M.at(i, j) = M.at(j, i) = rng.next_normal();
    return M;
}

} // namespace

TEST_CASE("spmv identity passes vectors through") {
    CsrMatrix I = csr_from_dense(DenseMat::identity(5));
    I.validate(true);
    std::vector<double> x = {1.5, -2.0, 0.25, 3.0, -7.5};
    CHECK(spmv(I, x) == x);
}

TEST_CASE("spmv matches dense oracle on random 8x8") {
    RngStream rng(42, 0, RngPurpose::test);
    DenseMat D = random_mat(8, 8, rng);
    // Sparsify a bit so the CSR path is nontrivial.
    for (std::size_t i = 0; i < D.data.size(); i += 3) D.data[i] = 0.0;
    CsrMatrix A = csr_from_dense(D);
    A.validate();
    std::vector<double> x(8);
    rng.fill_normal(x);
    auto y = spmv(A, x);
    for (std::size_t i = 0; i < 8; ++i) {
        double ref = 0.0;
        for (std::size_t j = 0; j < 8; ++j) ref += D.at(i, j) * x[j];
        CHECK(std::fabs(y[i] - ref) <= 1e-14 * (std::fabs(ref) + 1.0));
    }
}

TEST_CASE("spmv rejects dimension mismatch") {
    CsrMatrix I = csr_from_dense(DenseMat::identity(4));
    std::vector<double> x(5, 1.0);
    CHECK_THROWS_AS(spmv(I, x), std::invalid_argument);
}

TEST_CASE("csr validate catches broken invariants") {
    CsrMatrix A = csr_from_dense(DenseMat::identity(3));
    A.col_indices[1] = 9;
    CHECK_THROWS_AS(A.validate(), std::invalid_argument);
}

TEST_CASE("batched_gemm identity and shape checks") {
    RngStream rng(7, 0, RngPurpose::test);
    std::vector<DenseMat> ids(3, DenseMat::identity(4));
    std::vector<DenseMat> xs;
    for (int e = 0; e < 3; ++e) xs.push_back(random_mat(4, 2, rng));
    auto out = batched_gemm(ids, xs);
    for (int e = 0; e < 3; ++e)
        for (std::size_t i = 0; i < 8; ++i)
            CHECK(out[e].data[i] == doctest::Approx(xs[e].data[i]).epsilon(1e-15));

    // Uniform-shape contract.
    xs[1] = random_mat(5, 2, rng);
    CHECK_THROWS_AS(batched_gemm(ids, xs), std::invalid_argument);
}

TEST_CASE("batched_gemm batch of one equals naive oracle") {
    RngStream rng(8, 0, RngPurpose::test);
    DenseMat A = random_mat(9, 6, rng);
    DenseMat B = random_mat(6, 5, rng);
    DenseMat ref(9, 5);
    for (std::size_t i = 0; i < 9; ++i)
        for (std::size_t j = 0; j < 5; ++j) {
            double acc = 0.0;
            for (std::size_t p = 0; p < 6; ++p) acc += A.at(i, p) * B.at(p, j);
            ref.at(i, j) = acc;
        }

    SUBCASE("double precision") {
        auto out = batched_gemm({A}, {B});
        for (std::size_t i = 0; i < ref.data.size(); ++i)
            CHECK(std::fabs(out[0].data[i] - ref.data[i]) <=
                  1e-13 * (std::fabs(ref.data[i]) + 1.0));
    }
    SUBCASE("single precision, float accumulate") {
        DenseMat As = A, Bs = B;
        As.precision = Bs.precision = Precision::single;
        GemmSpec spec;
        spec.double_accumulate = false;
        auto out = batched_gemm({As}, {Bs}, spec);
        for (std::size_t i = 0; i < ref.data.size(); ++i)
            CHECK(std::fabs(out[0].data[i] - ref.data[i]) <=
                  1e-6 * (std::fabs(ref.data[i]) + 1.0));
    }
}

TEST_CASE("batched_gemm accepts the production apply shape") {
    // K=8 batch of (L x L_s) factors against L-length blocks.
    std::vector<DenseMat> mats(8, DenseMat(128, 32, Precision::single));
    std::vector<DenseMat> xs(8, DenseMat(128, 1, Precision::single));
    GemmSpec spec;
    spec.trans_a = true;
    auto out = batched_gemm(mats, xs, spec);
    CHECK(out.size() == 8);
    CHECK(out[0].rows == 32);
    CHECK(out[0].cols == 1);
}

TEST_CASE("sym_eig analytic cases") {
    DenseMat D(3, 3);
    D.at(0, 0) = 1;
    D.at(1, 1) = 2;
    D.at(2, 2) = 3;
    auto eg = sym_eig(D);
    CHECK(eg.eigenvalues[0] == doctest::Approx(1.0));
    CHECK(eg.eigenvalues[1] == doctest::Approx(2.0));
    CHECK(eg.eigenvalues[2] == doctest::Approx(3.0));

    DenseMat M(2, 2);
    M.at(0, 0) = M.at(1, 1) = 2;
    M.at(0, 1) = M.at(1, 0) = 1;
    auto eg2 = sym_eig(M);
    CHECK(eg2.eigenvalues[0] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(eg2.eigenvalues[1] == doctest::Approx(3.0).epsilon(1e-12));
}

TEST_CASE("sym_eig reconstructs a random symmetric matrix") {
    RngStream rng(11, 0, RngPurpose::test);
    DenseMat A = random_symmetric(32, rng);
    auto eg = sym_eig(A);
    const double norm = A.frobenius_norm();
    // V Lambda V^T == A and residual per pair.
    for (std::size_t i = 0; i < 32; ++i)
        for (std::size_t j = 0; j < 32; ++j) {
            double acc = 0.0;
            for (std::size_t k = 0; k < 32; ++k)
                acc += eg.vectors.at(i, k) * eg.eigenvalues[k] * eg.vectors.at(j, k);
            CHECK(std::fabs(acc - A.at(i, j)) <= 1e-10 * norm);
        }
}

TEST_CASE("sym_eig residual bound holds for both algorithm paths") {
    RngStream rng(12, 0, RngPurpose::test);
    for (std::size_t n : {64u, 200u}) {
        DenseMat A = random_symmetric(n, rng);
        auto eg = sym_eig(A);
        const double norm = A.frobenius_norm();
        for (std::size_t k = 0; k < n; ++k) {
            double resid = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                double av = 0.0;
                for (std::size_t j = 0; j < n; ++j) av += A.at(i, j) * eg.vectors.at(j, k);
                const double r = av - eg.eigenvalues[k] * eg.vectors.at(i, k);
                resid += r * r;
            }
            CHECK(std::sqrt(resid) <= 1e-10 * norm);
        }
    }
}

TEST_CASE("jacobi and tridiagonal paths agree across the dispatch boundary") {
    RngStream rng(13, 0, RngPurpose::test);
    DenseMat A = random_symmetric(128, rng); // Jacobi path
    DenseMat B(160, 160);                    // QL path
    for (std::size_t i = 0; i < 128; ++i)
        for (std::size_t j = 0; j < 128; ++j) B.at(i, j) = A.at(i, j);
    for (std::size_t i = 128; i < 160; ++i) B.at(i, i) = 1e6 + static_cast<double>(i);
    auto ea = sym_eig(A);
    auto eb = sym_eig(B);
    // The low block's spectrum must match.
    for (std::size_t k = 0; k < 128; ++k)
        CHECK(eb.eigenvalues[k] ==
              doctest::Approx(ea.eigenvalues[k]).epsilon(1e-9).scale(A.frobenius_norm()));
}

TEST_CASE("sym_eig rejects asymmetric input") {
    DenseMat A(3, 3);
    A.at(0, 1) = 1.0;
    A.at(1, 0) = 1.0 + 1e-6;
    CHECK_THROWS_AS(sym_eig(A), std::invalid_argument);
}

TEST_CASE("singular values analytic cases") {
    auto sv0 = singular_values(DenseMat(6, 4));
    for (double s : sv0) CHECK(s == 0.0);

    RngStream rng(14, 0, RngPurpose::test);
    std::vector<double> u(7), v(5);
    rng.fill_normal(u);
    rng.fill_normal(v);
    DenseMat R(7, 5);
    double nu = 0.0, nv = 0.0;
    for (double x : u) nu += x * x;
    for (double x : v) nv += x * x;
    for (std::size_t i = 0; i < 7; ++i)
        for (std::size_t j = 0; j < 5; ++j) R.at(i, j) = u[i] * v[j];
    auto sv = singular_values(R);
    CHECK(sv[0] == doctest::Approx(std::sqrt(nu * nv)).epsilon(1e-12));
    // Gram-route noise floor is sqrt(machine eps) relative.
    for (std::size_t i = 1; i < sv.size(); ++i) CHECK(sv[i] <= 1e-7 * sv[0]);
}

TEST_CASE("singular values match gram eigenvalue oracle on random 16x16") {
    RngStream rng(15, 0, RngPurpose::test);
    DenseMat B = random_mat(16, 16, rng);
    DenseMat G(16, 16);
    for (std::size_t i = 0; i < 16; ++i)
        for (std::size_t j = 0; j < 16; ++j) {
            double acc = 0.0;
            for (std::size_t k = 0; k < 16; ++k) acc += B.at(k, i) * B.at(k, j);
            G.at(i, j) = acc;
        }
    auto eg = sym_eig(G);
    auto sv = singular_values(B);
    for (std::size_t i = 0; i < 16; ++i)
        CHECK(sv[i] == doctest::Approx(std::sqrt(std::max(0.0, eg.eigenvalues[15 - i])))
                           .epsilon(1e-10));
}

TEST_CASE("one-sided jacobi agrees with gram route above the dispatch size") {
    RngStream rng(16, 0, RngPurpose::test);
    DenseMat B = random_mat(540, 24, rng); // min dim 24 -> gram route
    DenseMat Bt = B.transposed();          // 24 x 540 still gram route
    DenseMat wide(540, 540);
    for (std::size_t i = 0; i < 540; ++i)
        for (std::size_t j = 0; j < 24; ++j) wide.at(i, j) = B.at(i, j);
    auto sv_gram = singular_values(B);
    auto sv_one_sided = singular_values(wide); // min dim 540 -> one-sided path
    for (std::size_t i = 0; i < 24; ++i)
        CHECK(sv_one_sided[i] == doctest::Approx(sv_gram[i]).epsilon(1e-9));
    // Frobenius identity.
    double fro2 = 0.0, sum2 = 0.0;
    for (double v : B.data) fro2 += v * v;
    for (double s : sv_gram) sum2 += s * s;
    CHECK(sum2 == doctest::Approx(fro2).epsilon(1e-10));
}

TEST_CASE("rng streams are reproducible and purpose-decorrelated") {
    RngStream a(123, 5, RngPurpose::probes);
    RngStream b(123, 5, RngPurpose::probes);
    for (int i = 0; i < 100; ++i) CHECK(a.next_bits() == b.next_bits());

    RngStream c(123, 5, RngPurpose::rhs);
    const std::size_t n = 10000;
    std::vector<double> x(n), y(n);
    RngStream a2(123, 5, RngPurpose::probes);
    a2.fill_normal(x);
    c.fill_normal(y);
    double sx = 0, sy = 0, sxy = 0, sxx = 0, syy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sx += x[i];
        sy += y[i];
        sxy += x[i] * y[i];
        sxx += x[i] * x[i];
        syy += y[i] * y[i];
    }
    const double corr = (n * sxy - sx * sy) /
                        std::sqrt((n * sxx - sx * sx) * (n * syy - sy * sy));
    CHECK(std::fabs(corr) < 0.05);
}

TEST_CASE("normal sampler statistics") {
    RngStream rng(2024, 0, RngPurpose::test);
    const std::size_t n = 100000;
    std::vector<double> x(n);
    rng.fill_normal(x);
    double mean = 0.0;
    for (double v : x) mean += v;
    mean /= n;
    double var = 0.0;
    for (double v : x) var += (v - mean) * (v - mean);
    var /= n;
    CHECK(std::fabs(mean) <= 0.02);
    CHECK(std::fabs(var - 1.0) <= 0.02);
}

TEST_CASE("probe whiteness in a fixed orthonormal basis") {
    const std::size_t n = 64;
    RngStream basis_rng(31, 0, RngPurpose::test);
    auto eg = sym_eig(random_symmetric(n, basis_rng)); // orthonormal columns
    std::vector<double> second_moment(n, 0.0);
    const int probes = 10000;
    RngStream rng(77, 0, RngPurpose::probes);
    std::vector<double> z(n);
    for (int p = 0; p < probes; ++p) {
        rng.fill_normal(z);
        for (std::size_t i = 0; i < n; ++i) {
            double dot = 0.0;
            for (std::size_t k = 0; k < n; ++k) dot += eg.vectors.at(k, i) * z[k];
            second_moment[i] += dot * dot;
        }
    }
    for (std::size_t i = 0; i < n; ++i) {
        const double m = second_moment[i] / probes;
        CHECK(m >= 0.9);
        CHECK(m <= 1.1);
    }
}

TEST_CASE("morton encoding convention") {
    CHECK(morton_encode(0, 0) == 0);
    CHECK(morton_encode(1, 1) == 3);
    CHECK(morton_encode(3, 5) == 39);

    // Reference bit-interleave oracle.
    auto reference = [](std::uint32_t x, std::uint32_t y) {
        std::uint32_t code = 0;
        for (int b = 0; b < 16; ++b) {
            code |= ((x >> b) & 1u) << (2 * b);
            code |= ((y >> b) & 1u) << (2 * b + 1);
        }
        return code;
    };
    RngStream rng(5, 0, RngPurpose::test);
    for (int t = 0; t < 200; ++t) {
        const auto x = static_cast<std::uint32_t>(rng.next_below(1u << 16));
        const auto y = static_cast<std::uint32_t>(rng.next_below(1u << 16));
        CHECK(morton_encode(x, y) == reference(x, y));
        std::uint32_t dx, dy;
        morton_decode(morton_encode(x, y), dx, dy);
        CHECK(dx == x);
        CHECK(dy == y);
    }
}
