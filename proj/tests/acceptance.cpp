// Acceptance suite: every checkable claim the artifact commits to, one
// criterion per function, one PASS/FAIL line each. Run all or a subset:
//   acceptance            (all)
//   acceptance 1 4 13     (subset)

#include "hfp/adjoint.hpp"
#include "hfp/apply.hpp"
#include "hfp/eig.hpp"
#include "hfp/frame.hpp"
#include "hfp/ic0.hpp"
#include "hfp/probes.hpp"
#include "hfp/rank_audit.hpp"
#include "hfp/report.hpp"
#include "hfp/spectrum.hpp"
#include "hfp/toy_net.hpp"
#include "hfp/train.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>
#include <map>
#include <string>
#include <vector>

namespace {

using namespace hfp;

struct Check {
    bool ok = true;
    std::string detail;
    void require(bool cond, const std::string& what) {
        if (!cond && ok) {
            ok = false;
            detail = what;
        }
    }
    void note(const std::string& info) {
        if (detail.empty()) detail = info;
    }
};

constexpr std::uint64_t kSeed = 2024;

// ---- 1: partition counts -------------------------------------------------
Check criterion_partition_counts() {
    Check c;
    for (std::size_t k : {2u, 4u, 8u, 16u, 32u, 64u, 128u, 256u}) {
        HPartition p = build_partition(k * 4, 4);
        c.require(p.tile_count() == k - 1,
                  "tile count != K-1 at K=" + std::to_string(k));
    }
    return c;
}

// ---- 2: packed width -----------------------------------------------------
Check criterion_packed_width() {
    Check c;
    const std::pair<std::size_t, std::size_t> cases[] = {
        {1024, 204800}, {2048, 410624}, {8192, 1645568}, {16384, 3292160}};
    for (const auto& [n, want] : cases) {
        const std::size_t got = packed_width(build_partition(n, 128), 32);
        c.require(got == want, "P(" + std::to_string(n) + ") = " + std::to_string(got) +
                                   ", want " + std::to_string(want));
    }
    return c;
}

// ---- 3: apply vs dense oracle ---------------------------------------------
Check criterion_apply_oracle() {
    Check c;
    RngStream rr(kSeed, 3, RngPurpose::test);
    int remaining = 20;
    double worst_single = 0.0, worst_double = 0.0;
    for (std::size_t n : {256u, 512u, 1024u}) {
        const std::size_t per = (n == 1024) ? remaining : 7;
        const std::size_t leaf = clamp_leaf_size(n, 128);
        HPartition p = build_partition(n, leaf);
        std::vector<double> diag(n);
        for (double& d : diag) d = 1.0 + std::fabs(rr.next_normal());
        for (std::size_t t = 0; t < per; ++t, --remaining) {
            RngStream rng(kSeed, n * 100 + t, RngPurpose::factor_init);
            FactorTensor f = init_factors<float>(p, 32, FactorInit::random, 1.0, rng);
            auto r = rr.normal_vector(n);
            const double errf = apply_transposed_tiles_check(f, diag, r);
            worst_single = std::max(worst_single, errf);
            c.require(errf <= 1e-5, "single-precision mismatch " + std::to_string(errf));
            RngStream rng2(kSeed, n * 100 + t, RngPurpose::factor_init);
            PackedFactors<double> fd =
                init_factors<double>(p, 32, FactorInit::random, 1.0, rng2);
            const double errd = apply_transposed_tiles_check(fd, diag, r);
            worst_double = std::max(worst_double, errd);
            c.require(errd <= 1e-12, "double-precision mismatch " + std::to_string(errd));
        }
    }
    c.note("worst single " + std::to_string(worst_single) + ", worst double " +
           std::to_string(worst_double));
    return c;
}

// ---- 4: loss laws ----------------------------------------------------------
Check criterion_loss_laws() {
    Check c;
    RngStream rng(kSeed, 4, RngPurpose::probes);
    auto z = rng.normal_vector(4096);
    c.require(std::fabs(cosine_loss(z, z)) <= 1e-10, "L(Z,Z) != 0");
    std::vector<double> neg(z.size());
    for (std::size_t i = 0; i < z.size(); ++i) neg[i] = -z[i];
    c.require(std::fabs(cosine_loss(z, neg) - 2.0) <= 1e-10, "L(Z,-Z) != 2");
    for (double alpha : {1e-3, 1.0, 1e3}) {
        std::vector<double> s(z.size());
        for (std::size_t i = 0; i < z.size(); ++i) s[i] = alpha * z[i];
        c.require(std::fabs(cosine_loss(z, s)) <= 1e-10,
                  "L(Z,aZ) != 0 at a=" + std::to_string(alpha));
    }

    // Projector identity at n <= 64.
    for (std::size_t n : {16u, 64u}) {
        auto u = rng.normal_vector(n);
        auto v = rng.normal_vector(n);
        double uu = 0, vv = 0, uv = 0;
        for (std::size_t i = 0; i < n; ++i) {
            uu += u[i] * u[i];
            vv += v[i] * v[i];
            uv += u[i] * v[i];
        }
        double fro2 = 0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) {
                const double d = u[i] * u[j] / uu - v[i] * v[j] / vv;
                fro2 += d * d;
            }
        c.require(std::fabs(0.5 * fro2 - (1.0 - uv * uv / (uu * vv))) <= 1e-12,
                  "projector identity violated");
    }

    // SAI loss moves under a positive rescaling of M.
    Frame fr = make_frame(256, kSeed, 40);
    HPartition p = build_partition(256, 128);
    RngStream fs(kSeed, 41, RngPurpose::factor_init);
    PackedFactors<double> f = init_factors<double>(p, 32, FactorInit::random, 0.3, fs);
    const auto diag = fr.A.diagonal();
    const std::size_t kz = 16;
    std::vector<double> zb(256 * kz);
    rng.fill_normal(zb);
    RngStream ps(kSeed, 42, RngPurpose::power_iter);
    const double na = power_iteration_norm(fr.A, ps);
    BatchApplyContext ctx(f.layout, kz);
    std::vector<double> w(256 * kz);
    factor_apply_batch(f, diag, zb, ctx, w);
    const double l1 = sai_loss(fr.A, w, zb, kz, na);
    PackedFactors<double> f2 = f;
    for (std::size_t i = 0; i < f2.layout.gate_base; ++i) f2.data[i] *= std::sqrt(2.0);
    for (std::size_t m = 0; m < f2.layout.tile_count; ++m)
        for (double& x : f2.tile_v(m)) x *= std::sqrt(2.0);
    for (double& g : f2.gate()) g *= 2.0;
    factor_apply_batch(f2, diag, zb, ctx, w);
    const double l2 = sai_loss(fr.A, w, zb, kz, na);
    c.require(std::fabs(l2 - l1) > 1e-6, "SAI loss invariant under alpha=2 scaling");
    return c;
}

// ---- 5: gradient correctness ----------------------------------------------
Check criterion_gradient() {
    Check c;
    const std::size_t n = 256;
    Frame fr = make_frame(n, kSeed, 50);
    HPartition p = build_partition(n, 128);
    RngStream rng(kSeed, 51, RngPurpose::factor_init);
    PackedFactors<double> f = init_factors<double>(p, 32, FactorInit::random, 0.5, rng);
    const std::size_t kz = probe_count(n);
    RngStream zs(kSeed, 52, RngPurpose::probes);
    ProbeBatch probes = sample_probes(n, zs);
    smooth_probes(fr.A, probes, 0.6, 2);
    BatchApplyContext ctx(f.layout, kz);
    const auto diag = fr.A.diagonal();

    LossGradResult lg = loss_gradient(f, fr.A, probes.z, kz, LossKind::cosine, 1.0, ctx);
    c.require(!lg.degenerate, "degenerate loss");

    auto loss_at = [&](PackedFactors<double>& g) {
        std::vector<double> az(n * kz), y(n * kz);
        spmm(fr.A, probes.z, kz, az);
        factor_apply_batch(g, diag, az, ctx, y);
        return cosine_loss(probes.z, y);
    };
    RngStream pick(kSeed, 53, RngPurpose::test);
    const double h = 3e-5;
    double worst = 0.0;
    for (int t = 0; t < 50; ++t) {
        const std::size_t idx = pick.next_below(f.layout.total);
        PackedFactors<double> g = f;
        g.data[idx] = f.data[idx] + h;
        const double lp = loss_at(g);
        g.data[idx] = f.data[idx] - h;
        const double lm = loss_at(g);
        const double fd = (lp - lm) / (2.0 * h);
        const double ad = lg.grad[idx];
        const double rel = std::fabs(fd - ad) / std::max({std::fabs(fd), std::fabs(ad), 1e-10});
        worst = std::max(worst, rel);
        c.require(rel <= 1e-4, "FD mismatch " + std::to_string(rel) + " at coordinate " +
                                   std::to_string(idx));
    }
    c.note("worst relative error " + std::to_string(worst));
    return c;
}

// ---- 6: probe machinery -----------------------------------------------------
Check criterion_probes() {
    Check c;
    c.require(probe_count(1024) == 64, "K_z(1024) != 64");
    c.require(probe_count(4096) == 64, "K_z(4096) != 64");
    c.require(probe_count(16384) == 128, "K_z(16384) != 128");

    // Eigenmode damping by (1 - 0.6 mu)^2 on a 16x16 operator.
    {
        const auto [w, h] = grid_dims(16);
        auto order = morton_cell_order(w, h, 16);
        std::vector<double> rho(16);
        for (std::size_t i = 0; i < 16; ++i) rho[i] = 1.0 + 0.2 * ((3 * i) % 7);
        CsrMatrix A = assemble_operator(rho, w, h, order);
        const auto diag = A.diagonal();
        DenseMat S(16, 16);
        for (std::size_t i = 0; i < 16; ++i)
            for (std::uint64_t q = A.row_offsets[i]; q < A.row_offsets[i + 1]; ++q)
                S.at(i, A.col_indices[q]) =
                    A.values[q] / std::sqrt(diag[i] * diag[A.col_indices[q]]);
        auto eg = sym_eig(S);
        for (std::size_t pick = 0; pick < 16; ++pick) {
            const double mu = eg.eigenvalues[pick];
            ProbeBatch pb;
            pb.n = 16;
            pb.count = 1;
            pb.z.resize(16);
            for (std::size_t i = 0; i < 16; ++i)
                pb.z[i] = eg.vectors.at(i, pick) / std::sqrt(diag[i]);
            std::vector<double> before = pb.z;
            smooth_probes(A, pb, 0.6, 2);
            const double damp = (1.0 - 0.6 * mu) * (1.0 - 0.6 * mu);
            for (std::size_t i = 0; i < 16; ++i)
                c.require(std::fabs(pb.z[i] - damp * before[i]) <= 1e-10,
                          "eigenmode damping off at mu=" + std::to_string(mu));
        }
    }

    // Whiteness: empirical second moments in a fixed orthonormal basis.
    {
        const std::size_t n = 64;
        RngStream basis_rng(kSeed, 60, RngPurpose::test);
        DenseMat sym(n, n);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i; j < n; ++j)
                sym.at(i, j) = sym.at(j, i) = basis_rng.next_normal();
        auto eg = sym_eig(sym);
        std::vector<double> moment(n, 0.0);
        RngStream rng(kSeed, 61, RngPurpose::probes);
        std::vector<double> z(n);
        const int probes = 10000;
        for (int t = 0; t < probes; ++t) {
            rng.fill_normal(z);
            for (std::size_t i = 0; i < n; ++i) {
                double dot = 0.0;
                for (std::size_t k = 0; k < n; ++k) dot += eg.vectors.at(k, i) * z[k];
                moment[i] += dot * dot;
            }
        }
        for (std::size_t i = 0; i < n; ++i) {
            const double m = moment[i] / probes;
            c.require(m >= 0.9 && m <= 1.1,
                      "whiteness moment " + std::to_string(m) + " outside [0.9, 1.1]");
        }
    }
    return c;
}

// ---- 7: CG finite termination ----------------------------------------------
Check criterion_cg_termination() {
    Check c;
    RngStream rng(kSeed, 70, RngPurpose::test);
    for (std::size_t distinct : {1u, 3u, 5u, 10u}) {
        const std::size_t n = 120;
        CsrMatrix A;
        A.n_rows = A.n_cols = n;
        A.row_offsets.push_back(0);
        for (std::size_t i = 0; i < n; ++i) {
            A.col_indices.push_back(static_cast<std::uint32_t>(i));
            A.values.push_back(1.0 + static_cast<double>(i % distinct) * 5.7);
            A.row_offsets.push_back(i + 1);
        }
        auto b = rng.normal_vector(n);
        SolveConfig cfg;
        cfg.rtol = 1e-12;
        auto rep = pcg_solve(A, b, identity_applier(), cfg);
        c.require(rep.converged && rep.iterations <= distinct,
                  "c=" + std::to_string(distinct) + " took " +
                      std::to_string(rep.iterations) + " iterations");
    }
    return c;
}

// ---- 8: benchmark validity ---------------------------------------------------
Check criterion_benchmark_validity() {
    Check c;
    for (std::uint64_t idx = 0; idx < 50; ++idx) {
        Frame f = make_frame(1024, kSeed, idx);
        f.A.validate(/*check_symmetric=*/true);
        const double fro = f.A.frobenius_norm();
        std::vector<double> ones(f.n, 1.0);
        auto a1 = spmv(f.A, ones);
        for (double v : a1)
            c.require(std::fabs(v) <= 1e-12 * fro, "A*1 != 0");
        double bsum = 0.0, bnorm = 0.0;
        for (double v : f.b) {
            bsum += v;
            bnorm += v * v;
        }
        c.require(std::fabs(bsum) <= 1e-10 * std::sqrt(bnorm), "1^T b != 0");

        auto eg = sym_eig(dense_from_csr(f.A), /*compute_vectors=*/false);
        const double lmax = eg.eigenvalues.back();
        c.require(std::fabs(eg.eigenvalues[0]) <= 1e-8 * lmax,
                  "null mode missing (lambda_min = " + std::to_string(eg.eigenvalues[0]) + ")");
        c.require(eg.eigenvalues[1] > 1e-8 * lmax, "more than one near-zero eigenvalue");

        // Harmonic-mean conductance spot checks on the first few rows.
        std::size_t checked = 0;
        for (std::size_t i = 0; i < f.n && checked < 8; ++i)
            for (std::uint64_t q = f.A.row_offsets[i];
                 q < f.A.row_offsets[i + 1] && checked < 8; ++q) {
                const std::size_t j = f.A.col_indices[q];
                if (j == i) continue;
                const double want = -2.0 * f.rho[i] * f.rho[j] / (f.rho[i] + f.rho[j]);
                c.require(std::fabs(f.A.values[q] - want) <=
                              1e-12 * std::fabs(want),
                          "conductance mismatch");
                ++checked;
            }
        if (!c.ok) break;
    }
    return c;
}

// ---- 9: baseline ordering ------------------------------------------------------
Check criterion_baseline_ordering() {
    Check c;
    const std::size_t frames = 20;
    SolveConfig cfg; // rtol 1e-8
    std::size_t uj = 0, ji = 0;
    double mean_u = 0, mean_j = 0, mean_i = 0;
    for (std::uint64_t i = 0; i < frames; ++i) {
        Frame f = make_frame(1024, kSeed, test_frame_id(1024, i));
        auto ru = pcg_solve(f.A, f.b, identity_applier(), cfg);
        auto rj = pcg_solve(f.A, f.b, jacobi_applier(f.A), cfg);
        auto ri = pcg_solve(f.A, f.b, ic0_applier(ic0_factorize(f.A)), cfg);
        c.require(ru.converged && rj.converged && ri.converged,
                  "a baseline failed to converge on frame " + std::to_string(i));
        if (ru.iterations > rj.iterations) ++uj;
        if (rj.iterations > ri.iterations) ++ji;
        mean_u += static_cast<double>(ru.iterations);
        mean_j += static_cast<double>(rj.iterations);
        mean_i += static_cast<double>(ri.iterations);
    }
    mean_u /= frames;
    mean_j /= frames;
    mean_i /= frames;
    c.require(mean_u > mean_j && mean_j > mean_i, "mean ordering violated");
    c.require(uj * 5 >= frames * 4, "unprec > jacobi on only " + std::to_string(uj) + "/20");
    c.require(ji * 5 >= frames * 4, "jacobi > ic0 on only " + std::to_string(ji) + "/20");
    char buf[128];
    std::snprintf(buf, sizeof(buf), "means %.1f > %.1f > %.1f; strict %zu/20 and %zu/20",
                  mean_u, mean_j, mean_i, uj, ji);
    c.note(buf);
    return c;
}

// ---- 10: training efficacy ---------------------------------------------------
Check criterion_training_efficacy() {
    Check c;
    Frame f = make_frame(1024, kSeed, 0);
    SolveConfig scfg;
    const auto jac = pcg_solve(f.A, f.b, jacobi_applier(f.A), scfg);
    const std::size_t target = jac.iterations / 2;

    TrainConfig tc;
    tc.max_steps = 20000;
    tc.log_every = 100;
    tc.eval_every_logs = 2;
    tc.stop_at_iters = target;
    TrainResult res = train_factors({&f}, tc, kSeed);

    std::size_t final_iters = 0;
    for (auto it = res.history.entries.rbegin(); it != res.history.entries.rend(); ++it)
        if (it->pcg_iters_heldout != 0) {
            final_iters = it->pcg_iters_heldout;
            break;
        }
    c.require(final_iters != 0 && final_iters <= target,
              "reached " + std::to_string(final_iters) + " vs target " +
                  std::to_string(target));

    // Training profile sanity: the logged loss fell by 10x or better over
    // the run whenever the run went long enough to show it.
    if (res.history.entries.size() >= 5)
        c.require(res.history.entries.back().train_loss <
                      res.history.entries.front().train_loss,
                  "loss did not decrease");

    // Spectrum ordering: the trained tensor's kappa reduction is at least
    // Jacobi's on the training frame.
    auto spec_j = precond_spectrum(f.A, jacobi_applier(f.A));
    auto spec_t = precond_spectrum(f.A, factor_applier(res.factors, f.A));
    c.require(spec_t.kappa_reduction >= spec_j.kappa_reduction,
              "trained kappa reduction below jacobi");
    char buf[160];
    std::snprintf(buf, sizeof(buf),
                  "jacobi %zu iters, trained %zu (target %zu) in %zu steps; "
                  "kappa reduction %.1fx vs jacobi %.1fx",
                  jac.iterations, final_iters, target, res.history.total_steps,
                  spec_t.kappa_reduction, spec_j.kappa_reduction);
    c.note(buf);
    return c;
}

// ---- 11: loss ablation direction ----------------------------------------------
Check criterion_loss_ablation() {
    Check c;
    Frame f = make_frame(1024, kSeed, 1);
    SolveConfig scfg;
    std::size_t cosine_wins = 0;
    std::string detail;
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        std::size_t iters[2];
        for (LossKind kind : {LossKind::cosine, LossKind::sai}) {
            TrainConfig tc;
            tc.loss = kind;
            tc.max_steps = 3000;
            tc.log_every = 100;
            tc.eval_every_logs = 0; // no mid-run evals; compare final tensors
            TrainResult res = train_factors({&f}, tc, seed);
            auto rep = pcg_solve(f.A, f.b, factor_applier(res.factors, f.A), scfg);
            iters[kind == LossKind::cosine ? 0 : 1] =
                rep.converged ? rep.iterations : scfg.max_iters;
        }
        if (iters[0] < iters[1]) ++cosine_wins;
        detail += "seed " + std::to_string(seed) + ": cosine " + std::to_string(iters[0]) +
                  " vs sai " + std::to_string(iters[1]) + "; ";
    }
    c.require(cosine_wins >= 2,
              "cosine won only " + std::to_string(cosine_wins) + "/3 — " + detail);
    c.note(detail + "cosine wins " + std::to_string(cosine_wins) + "/3");
    return c;
}

// ---- 12: rank audit -------------------------------------------------------------
Check criterion_rank_audit() {
    Check c;
    HPartition p = build_partition(1024, 128);
    std::vector<std::vector<double>> means; // frame -> per-span mean at eps=1e-3
    std::vector<std::size_t> spans;
    std::vector<double> provided;
    std::vector<double> accum;
    for (std::uint64_t idx = 0; idx < 10; ++idx) {
        Frame f = make_frame(1024, kSeed, 100 + idx);
        auto rep = rank_audit(f.A, p, 32, {1e-3, 1e-6, 1e-9});
        if (accum.empty()) {
            accum.assign(rep.rows.size(), 0.0);
            for (const auto& row : rep.rows) {
                spans.push_back(row.span);
                provided.push_back(row.provided_fraction);
            }
        }
        for (std::size_t r = 0; r < rep.rows.size(); ++r)
            accum[r] += rep.rows[r].required_mean[0];
    }
    for (double& a : accum) a /= 10.0;
    std::string detail;
    for (std::size_t r = 0; r < accum.size(); ++r) {
        detail += "S=" + std::to_string(spans[r]) + ": required " +
                  std::to_string(accum[r]) + " provided " + std::to_string(provided[r]) +
                  "; ";
        if (r > 0)
            c.require(accum[r] <= accum[r - 1] + 1e-12,
                      "required fraction not monotone at S=" + std::to_string(spans[r]));
        c.require(provided[r] > accum[r],
                  "provided fraction below required at S=" + std::to_string(spans[r]));
    }
    c.note(detail);
    return c;
}

// ---- 13: toy network --------------------------------------------------------------
Check criterion_toy_network() {
    Check c;
    Frame f = make_frame(256, kSeed, 130);
    HPartition p = build_partition(256, 16);
    const std::size_t ls = 4;
    toynet::Config cfg;
    toynet::Weights w = toynet::init_weights(cfg, make_factor_layout(p, ls), kSeed);
    toynet::Trace trace;
    FactorTensor out = toynet::forward(f, p, ls, cfg, w, &trace);
    c.require(out.data.size() == packed_width(p, ls), "packed width mismatch");
    c.require(trace.max_attention_row_sum_error <= 1e-6, "attention rows do not sum to 1");
    c.require(trace.highway_max_deviation <= 1e-5, "highway conservation violated");
    c.require(trace.attention_kernel_families() == 2,
              "expected exactly two attention kernel families");
    char buf[128];
    std::snprintf(buf, sizeof(buf), "width %zu, row-sum err %.2e, highway dev %.2e",
                  out.data.size(), trace.max_attention_row_sum_error,
                  trace.highway_max_deviation);
    c.note(buf);
    return c;
}

struct Criterion {
    int id;
    const char* name;
    std::function<Check()> run;
};

} // namespace

int main(int argc, char** argv) {
    const std::vector<Criterion> criteria = {
        {1, "partition counts M_H = K-1", criterion_partition_counts},
        {2, "packed factor-tensor width", criterion_packed_width},
        {3, "apply vs dense oracle", criterion_apply_oracle},
        {4, "cosine/SAI loss laws", criterion_loss_laws},
        {5, "adjoint gradient vs finite differences", criterion_gradient},
        {6, "probe count, smoothing, whiteness", criterion_probes},
        {7, "CG finite termination", criterion_cg_termination},
        {8, "benchmark frame validity", criterion_benchmark_validity},
        {9, "baseline iteration ordering", criterion_baseline_ordering},
        {10, "training efficacy vs jacobi", criterion_training_efficacy},
        {11, "cosine vs SAI ablation direction", criterion_loss_ablation},
        {12, "rank audit monotonicity and headroom", criterion_rank_audit},
        {13, "toy network routing and conservation", criterion_toy_network},
    };

    std::vector<int> selected;
    for (int a = 1; a < argc; ++a) selected.push_back(std::atoi(argv[a]));

    int failures = 0;
    for (const Criterion& cr : criteria) {
        if (!selected.empty() &&
            std::find(selected.begin(), selected.end(), cr.id) == selected.end())
            continue;
        Check result;
        try {
            result = cr.run();
        } catch (const std::exception& e) {
            result.ok = false;
            result.detail = std::string("exception: ") + e.what();
        }
        std::printf("%s criterion %2d: %s%s%s\n", result.ok ? "PASS" : "FAIL", cr.id,
                    cr.name, result.detail.empty() ? "" : " — ", result.detail.c_str());
        std::fflush(stdout);
        if (!result.ok) ++failures;
    }
    if (failures) std::printf("%d criterion(s) failed\n", failures);
    return failures == 0 ? 0 : 1;
}
