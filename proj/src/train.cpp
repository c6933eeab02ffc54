#include "hfp/train.hpp"

#include "hfp/probes.hpp"

#include "json.hpp"

#include <chrono>
#include <cmath>
#include <stdexcept>

namespace hfp {

std::string TrainHistory::to_jsonl() const {
    std::string out;
    for (const TrainLogEntry& e : entries) {
        nlohmann::json j;
        j["step"] = e.step;
        j["train_loss"] = e.train_loss;
        j["sai_heldout"] = e.sai_heldout;
        j["pcg_iters_heldout"] = e.pcg_iters_heldout;
        j["lr"] = e.lr;
        j["wall_s"] = e.wall_s;
        out += j.dump();
        out += '\n';
    }
    return out;
}

TrainResult train_factors(const std::vector<const Frame*>& frames, const TrainConfig& cfg,
                          std::uint64_t seed, const Frame* eval_frame) {
    if (frames.empty()) throw std::invalid_argument("train_factors: no frames");
    const std::size_t n = frames[0]->n;
    for (const Frame* f : frames)
        if (f->n != n)
            throw std::invalid_argument("train_factors: frames must share N");
    if (!eval_frame) eval_frame = frames[0];

    const std::size_t leaf = clamp_leaf_size(n, cfg.leaf_size);
    const HPartition partition = build_partition(n, leaf);
    const FactorLayout layout = make_factor_layout(partition, cfg.coarse_size);
    const std::size_t kz = probe_count(n);

    RngStream init_stream(seed, 0, RngPurpose::factor_init);
    PackedFactors<double> params =
        init_factors<double>(partition, cfg.coarse_size, FactorInit::jacobi_seed,
                             cfg.init_sigma, init_stream);

    // Per-frame cached pieces: diagonals and (for the SAI objective) norms.
    std::vector<std::vector<double>> diags;
    std::vector<double> norms(frames.size(), 0.0);
    for (std::size_t i = 0; i < frames.size(); ++i) {
        diags.push_back(frames[i]->A.diagonal());
        if (cfg.loss == LossKind::sai) {
            RngStream ps(seed, frames[i]->frame_index, RngPurpose::power_iter);
            norms[i] = power_iteration_norm(frames[i]->A, ps);
        }
    }
    RngStream eval_power(seed, eval_frame->frame_index, RngPurpose::power_iter);
    const double eval_norm = power_iteration_norm(eval_frame->A, eval_power);
    const auto eval_diag = eval_frame->A.diagonal();

    // Fixed, pre-smoothed evaluation probes so the held-out SAI metric is
    // comparable across checkpoints.
    RngStream eval_probe_stream(seed ^ 0x5eedULL, eval_frame->frame_index,
                                RngPurpose::probes);
    ProbeBatch eval_probes = sample_probes(n, eval_probe_stream);
    smooth_probes(eval_frame->A, eval_probes, cfg.probe_omega, cfg.probe_smooth_steps);

    BatchApplyContext ctx(layout, kz);
    std::vector<double> m1(layout.total, 0.0), m2(layout.total, 0.0);
    std::vector<double> grad(layout.total, 0.0);
    const double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;

    double lr = cfg.lr;
    const double min_lr = std::max(cfg.lr * 1e-3, 1e-6);

    // Plateau scheduler state (relative threshold, min mode).
    double sched_best = std::numeric_limits<double>::infinity();
    std::size_t sched_bad = 0;
    // Auto-stop state; the improvement window does not reset on LR drops.
    double stop_best = std::numeric_limits<double>::infinity();
    std::size_t stop_bad = 0;
    std::size_t diverged_logs = 0;

    RngStream train_stream(seed, 1, RngPurpose::probes);

    TrainResult result;
    TrainHistory& hist = result.history;
    const auto t0 = std::chrono::steady_clock::now();
    double window_loss = 0.0;
    std::size_t window_count = 0;
    std::size_t logs_emitted = 0;

    auto snapshot = [&]() { return params.cast<float>(); };

    auto eval_pcg_iters = [&](const FactorTensor& f) {
        SolveConfig scfg;
        scfg.rtol = cfg.solve_rtol;
        scfg.max_iters = cfg.solve_max_iters;
        auto rep = pcg_solve(eval_frame->A, eval_frame->b, factor_applier(f, eval_frame->A),
                             scfg);
        return rep.iterations;
    };
    auto eval_sai = [&](const FactorTensor& f) {
        PackedFactors<double> fd = f.cast<double>();
        std::vector<double> w(n * kz);
        factor_apply_batch(fd, eval_diag, eval_probes.z, ctx, w);
        return sai_loss(eval_frame->A, w, eval_probes.z, kz, eval_norm);
    };

    std::size_t step = 0;
    for (step = 1; step <= cfg.max_steps; ++step) {
        for (double& g : grad) g = 0.0;
        double step_loss = 0.0;
        std::size_t valid_contexts = 0;
        for (std::size_t c = 0; c < cfg.contexts_per_step; ++c) {
            const std::size_t fi =
                frames.size() == 1 ? 0 : train_stream.next_below(frames.size());
            ProbeBatch probes = sample_probes(n, train_stream);
            smooth_probes(frames[fi]->A, probes, cfg.probe_omega, cfg.probe_smooth_steps);
            LossGradResult lg = loss_gradient(params, frames[fi]->A, probes.z, kz,
                                              cfg.loss, norms[fi], ctx);
            if (lg.degenerate) continue; // skip this context
            for (std::size_t i = 0; i < grad.size(); ++i) grad[i] += lg.grad[i];
            step_loss += lg.loss;
            ++valid_contexts;
        }
        if (valid_contexts == 0) continue; // fully degenerate step, skipped
        const double inv = 1.0 / static_cast<double>(valid_contexts);
        for (double& g : grad) g *= inv;
        step_loss *= inv;
        window_loss += step_loss;
        ++window_count;

        // Global clip.
        double gnorm = 0.0;
        for (double g : grad) gnorm += g * g;
        gnorm = std::sqrt(gnorm);
        if (gnorm > cfg.clip_norm && gnorm > 0.0) {
            const double s = cfg.clip_norm / gnorm;
            for (double& g : grad) g *= s;
        }

        // AdamW with decoupled weight decay.
        const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(step));
        const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(step));
        for (std::size_t i = 0; i < params.data.size(); ++i) {
            m1[i] = beta1 * m1[i] + (1.0 - beta1) * grad[i];
            m2[i] = beta2 * m2[i] + (1.0 - beta2) * grad[i] * grad[i];
            const double mhat = m1[i] / bc1;
            const double vhat = m2[i] / bc2;
            params.data[i] -=
                lr * (mhat / (std::sqrt(vhat) + eps) + cfg.weight_decay * params.data[i]);
        }

        if (step % cfg.log_every != 0) continue;

        const double metric = window_loss / static_cast<double>(window_count);
        window_loss = 0.0;
        window_count = 0;
        ++logs_emitted;

        TrainLogEntry entry;
        entry.step = step;
        entry.train_loss = metric;
        entry.lr = lr;
        entry.wall_s =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (cfg.eval_every_logs != 0 && logs_emitted % cfg.eval_every_logs == 0) {
            FactorTensor f = snapshot();
            entry.pcg_iters_heldout = eval_pcg_iters(f);
            entry.sai_heldout = eval_sai(f);
        }
        hist.entries.push_back(entry);

        // Plateau schedule.
        if (metric < sched_best * (1.0 - cfg.plateau.rel_threshold)) {
            sched_best = metric;
            sched_bad = 0;
        } else if (++sched_bad > cfg.plateau.patience) {
            lr = std::max(lr * cfg.plateau.factor, min_lr);
            sched_bad = 0;
        }

        // Auto-stop.
        if (metric < stop_best * (1.0 - cfg.plateau.rel_threshold)) {
            stop_best = metric;
            stop_bad = 0;
        } else {
            ++stop_bad;
        }
        if (lr <= min_lr && stop_bad >= cfg.autostop_window) {
            hist.auto_stopped = true;
            break;
        }

        // Divergence abort; the 1.9 ceiling is meaningful only for the
        // cosine objective (anti-alignment), never for the unnormalized SAI.
        if (cfg.loss == LossKind::cosine) {
            diverged_logs = (metric > 1.9) ? diverged_logs + 1 : 0;
            if (diverged_logs >= 20) {
                hist.aborted_divergence = true;
                break;
            }
        }

        // Optional target early-exit.
        if (cfg.stop_at_iters != 0 && entry.pcg_iters_heldout != 0 &&
            entry.pcg_iters_heldout <= cfg.stop_at_iters) {
            hist.reached_target = true;
            break;
        }
    }
    hist.total_steps = std::min(step, cfg.max_steps);
    result.factors = snapshot();
    return result;
}

} // namespace hfp
