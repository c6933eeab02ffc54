#pragma once

#include "hfp/adjoint.hpp"
#include "hfp/frame.hpp"
#include "hfp/pcg.hpp"

#include <string>
#include <vector>

namespace hfp {

struct PlateauConfig {
    double factor = 0.5;
    std::size_t patience = 5;   // log steps without improvement before a drop
    double rel_threshold = 5e-3;
    // Resolved at training start: max(lr * 1e-3, 1e-6).
};

struct TrainConfig {
    double lr = 2e-4;
    double weight_decay = 1e-4;
    double clip_norm = 1.0;
    PlateauConfig plateau;
    std::size_t max_steps = 100000;
    std::size_t autostop_window = 10; // log steps
    double probe_omega = 0.6;
    std::size_t probe_smooth_steps = 2;
    std::size_t contexts_per_step = 4;
    LossKind loss = LossKind::cosine;
    std::size_t log_every = 100; // optimizer steps per log step
    double init_sigma = 1e-2;
    std::size_t leaf_size = 128;  // clamped for tiny systems
    std::size_t coarse_size = 32;
    // Evaluation on the held-out frame.
    std::size_t eval_every_logs = 1;
    double solve_rtol = 1e-8;
    std::size_t solve_max_iters = 20000;
    // Optional early exit once held-out PCG iterations reach this (0 = off).
    std::size_t stop_at_iters = 0;
};

struct TrainLogEntry {
    std::size_t step = 0;
    double train_loss = 0.0; // mean objective over the logging window
    double sai_heldout = 0.0;
    std::size_t pcg_iters_heldout = 0;
    double lr = 0.0;
    double wall_s = 0.0;
};

struct TrainHistory {
    std::vector<TrainLogEntry> entries;
    bool auto_stopped = false;
    bool aborted_divergence = false;
    bool reached_target = false;
    std::size_t total_steps = 0;
    std::string to_jsonl() const;
};

struct TrainResult {
    FactorTensor factors;
    TrainHistory history;
};

// Direct self-supervised optimization of the factor tensor on one or more
// frames sharing N: AdamW with decoupled weight decay, global gradient
// clipping, reduce-on-plateau, and the min-lr auto-stop. Each optimizer step
// aggregates gradients over `contexts_per_step` fresh smoothed probe batches.
TrainResult train_factors(const std::vector<const Frame*>& frames, const TrainConfig& cfg,
                          std::uint64_t seed, const Frame* eval_frame = nullptr);

} // namespace hfp
