// hfp: solver laboratory for the hierarchical factorized preconditioner.
// Subcommands: gen, train, solve, bench, audit, spectrum, partition, toynet.
// Exit codes: 0 success, 2 usage/config error, 3 numerical failure under
// --strict, 4 I/O failure.

#include "CLI11.hpp"
#include "json.hpp"

#include "hfp/checkpoint.hpp"
#include "hfp/ic0.hpp"
#include "hfp/mppf.hpp"
#include "hfp/rank_audit.hpp"
#include "hfp/report.hpp"
#include "hfp/spectrum.hpp"
#include "hfp/toy_net.hpp"
#include "hfp/train.hpp"

#include <zlib.h>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <thread>

namespace {

using nlohmann::json;

constexpr int kExitUsage = 2;
constexpr int kExitNumerical = 3;
constexpr int kExitIo = 4;

struct IoFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoFailure("cannot open for writing: " + path.string());
    out << text;
    if (!out) throw IoFailure("write failed: " + path.string());
}

hfp::Frame load_frame(const std::filesystem::path& path) {
    try {
        return hfp::read_mppf(path);
    } catch (const std::runtime_error& e) {
        throw IoFailure(e.what());
    }
}

// Config file values fill in options the command line left untouched.
class ConfigMerge {
  public:
    ConfigMerge(CLI::App* app, const std::string& config_path) : app_(app) {
        if (config_path.empty()) return;
        std::ifstream in(config_path);
        if (!in) throw IoFailure("cannot open config file: " + config_path);
        in >> values_;
    }

    template <typename T>
    void merge(const std::string& flag, const std::string& key, T& value) {
        if (app_->count(flag) == 0 && values_.contains(key)) value = values_.at(key).get<T>();
    }

  private:
    CLI::App* app_;
    json values_;
};

void print_config(const std::string& cmd, const json& resolved) {
    std::cout << "config " << cmd << ": " << resolved.dump() << "\n";
}

hfp::PrecondApplier make_applier(const std::string& method, const hfp::Frame& frame,
                                 const hfp::FactorTensor* factors) {
    if (method == "none") return hfp::identity_applier();
    if (method == "jacobi") return hfp::jacobi_applier(frame.A);
    if (method == "ic0") return hfp::ic0_applier(hfp::ic0_factorize(frame.A));
    if (method == "hfactor") {
        if (!factors)
            throw std::invalid_argument("method hfactor needs --checkpoint");
        if (factors->layout.n != frame.n)
            throw std::invalid_argument("checkpoint size does not match frame");
        return hfp::factor_applier(*factors, frame.A);
    }
    throw std::invalid_argument("unknown method: " + method);
}

std::vector<std::string> split_csv(const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == ',') {
            if (!cur.empty()) out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}

std::uint32_t file_crc(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw IoFailure("cannot open: " + p.string());
    std::uint32_t crc = static_cast<std::uint32_t>(::crc32(0L, nullptr, 0));
    char buf[65536];
    while (in.read(buf, sizeof(buf)) || in.gcount() > 0)
        crc = static_cast<std::uint32_t>(
            ::crc32(crc, reinterpret_cast<const Bytef*>(buf), static_cast<uInt>(in.gcount())));
    return crc;
}

int run_gen(const std::vector<std::size_t>& scales, std::size_t train_count,
            std::size_t test_count, std::uint64_t seed, std::size_t leaf,
            const std::string& out_dir) {
    hfp::DatasetSpec spec;
    spec.scales = scales;
    spec.train_per_scale = train_count;
    spec.test_per_scale = test_count;
    spec.master_seed = seed;
    spec.leaf_size = leaf;
    std::vector<std::filesystem::path> files;
    try {
        files = hfp::generate_dataset(spec, out_dir);
    } catch (const std::runtime_error& e) {
        throw IoFailure(e.what());
    }
    for (std::size_t scale : scales) {
        std::uint32_t crc = 0;
        std::size_t count = 0;
        for (const auto& f : files)
            if (f.filename().string().find("N" + std::to_string(scale) + "_") !=
                std::string::npos) {
                crc ^= file_crc(f);
                ++count;
            }
        std::cout << "scale " << scale << ": " << count << " frames, checksum "
                  << std::hex << crc << std::dec << "\n";
    }
    std::cout << "wrote " << files.size() << " files to " << out_dir << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"hierarchical factorized preconditioner laboratory"};
    app.require_subcommand(1);

    const char* env_data = std::getenv("HFP_DATA_DIR");
    const std::string default_data_dir = env_data ? env_data : "data";

    // ---- gen ----------------------------------------------------------
    auto* gen = app.add_subcommand("gen", "generate benchmark frames");
    std::vector<std::size_t> gen_scales{1024};
    std::size_t gen_train = 100, gen_test = 20, gen_leaf = 128;
    std::uint64_t gen_seed = 0;
    std::string gen_out = default_data_dir, gen_config;
    bool gen_print = false;
    gen->add_option("--scales", gen_scales, "problem sizes N");
    gen->add_option("--train", gen_train, "training frames per scale");
    gen->add_option("--test", gen_test, "test frames per scale");
    gen->add_option("--seed", gen_seed, "master seed");
    gen->add_option("--leaf", gen_leaf, "leaf size the scales must divide by");
    gen->add_option("--out", gen_out, "output directory");
    gen->add_option("--config", gen_config, "JSON config file");
    gen->add_flag("--print-config", gen_print, "print resolved config and exit");

    // ---- train --------------------------------------------------------
    auto* train = app.add_subcommand("train", "optimize a factor tensor on frames");
    std::vector<std::string> train_frames;
    std::string train_eval, train_out = "checkpoint.hftc", train_history, train_loss = "cosine",
                train_config;
    hfp::TrainConfig tc;
    std::uint64_t train_seed = 0;
    bool train_print = false;
    train->add_option("--frame", train_frames, "training frame file(s)")->expected(-1);
    train->add_option("--eval-frame", train_eval, "held-out frame (default: first frame)");
    train->add_option("--out", train_out, "checkpoint output path");
    train->add_option("--history", train_history, "JSONL history output path");
    train->add_option("--loss", train_loss, "objective: cosine | sai");
    train->add_option("--seed", train_seed, "seed");
    train->add_option("--max-steps", tc.max_steps, "optimizer step cap");
    train->add_option("--lr", tc.lr, "learning rate");
    train->add_option("--weight-decay", tc.weight_decay, "decoupled weight decay");
    train->add_option("--clip", tc.clip_norm, "global gradient clip");
    train->add_option("--log-every", tc.log_every, "steps per log entry");
    train->add_option("--contexts", tc.contexts_per_step, "probe batches per step");
    train->add_option("--omega", tc.probe_omega, "probe smoothing damping");
    train->add_option("--smooth-steps", tc.probe_smooth_steps, "probe smoothing sweeps");
    train->add_option("--leaf", tc.leaf_size, "leaf size");
    train->add_option("--ls", tc.coarse_size, "coarse token count per tile");
    train->add_option("--init-sigma", tc.init_sigma, "structured-section init scale");
    train->add_option("--eval-every", tc.eval_every_logs, "log steps between PCG evals");
    train->add_option("--stop-at-iters", tc.stop_at_iters,
                      "early exit at this held-out iteration count (0 = off)");
    train->add_option("--rtol", tc.solve_rtol, "solve tolerance for evals");
    train->add_option("--max-iters", tc.solve_max_iters, "solve iteration cap for evals");
    train->add_option("--config", train_config, "JSON config file");
    train->add_flag("--print-config", train_print, "print resolved config and exit");

    // ---- solve --------------------------------------------------------
    auto* solve = app.add_subcommand("solve", "solve one frame with one method");
    std::string solve_frame, solve_method = "jacobi", solve_ckpt, solve_residuals,
                solve_report, solve_config;
    hfp::SolveConfig sc;
    bool solve_print = false;
    solve->add_option("--frame", solve_frame, "frame file")->required();
    solve->add_option("--method", solve_method, "none | jacobi | ic0 | hfactor");
    solve->add_option("--checkpoint", solve_ckpt, "factor tensor for hfactor");
    solve->add_option("--rtol", sc.rtol, "relative residual tolerance");
    solve->add_option("--max-iters", sc.max_iters, "iteration cap");
    solve->add_option("--emit-residuals", solve_residuals,
                      "write per-iteration residual vectors (JSONL)");
    solve->add_option("--report", solve_report, "write the solve report (JSON)");
    solve->add_option("--config", solve_config, "JSON config file");
    solve->add_flag("--print-config", solve_print, "print resolved config and exit");

    // ---- bench --------------------------------------------------------
    auto* bench = app.add_subcommand("bench", "solve many frames with many methods");
    std::vector<std::string> bench_frames;
    std::string bench_methods = "none,jacobi,ic0", bench_ckpt, bench_summary,
                bench_reports, bench_json, bench_config;
    hfp::SolveConfig bc;
    std::size_t bench_jobs = 1;
    bool bench_strict = false, bench_print = false;
    bench->add_option("--frames", bench_frames, "frame files")->expected(-1);
    bench->add_option("--methods", bench_methods, "comma-separated method list");
    bench->add_option("--checkpoint", bench_ckpt, "factor tensor for hfactor");
    bench->add_option("--rtol", bc.rtol, "relative residual tolerance");
    bench->add_option("--max-iters", bc.max_iters, "iteration cap");
    bench->add_option("--summary", bench_summary, "summary CSV path");
    bench->add_option("--reports", bench_reports, "per-solve JSONL path");
    bench->add_option("--json", bench_json, "summary JSON path");
    bench->add_option("--jobs", bench_jobs, "frame-level parallelism");
    bench->add_flag("--strict", bench_strict, "nonzero exit if any solve fails");
    bench->add_option("--config", bench_config, "JSON config file");
    bench->add_flag("--print-config", bench_print, "print resolved config and exit");

    // ---- audit --------------------------------------------------------
    auto* audit = app.add_subcommand("audit", "rank audit of pseudo-inverse tiles");
    std::string audit_frame, audit_out, audit_config;
    std::vector<double> audit_eps{1e-3, 1e-6, 1e-9};
    std::size_t audit_leaf = 128, audit_ls = 32, audit_cap = 2048;
    bool audit_print = false;
    audit->add_option("--frame", audit_frame, "frame file")->required();
    audit->add_option("--eps", audit_eps, "relative Frobenius tolerances");
    audit->add_option("--leaf", audit_leaf, "leaf size");
    audit->add_option("--ls", audit_ls, "coarse token count");
    audit->add_option("--dense-cap", audit_cap, "largest N handled densely");
    audit->add_option("--out", audit_out, "CSV output path");
    std::string audit_json;
    audit->add_option("--json", audit_json, "JSON mirror output path");
    audit->add_option("--config", audit_config, "JSON config file");
    audit->add_flag("--print-config", audit_print, "print resolved config and exit");

    // ---- spectrum -----------------------------------------------------
    auto* spectrum = app.add_subcommand("spectrum", "preconditioned spectra");
    std::string spec_frame, spec_methods = "none,jacobi", spec_ckpt, spec_out, spec_config;
    std::size_t spec_cap = 2048;
    bool spec_print = false;
    spectrum->add_option("--frame", spec_frame, "frame file")->required();
    spectrum->add_option("--methods", spec_methods, "comma-separated method list");
    spectrum->add_option("--checkpoint", spec_ckpt, "factor tensor for hfactor");
    spectrum->add_option("--dense-cap", spec_cap, "largest N handled densely");
    spectrum->add_option("--out", spec_out, "CSV output path");
    std::string spec_json;
    spectrum->add_option("--json", spec_json, "JSON mirror output path (with eigenvalues)");
    spectrum->add_option("--config", spec_config, "JSON config file");
    spectrum->add_flag("--print-config", spec_print, "print resolved config and exit");

    // ---- partition ----------------------------------------------------
    auto* part = app.add_subcommand("partition", "dump a partition description");
    std::size_t part_n = 1024, part_leaf = 128, part_ls = 32;
    std::string part_out;
    part->add_option("--n", part_n, "matrix dimension");
    part->add_option("--leaf", part_leaf, "leaf size");
    part->add_option("--ls", part_ls, "coarse token count");
    part->add_option("--out", part_out, "JSON output path (default stdout)");

    // ---- toynet -------------------------------------------------------
    auto* toynet = app.add_subcommand("toynet", "toy network forward to a checkpoint");
    std::string toy_frame, toy_out = "toynet.hftc";
    std::size_t toy_leaf = 16, toy_ls = 4, toy_d = 16, toy_layers = 2, toy_heads = 2;
    std::uint64_t toy_seed = 0;
    toynet->add_option("--frame", toy_frame, "frame file")->required();
    toynet->add_option("--leaf", toy_leaf, "leaf size");
    toynet->add_option("--ls", toy_ls, "coarse token count");
    toynet->add_option("--d", toy_d, "embedding width");
    toynet->add_option("--layers", toy_layers, "transformer blocks per stream");
    toynet->add_option("--heads", toy_heads, "attention heads");
    toynet->add_option("--seed", toy_seed, "weight seed");
    toynet->add_option("--out", toy_out, "checkpoint output path");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kExitUsage;
    }

    try {
        if (gen->parsed()) {
            ConfigMerge cm(gen, gen_config);
            cm.merge("--scales", "scales", gen_scales);
            cm.merge("--train", "train", gen_train);
            cm.merge("--test", "test", gen_test);
            cm.merge("--seed", "seed", gen_seed);
            cm.merge("--leaf", "leaf", gen_leaf);
            cm.merge("--out", "out", gen_out);
            const json resolved = {{"scales", gen_scales}, {"train", gen_train},
                                   {"test", gen_test},     {"seed", gen_seed},
                                   {"leaf", gen_leaf},     {"out", gen_out}};
            print_config("gen", resolved);
            if (gen_print) return 0;
            return run_gen(gen_scales, gen_train, gen_test, gen_seed, gen_leaf, gen_out);
        }

        if (train->parsed()) {
            ConfigMerge cm(train, train_config);
            cm.merge("--loss", "loss", train_loss);
            cm.merge("--seed", "seed", train_seed);
            cm.merge("--max-steps", "max_steps", tc.max_steps);
            cm.merge("--lr", "lr", tc.lr);
            cm.merge("--weight-decay", "weight_decay", tc.weight_decay);
            cm.merge("--clip", "clip", tc.clip_norm);
            cm.merge("--log-every", "log_every", tc.log_every);
            cm.merge("--contexts", "contexts", tc.contexts_per_step);
            cm.merge("--omega", "omega", tc.probe_omega);
            cm.merge("--smooth-steps", "smooth_steps", tc.probe_smooth_steps);
            cm.merge("--leaf", "leaf", tc.leaf_size);
            cm.merge("--ls", "ls", tc.coarse_size);
            cm.merge("--init-sigma", "init_sigma", tc.init_sigma);
            cm.merge("--rtol", "rtol", tc.solve_rtol);
            if (train_loss != "cosine" && train_loss != "sai")
                throw std::invalid_argument("--loss must be cosine or sai");
            tc.loss = train_loss == "cosine" ? hfp::LossKind::cosine : hfp::LossKind::sai;
            const json resolved = {{"frames", train_frames},
                                   {"eval_frame", train_eval},
                                   {"out", train_out},
                                   {"history", train_history},
                                   {"loss", train_loss},
                                   {"seed", train_seed},
                                   {"max_steps", tc.max_steps},
                                   {"lr", tc.lr},
                                   {"weight_decay", tc.weight_decay},
                                   {"clip", tc.clip_norm},
                                   {"log_every", tc.log_every},
                                   {"contexts", tc.contexts_per_step},
                                   {"omega", tc.probe_omega},
                                   {"smooth_steps", tc.probe_smooth_steps},
                                   {"leaf", tc.leaf_size},
                                   {"ls", tc.coarse_size},
                                   {"init_sigma", tc.init_sigma},
                                   {"eval_every", tc.eval_every_logs},
                                   {"stop_at_iters", tc.stop_at_iters},
                                   {"rtol", tc.solve_rtol},
                                   {"max_iters", tc.solve_max_iters}};
            print_config("train", resolved);
            if (train_print) return 0;
            if (train_frames.empty())
                throw std::invalid_argument("train: at least one --frame required");

            std::vector<hfp::Frame> frames;
            for (const auto& p : train_frames) frames.push_back(load_frame(p));
            std::vector<const hfp::Frame*> frame_ptrs;
            for (const auto& f : frames) frame_ptrs.push_back(&f);
            hfp::Frame eval_storage;
            const hfp::Frame* eval_ptr = nullptr;
            if (!train_eval.empty()) {
                eval_storage = load_frame(train_eval);
                eval_ptr = &eval_storage;
            }
            hfp::TrainResult res = hfp::train_factors(frame_ptrs, tc, train_seed, eval_ptr);
            json meta = {{"loss", train_loss},
                         {"seed", train_seed},
                         {"steps", res.history.total_steps},
                         {"auto_stopped", res.history.auto_stopped},
                         {"frames", train_frames}};
            hfp::write_checkpoint(res.factors, train_out, meta.dump());
            if (!train_history.empty()) write_text(train_history, res.history.to_jsonl());
            if (!res.history.entries.empty()) {
                const auto& last = res.history.entries.back();
                std::cout << "trained " << res.history.total_steps << " steps, final loss "
                          << last.train_loss << ", held-out iters "
                          << last.pcg_iters_heldout << "\n";
            }
            if (res.history.aborted_divergence) {
                std::cerr << "training diverged\n";
                return kExitNumerical;
            }
            return 0;
        }

        if (solve->parsed()) {
            ConfigMerge cm(solve, solve_config);
            cm.merge("--method", "method", solve_method);
            cm.merge("--rtol", "rtol", sc.rtol);
            cm.merge("--max-iters", "max_iters", sc.max_iters);
            const json resolved = {{"frame", solve_frame},   {"method", solve_method},
                                   {"checkpoint", solve_ckpt}, {"rtol", sc.rtol},
                                   {"max_iters", sc.max_iters}};
            print_config("solve", resolved);
            if (solve_print) return 0;
            hfp::Frame frame = load_frame(solve_frame);
            std::unique_ptr<hfp::FactorTensor> factors;
            if (!solve_ckpt.empty())
                factors = std::make_unique<hfp::FactorTensor>(
                    hfp::read_checkpoint(solve_ckpt).factors);
            std::vector<std::vector<double>> residual_vectors;
            auto* rv = solve_residuals.empty() ? nullptr : &residual_vectors;
            hfp::SolveReport rep = hfp::pcg_solve(
                frame.A, frame.b, make_applier(solve_method, frame, factors.get()), sc,
                nullptr, rv);
            rep.method = solve_method;
            rep.frame_id = solve_frame;
            std::cout << rep.method << ": " << (rep.converged ? "converged" : "failed")
                      << " in " << rep.iterations << " iterations, " << rep.wall_ms
                      << " ms\n";
            if (!solve_report.empty()) write_text(solve_report, rep.to_json() + "\n");
            if (rv) {
                std::string lines;
                for (std::size_t k = 0; k < residual_vectors.size(); ++k) {
                    json j = {{"iteration", k + 1},
                              {"rel_residual", rep.residual_history[k]},
                              {"residual", residual_vectors[k]}};
                    lines += j.dump();
                    lines += '\n';
                }
                write_text(solve_residuals, lines);
            }
            return rep.converged ? 0 : kExitNumerical;
        }

        if (bench->parsed()) {
            ConfigMerge cm(bench, bench_config);
            cm.merge("--methods", "methods", bench_methods);
            cm.merge("--rtol", "rtol", bc.rtol);
            cm.merge("--max-iters", "max_iters", bc.max_iters);
            cm.merge("--jobs", "jobs", bench_jobs);
            const json resolved = {{"frames", bench_frames}, {"methods", bench_methods},
                                   {"checkpoint", bench_ckpt}, {"rtol", bc.rtol},
                                   {"max_iters", bc.max_iters}, {"jobs", bench_jobs},
                                   {"strict", bench_strict}};
            print_config("bench", resolved);
            if (bench_print) return 0;
            if (bench_frames.empty())
                throw std::invalid_argument("bench: at least one frame required");
            const auto methods = split_csv(bench_methods);

            std::vector<hfp::Frame> frames;
            for (const auto& p : bench_frames) frames.push_back(load_frame(p));
            std::unique_ptr<hfp::FactorTensor> factors;
            if (!bench_ckpt.empty())
                factors = std::make_unique<hfp::FactorTensor>(
                    hfp::read_checkpoint(bench_ckpt).factors);

            std::vector<hfp::SolveReport> reports(frames.size() * methods.size());
            std::atomic<std::size_t> next{0};
            auto worker = [&] {
                while (true) {
                    const std::size_t fi = next.fetch_add(1);
                    if (fi >= frames.size()) break;
                    for (std::size_t mi = 0; mi < methods.size(); ++mi) {
                        hfp::SolveReport rep = hfp::pcg_solve(
                            frames[fi].A, frames[fi].b,
                            make_applier(methods[mi], frames[fi], factors.get()), bc);
                        rep.method = methods[mi];
                        rep.frame_id = bench_frames[fi];
                        reports[fi * methods.size() + mi] = std::move(rep);
                    }
                }
            };
            if (bench_jobs <= 1) {
                worker();
            } else {
                std::vector<std::thread> pool;
                for (std::size_t t = 0; t < bench_jobs; ++t) pool.emplace_back(worker);
                for (auto& th : pool) th.join();
            }

            const auto rows = hfp::aggregate_reports(reports);
            const std::string csv = hfp::summary_csv(rows);
            std::cout << csv;
            if (!bench_summary.empty()) write_text(bench_summary, csv);
            if (!bench_json.empty()) write_text(bench_json, hfp::summary_json(rows));
            if (!bench_reports.empty()) {
                std::string lines;
                for (const auto& r : reports) {
                    lines += r.to_json();
                    lines += '\n';
                }
                write_text(bench_reports, lines);
            }
            if (bench_strict)
                for (const auto& r : reports)
                    if (!r.converged) return kExitNumerical;
            return 0;
        }

        if (audit->parsed()) {
            ConfigMerge cm(audit, audit_config);
            cm.merge("--eps", "eps", audit_eps);
            cm.merge("--leaf", "leaf", audit_leaf);
            cm.merge("--ls", "ls", audit_ls);
            cm.merge("--dense-cap", "dense_cap", audit_cap);
            const json resolved = {{"frame", audit_frame}, {"eps", audit_eps},
                                   {"leaf", audit_leaf},   {"ls", audit_ls},
                                   {"dense_cap", audit_cap}, {"out", audit_out}};
            print_config("audit", resolved);
            if (audit_print) return 0;
            hfp::Frame frame = load_frame(audit_frame);
            if (frame.n > audit_cap) {
                std::cerr << "audit: N=" << frame.n << " exceeds the dense cap "
                          << audit_cap << "; rerun with --dense-cap or a smaller frame\n";
                return kExitUsage;
            }
            const std::size_t leaf = hfp::clamp_leaf_size(frame.n, audit_leaf);
            hfp::HPartition p = hfp::build_partition(frame.n, leaf);
            auto rep = hfp::rank_audit(frame.A, p, audit_ls, audit_eps, audit_cap);
            const std::string csv = rep.to_csv();
            std::cout << csv;
            if (!audit_out.empty()) write_text(audit_out, csv);
            if (!audit_json.empty()) write_text(audit_json, rep.to_json());
            return 0;
        }

        if (spectrum->parsed()) {
            ConfigMerge cm(spectrum, spec_config);
            cm.merge("--methods", "methods", spec_methods);
            cm.merge("--dense-cap", "dense_cap", spec_cap);
            const json resolved = {{"frame", spec_frame}, {"methods", spec_methods},
                                   {"checkpoint", spec_ckpt}, {"dense_cap", spec_cap},
                                   {"out", spec_out}};
            print_config("spectrum", resolved);
            if (spec_print) return 0;
            hfp::Frame frame = load_frame(spec_frame);
            if (frame.n > spec_cap) {
                std::cerr << "spectrum: N=" << frame.n << " exceeds the dense cap "
                          << spec_cap << "; rerun with --dense-cap or a smaller frame\n";
                return kExitUsage;
            }
            std::unique_ptr<hfp::FactorTensor> factors;
            if (!spec_ckpt.empty())
                factors = std::make_unique<hfp::FactorTensor>(
                    hfp::read_checkpoint(spec_ckpt).factors);
            std::string csv = "method,N,frame,kappa,neg_count\n";
            json mirror = json::array();
            for (const auto& method : split_csv(spec_methods)) {
                auto rep = hfp::precond_spectrum(
                    frame.A, make_applier(method, frame, factors.get()), spec_cap);
                csv += method + "," + std::to_string(frame.n) + "," + spec_frame + "," +
                       std::to_string(rep.kappa) + "," +
                       std::to_string(rep.negative_count) + "\n";
                mirror.push_back({{"method", method},
                                  {"N", frame.n},
                                  {"frame", spec_frame},
                                  {"kappa", rep.kappa},
                                  {"kappa_reduction", rep.kappa_reduction},
                                  {"neg_count", rep.negative_count},
                                  {"deflated", rep.deflated},
                                  {"eigenvalues", rep.eigenvalues}});
                std::cout << method << ": kappa " << rep.kappa << " ("
                          << rep.kappa_reduction << "x reduction), " << rep.negative_count
                          << " negative\n";
            }
            std::cout << csv;
            if (!spec_out.empty()) write_text(spec_out, csv);
            if (!spec_json.empty()) write_text(spec_json, mirror.dump(2));
            return 0;
        }

        if (part->parsed()) {
            hfp::HPartition p = hfp::build_partition(part_n, part_leaf);
            const std::string j = p.to_json(part_ls);
            if (part_out.empty())
                std::cout << j << "\n";
            else
                write_text(part_out, j);
            return 0;
        }

        if (toynet->parsed()) {
            hfp::Frame frame = load_frame(toy_frame);
            const std::size_t leaf = hfp::clamp_leaf_size(frame.n, toy_leaf);
            hfp::HPartition p = hfp::build_partition(frame.n, leaf);
            hfp::toynet::Config cfg;
            cfg.d = toy_d;
            cfg.layers = toy_layers;
            cfg.heads = toy_heads;
            const auto layout = hfp::make_factor_layout(p, toy_ls);
            auto weights = hfp::toynet::init_weights(cfg, layout, toy_seed);
            hfp::toynet::Trace trace;
            hfp::FactorTensor f = hfp::toynet::forward(frame, p, toy_ls, cfg, weights, &trace);
            json meta = {{"source", "toynet"},
                         {"seed", toy_seed},
                         {"d", toy_d},
                         {"layers", toy_layers},
                         {"attention_families", trace.attention_kernel_families()},
                         {"highway_deviation", trace.highway_max_deviation}};
            hfp::write_checkpoint(f, toy_out, meta.dump());
            std::cout << "toynet forward: width " << f.data.size() << ", checkpoint "
                      << toy_out << "\n";
            return 0;
        }
    } catch (const IoFailure& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIo;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNumerical;
    }
    return 0;
}
