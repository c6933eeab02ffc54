#include "hfp/toy_net.hpp"

#include <cmath>
#include <cstring>
#include <stdexcept>

namespace hfp::toynet {

namespace {

double gelu(double x) { return 0.5 * x * (1.0 + std::erf(x / std::sqrt(2.0))); }

// Y = X W + b for row-major X (rows x in), W (in x out).
void affine(const double* x, std::size_t rows, const DenseMat& w,
            const std::vector<double>& b, double* y) {
    for (std::size_t r = 0; r < rows; ++r) {
        const double* xr = x + r * w.rows;
        double* yr = y + r * w.cols;
        for (std::size_t c = 0; c < w.cols; ++c) yr[c] = b.empty() ? 0.0 : b[c];
        for (std::size_t i = 0; i < w.rows; ++i) {
            const double xv = xr[i];
            const double* wi = w.data.data() + i * w.cols;
            for (std::size_t c = 0; c < w.cols; ++c) yr[c] += xv * wi[c];
        }
    }
}

void layer_norm_rows(const double* x, std::size_t rows, std::size_t d, double* out) {
    for (std::size_t r = 0; r < rows; ++r) {
        const double* xr = x + r * d;
        double mean = 0.0;
        for (std::size_t c = 0; c < d; ++c) mean += xr[c];
        mean /= static_cast<double>(d);
        double var = 0.0;
        for (std::size_t c = 0; c < d; ++c) var += (xr[c] - mean) * (xr[c] - mean);
        var /= static_cast<double>(d);
        const double inv = 1.0 / std::sqrt(var + 1e-5);
        double* yr = out + r * d;
        for (std::size_t c = 0; c < d; ++c) yr[c] = (xr[c] - mean) * inv;
    }
}

DenseMat random_mat(std::size_t rows, std::size_t cols, RngStream& rng) {
    DenseMat m(rows, cols);
    const double scale = 1.0 / std::sqrt(static_cast<double>(rows));
    for (double& v : m.data) v = scale * rng.next_normal();
    return m;
}

struct EdgeDescriptor {
    double dx = 0.0, dy = 0.0, dist = 0.0, coupling = 0.0;
};

// Per-head bias for a block of T tokens from precomputed descriptors.
std::vector<double> edge_bias(const std::vector<EdgeDescriptor>& desc, std::size_t t,
                              const EdgeMlpWeights& mlp, std::size_t heads) {
    std::vector<double> bias(heads * t * t);
    std::vector<double> hidden(mlp.w1.cols);
    for (std::size_t p = 0; p < t * t; ++p) {
        const double in[4] = {desc[p].dx, desc[p].dy, desc[p].dist, desc[p].coupling};
        for (std::size_t c = 0; c < mlp.w1.cols; ++c) {
            double acc = mlp.b1[c];
            for (std::size_t i = 0; i < 4; ++i) acc += in[i] * mlp.w1.at(i, c);
            hidden[c] = gelu(acc);
        }
        for (std::size_t hh = 0; hh < heads; ++hh) {
            double acc = mlp.b2[hh];
            for (std::size_t i = 0; i < mlp.w2.rows; ++i)
                acc += hidden[i] * mlp.w2.at(i, hh);
            bias[hh * t * t + p] = acc;
        }
    }
    return bias;
}

// One batched attention sublayer over `blocks` blocks of `t` tokens each,
// in place (residual add). bias: per block, heads x t x t.
void attention_batched(double* tokens, std::size_t blocks, std::size_t t, std::size_t d,
                       std::size_t heads, const StreamLayerWeights& w,
                       const std::vector<std::vector<double>>& bias, Trace* trace) {
    const std::size_t dh = d / heads;
    const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(dh));
    std::vector<double> ln(t * d), q(t * d), k(t * d), v(t * d), probs(t * t),
        head_out(t * d), out(t * d);
    for (std::size_t blk = 0; blk < blocks; ++blk) {
        double* tok = tokens + blk * t * d;
        layer_norm_rows(tok, t, d, ln.data());
        affine(ln.data(), t, w.wq, {}, q.data());
        affine(ln.data(), t, w.wk, {}, k.data());
        affine(ln.data(), t, w.wv, {}, v.data());
        for (std::size_t hh = 0; hh < heads; ++hh) {
            const double* bias_h = bias[blk].data() + hh * t * t;
            for (std::size_t i = 0; i < t; ++i) {
                double maxlogit = -1e300;
                for (std::size_t j = 0; j < t; ++j) {
                    double dot = 0.0;
                    for (std::size_t c = 0; c < dh; ++c)
                        dot += q[i * d + hh * dh + c] * k[j * d + hh * dh + c];
                    probs[i * t + j] = dot * inv_sqrt + bias_h[i * t + j];
                    maxlogit = std::max(maxlogit, probs[i * t + j]);
                }
                double sum = 0.0;
                for (std::size_t j = 0; j < t; ++j) {
                    probs[i * t + j] = std::exp(probs[i * t + j] - maxlogit);
                    sum += probs[i * t + j];
                }
                for (std::size_t j = 0; j < t; ++j) probs[i * t + j] /= sum;
                if (trace) {
                    double rs = 0.0;
                    for (std::size_t j = 0; j < t; ++j) rs += probs[i * t + j];
                    trace->max_attention_row_sum_error =
                        std::max(trace->max_attention_row_sum_error, std::fabs(rs - 1.0));
                }
                for (std::size_t c = 0; c < dh; ++c) {
                    double acc = 0.0;
                    for (std::size_t j = 0; j < t; ++j)
                        acc += probs[i * t + j] * v[j * d + hh * dh + c];
                    head_out[i * d + hh * dh + c] = acc;
                }
            }
        }
        affine(head_out.data(), t, w.wo, {}, out.data());
        for (std::size_t i = 0; i < t * d; ++i) tok[i] += out[i];
    }
}

} // namespace

void Weights::zero() {
    auto z = [](DenseMat& m) { std::fill(m.data.begin(), m.data.end(), 0.0); };
    auto zv = [](std::vector<double>& v) { std::fill(v.begin(), v.end(), 0.0); };
    z(enc1);
    zv(enc1_b);
    z(enc2);
    zv(enc2_b);
    for (auto& g : gcn) z(g);
    for (auto* stream : {&leaf_stream, &tile_stream})
        for (auto& l : *stream) {
            z(l.wq);
            z(l.wk);
            z(l.wv);
            z(l.wo);
            z(l.ffn1);
            zv(l.ffn1_b);
            z(l.ffn2);
            zv(l.ffn2_b);
        }
    for (auto* e : {&leaf_edge, &tile_edge}) {
        z(e->w1);
        zv(e->b1);
        z(e->w2);
        zv(e->b2);
    }
    z(leaf_head1);
    zv(leaf_head1_b);
    z(leaf_head2);
    zv(leaf_head2_b);
    z(tile_head_u);
    z(tile_head_v);
    zv(tile_head_u_b);
    zv(tile_head_v_b);
    z(bridge_head_u);
    z(bridge_head_v);
    zv(bridge_head_u_b);
    zv(bridge_head_v_b);
    zv(gate_head);
    gate_head_b = 0.0;
}

Weights init_weights(const Config& cfg, const FactorLayout& layout, std::uint64_t seed) {
    if (cfg.d % cfg.heads != 0)
        throw std::invalid_argument("toynet: heads must divide embedding width");
    RngStream rng(seed, 0, RngPurpose::net_weights);
    const std::size_t d = cfg.d, feat = 7 + cfg.d_global;

    Weights w;
    w.enc1 = random_mat(feat, d, rng);
    w.enc1_b.assign(d, 0.0);
    w.enc2 = random_mat(d, d, rng);
    w.enc2_b.assign(d, 0.0);
    for (std::size_t g = 0; g < cfg.gcn_layers; ++g) w.gcn.push_back(random_mat(d, d, rng));

    auto make_stream = [&](std::vector<StreamLayerWeights>& stream) {
        for (std::size_t l = 0; l < cfg.layers; ++l) {
            StreamLayerWeights sl;
            sl.wq = random_mat(d, d, rng);
            sl.wk = random_mat(d, d, rng);
            sl.wv = random_mat(d, d, rng);
            sl.wo = random_mat(d, d, rng);
            sl.ffn1 = random_mat(4 * d, 4 * d, rng);
            sl.ffn1_b.assign(4 * d, 0.0);
            sl.ffn2 = random_mat(4 * d, d, rng);
            sl.ffn2_b.assign(d, 0.0);
            stream.push_back(std::move(sl));
        }
    };
    make_stream(w.leaf_stream);
    make_stream(w.tile_stream);

    for (auto* e : {&w.leaf_edge, &w.tile_edge}) {
        e->w1 = random_mat(4, cfg.edge_hidden, rng);
        e->b1.assign(cfg.edge_hidden, 0.0);
        e->w2 = random_mat(cfg.edge_hidden, cfg.heads, rng);
        e->b2.assign(cfg.heads, 0.0);
    }

    w.leaf_head1 = random_mat(d, d, rng);
    w.leaf_head1_b.assign(d, 0.0);
    w.leaf_head2 = random_mat(d, layout.leaf_size, rng);
    w.leaf_head2_b.assign(layout.leaf_size, 0.0);
    w.tile_head_u = random_mat(d, layout.coupling_rank, rng);
    w.tile_head_v = random_mat(d, layout.coupling_rank, rng);
    w.tile_head_u_b.assign(layout.coupling_rank, 0.0);
    w.tile_head_v_b.assign(layout.coupling_rank, 0.0);
    w.bridge_head_u = random_mat(d, layout.coarse_size, rng);
    w.bridge_head_v = random_mat(d, layout.coarse_size, rng);
    w.bridge_head_u_b.assign(layout.coarse_size, 0.0);
    w.bridge_head_v_b.assign(layout.coarse_size, 0.0);
    w.gate_head.resize(d);
    for (double& v : w.gate_head) v = rng.next_normal() / std::sqrt(static_cast<double>(d));
    w.gate_head_b = 0.0;
    return w;
}

DenseMat encode(const Frame& frame, const HPartition& partition, const Config& cfg,
                const Weights& w) {
    const std::size_t n = frame.n, d = cfg.d;
    if (partition.n != n) throw std::invalid_argument("toynet: partition/frame mismatch");
    const auto diag = frame.A.diagonal();

    // Broadcast frame context.
    std::vector<double> glob(cfg.d_global, 0.0);
    {
        double rho_mean = 0.0, rho_var = 0.0, dmin = diag[0], dmax = diag[0],
               dmean = 0.0, offmean = 0.0;
        for (double r : frame.rho) rho_mean += r;
        rho_mean /= static_cast<double>(n);
        for (double r : frame.rho) rho_var += (r - rho_mean) * (r - rho_mean);
        rho_var /= static_cast<double>(n);
        std::size_t off = 0;
        for (std::size_t i = 0; i < n; ++i) {
            dmean += diag[i];
            dmin = std::min(dmin, diag[i]);
            dmax = std::max(dmax, diag[i]);
            for (std::uint64_t p = frame.A.row_offsets[i]; p < frame.A.row_offsets[i + 1];
                 ++p)
                if (frame.A.col_indices[p] != i) {
                    offmean += std::fabs(frame.A.values[p]);
                    ++off;
                }
        }
        dmean /= static_cast<double>(n);
        if (off) offmean /= static_cast<double>(off);
        const double stats[12] = {std::log(static_cast<double>(n)),
                                  rho_mean,
                                  std::sqrt(rho_var),
                                  std::log(std::max(frame.rho_heavy, 1.0)),
                                  dmean,
                                  dmax,
                                  dmin,
                                  offmean,
                                  static_cast<double>(frame.A.nnz()) / static_cast<double>(n),
                                  static_cast<double>(frame.width) /
                                      static_cast<double>(frame.height),
                                  dmax / std::max(dmin, 1e-30),
                                  1.0};
        for (std::size_t i = 0; i < cfg.d_global && i < 12; ++i) glob[i] = stats[i];
    }

    // Per-node features: density, position, boundary flags, context.
    const std::size_t feat = 7 + cfg.d_global;
    std::vector<double> features(n * feat, 0.0);
    std::vector<std::int64_t> rank_of(frame.width * frame.height, -1);
    for (std::size_t i = 0; i < n; ++i)
        rank_of[frame.cell_order[i]] = static_cast<std::int64_t>(i);
    for (std::size_t i = 0; i < n; ++i) {
        const auto [x, y] = frame.cell_xy(i);
        double* f = features.data() + i * feat;
        f[0] = frame.rho[i];
        f[1] = (static_cast<double>(x) + 0.5) / static_cast<double>(frame.width);
        f[2] = (static_cast<double>(y) + 0.5) / static_cast<double>(frame.height);
        const std::int64_t xs = x, ys = y;
        const std::int64_t nbr[4][2] = {{xs - 1, ys}, {xs + 1, ys}, {xs, ys - 1}, {xs, ys + 1}};
        for (int b = 0; b < 4; ++b) {
            const bool absent =
                nbr[b][0] < 0 || nbr[b][0] >= static_cast<std::int64_t>(frame.width) ||
                nbr[b][1] < 0 || nbr[b][1] >= static_cast<std::int64_t>(frame.height) ||
                rank_of[static_cast<std::size_t>(nbr[b][1]) * frame.width +
                        static_cast<std::size_t>(nbr[b][0])] < 0;
            f[3 + b] = absent ? 1.0 : 0.0;
        }
        for (std::size_t g = 0; g < cfg.d_global; ++g) f[7 + g] = glob[g];
    }

    // Two-layer GELU MLP lift.
    DenseMat x(n, d);
    std::vector<double> hidden(n * d);
    affine(features.data(), n, w.enc1, w.enc1_b, hidden.data());
    for (double& v : hidden) v = gelu(v);
    affine(hidden.data(), n, w.enc2, w.enc2_b, x.data.data());

    // Residual graph convolutions with D^{-1} A message weights.
    std::vector<double> msg(n * d), mixed(n * d);
    for (const DenseMat& wg : w.gcn) {
        for (std::size_t i = 0; i < n; ++i) {
            double* mi = msg.data() + i * d;
            for (std::size_t c = 0; c < d; ++c) mi[c] = 0.0;
            for (std::uint64_t p = frame.A.row_offsets[i]; p < frame.A.row_offsets[i + 1];
                 ++p) {
                const double wij = frame.A.values[p] / diag[i];
                const double* xj = x.data.data() +
                                   static_cast<std::size_t>(frame.A.col_indices[p]) * d;
                for (std::size_t c = 0; c < d; ++c) mi[c] += wij * xj[c];
            }
        }
        affine(msg.data(), n, wg, {}, mixed.data());
        for (std::size_t i = 0; i < n * d; ++i) x.data[i] += gelu(mixed[i]);
    }
    return x;
}

FactorTensor forward(const Frame& frame, const HPartition& partition,
                     std::size_t coarse_size, const Config& cfg, const Weights& w,
                     Trace* trace) {
    const FactorLayout layout = make_factor_layout(partition, coarse_size);
    const std::size_t n = layout.n, l = layout.leaf_size, ls = layout.coarse_size,
                      d = cfg.d, k_count = layout.leaf_count,
                      tile_count = layout.tile_count;

    DenseMat embed = encode(frame, partition, cfg, w);

    // Node positions (normalized) for edge descriptors.
    std::vector<double> xn(n), yn(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto [x, y] = frame.cell_xy(i);
        xn[i] = (static_cast<double>(x) + 0.5) / static_cast<double>(frame.width);
        yn[i] = (static_cast<double>(y) + 0.5) / static_cast<double>(frame.height);
    }
    auto csr_entry = [&](std::size_t r, std::size_t c) -> double {
        for (std::uint64_t p = frame.A.row_offsets[r]; p < frame.A.row_offsets[r + 1]; ++p)
            if (frame.A.col_indices[p] == c) return frame.A.values[p];
        return 0.0;
    };

    // Leaf-stream tokens: the embeddings themselves, viewed as (K, L, d).
    std::vector<double> leaf_tokens = embed.data;

    // Tile-stream tokens: strips condensed to L_s tokens by uniform
    // mean-pooling; each token covers one contiguous chunk per strip.
    std::vector<double> tile_tokens(tile_count * ls * d, 0.0);
    std::vector<std::size_t> chunk_len(tile_count);
    for (const TileSpec& t : partition.tiles) {
        const std::size_t side = t.span * l, chunk = side / ls;
        chunk_len[t.id] = chunk;
        const std::size_t row0 = t.row_begin * l, col0 = t.col_begin * l;
        for (std::size_t tok = 0; tok < ls; ++tok) {
            double* out = tile_tokens.data() + (t.id * ls + tok) * d;
            for (std::size_t s = 0; s < chunk; ++s) {
                const double* er = embed.data.data() + (row0 + tok * chunk + s) * d;
                const double* ec = embed.data.data() + (col0 + tok * chunk + s) * d;
                for (std::size_t c = 0; c < d; ++c) out[c] += 0.5 * (er[c] + ec[c]);
            }
            for (std::size_t c = 0; c < d; ++c) out[c] /= static_cast<double>(chunk);
        }
    }

    // Edge-bias logits, computed once per stream and reused across layers.
    std::vector<std::vector<double>> leaf_bias(k_count), tile_bias(tile_count);
    {
        std::vector<EdgeDescriptor> desc(l * l);
        for (std::size_t k = 0; k < k_count; ++k) {
            const std::size_t base = k * l;
            for (std::size_t i = 0; i < l; ++i)
                for (std::size_t j = 0; j < l; ++j) {
                    EdgeDescriptor& e = desc[i * l + j];
                    e.dx = xn[base + i] - xn[base + j];
                    e.dy = yn[base + i] - yn[base + j];
                    e.dist = std::sqrt(e.dx * e.dx + e.dy * e.dy);
                    e.coupling = csr_entry(base + i, base + j);
                }
            leaf_bias[k] = edge_bias(desc, l, w.leaf_edge, cfg.heads);
        }
        std::vector<EdgeDescriptor> tdesc(ls * ls);
        for (const TileSpec& t : partition.tiles) {
            const std::size_t chunk = chunk_len[t.id];
            const std::size_t row0 = t.row_begin * l, col0 = t.col_begin * l;
            for (std::size_t a = 0; a < ls; ++a)
                for (std::size_t b = 0; b < ls; ++b) {
                    EdgeDescriptor& e = tdesc[a * ls + b];
                    double cx = 0.0, cy = 0.0, rx = 0.0, ry = 0.0;
                    for (std::size_t s = 0; s < chunk; ++s) {
                        rx += xn[row0 + a * chunk + s];
                        ry += yn[row0 + a * chunk + s];
                        cx += xn[col0 + b * chunk + s];
                        cy += yn[col0 + b * chunk + s];
                    }
                    e.dx = (rx - cx) / static_cast<double>(chunk);
                    e.dy = (ry - cy) / static_cast<double>(chunk);
                    e.dist = std::sqrt(e.dx * e.dx + e.dy * e.dy);
                    // Mean coupling over the chunk pair, gathered sparsely.
                    double acc = 0.0;
                    const std::size_t cbeg = col0 + b * chunk, cend = cbeg + chunk;
                    for (std::size_t s = 0; s < chunk; ++s) {
                        const std::size_t r = row0 + a * chunk + s;
                        for (std::uint64_t p = frame.A.row_offsets[r];
                             p < frame.A.row_offsets[r + 1]; ++p)
                            if (frame.A.col_indices[p] >= cbeg &&
                                frame.A.col_indices[p] < cend)
                                acc += frame.A.values[p];
                    }
                    e.coupling = acc / static_cast<double>(chunk * chunk);
                }
            tile_bias[t.id] = edge_bias(tdesc, ls, w.tile_edge, cfg.heads);
        }
    }

    // Highway buffers, re-zeroed at every layer.
    std::vector<double> row_hw(n * d), col_hw(n * d), glob_hw(d);
    std::vector<double> ln_buf, ffn_in, ffn_hidden, ffn_out;

    auto ffn_sublayer = [&](double* tok, const double* rslice, const double* cslice,
                            const StreamLayerWeights& sw) {
        ln_buf.resize(d);
        layer_norm_rows(tok, 1, d, ln_buf.data());
        ffn_in.resize(4 * d);
        std::memcpy(ffn_in.data(), ln_buf.data(), d * sizeof(double));
        std::memcpy(ffn_in.data() + d, rslice, d * sizeof(double));
        std::memcpy(ffn_in.data() + 2 * d, cslice, d * sizeof(double));
        std::memcpy(ffn_in.data() + 3 * d, glob_hw.data(), d * sizeof(double));
        ffn_hidden.resize(4 * d);
        affine(ffn_in.data(), 1, sw.ffn1, sw.ffn1_b, ffn_hidden.data());
        for (double& v : ffn_hidden) v = gelu(v);
        ffn_out.resize(d);
        affine(ffn_hidden.data(), 1, sw.ffn2, sw.ffn2_b, ffn_out.data());
        for (std::size_t c = 0; c < d; ++c) tok[c] += ffn_out[c];
    };

    for (std::size_t layer = 0; layer < cfg.layers; ++layer) {
        std::fill(row_hw.begin(), row_hw.end(), 0.0);
        std::fill(col_hw.begin(), col_hw.end(), 0.0);
        std::fill(glob_hw.begin(), glob_hw.end(), 0.0);

        // Attention sublayers: one leaf-batched and one tile-batched dispatch.
        attention_batched(leaf_tokens.data(), k_count, l, d, cfg.heads,
                          w.leaf_stream[layer], leaf_bias, trace);
        if (trace) ++trace->leaf_attention_dispatches;
        attention_batched(tile_tokens.data(), tile_count, ls, d, cfg.heads,
                          w.tile_stream[layer], tile_bias, trace);
        if (trace) ++trace->tile_attention_dispatches;

        // Scatter: leaf tokens land on their own node's row and column bands;
        // tile tokens are repeat-interleaved across their chunk.
        for (std::size_t i = 0; i < n; ++i) {
            const double* tok = leaf_tokens.data() + i * d;
            for (std::size_t c = 0; c < d; ++c) {
                row_hw[i * d + c] += tok[c];
                col_hw[i * d + c] += tok[c];
                glob_hw[c] += tok[c];
            }
        }
        for (const TileSpec& t : partition.tiles) {
            const std::size_t chunk = chunk_len[t.id];
            const std::size_t row0 = t.row_begin * l, col0 = t.col_begin * l;
            for (std::size_t tok = 0; tok < ls; ++tok) {
                const double* e = tile_tokens.data() + (t.id * ls + tok) * d;
                for (std::size_t s = 0; s < chunk; ++s) {
                    double* r = row_hw.data() + (row0 + tok * chunk + s) * d;
                    double* c = col_hw.data() + (col0 + tok * chunk + s) * d;
                    for (std::size_t cc = 0; cc < d; ++cc) {
                        r[cc] += e[cc];
                        c[cc] += e[cc];
                    }
                }
                for (std::size_t cc = 0; cc < d; ++cc) glob_hw[cc] += e[cc];
            }
        }

        // Conservation audit: buffer totals must equal the scattered totals.
        if (trace) {
            std::vector<double> expect_row(d, 0.0), expect_col(d, 0.0), expect_glob(d, 0.0);
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t c = 0; c < d; ++c) {
                    expect_row[c] += leaf_tokens[i * d + c];
                    expect_col[c] += leaf_tokens[i * d + c];
                    expect_glob[c] += leaf_tokens[i * d + c];
                }
            for (const TileSpec& t : partition.tiles)
                for (std::size_t tok = 0; tok < ls; ++tok)
                    for (std::size_t c = 0; c < d; ++c) {
                        const double e = tile_tokens[(t.id * ls + tok) * d + c];
                        expect_row[c] += e * static_cast<double>(chunk_len[t.id]);
                        expect_col[c] += e * static_cast<double>(chunk_len[t.id]);
                        expect_glob[c] += e;
                    }
            double dev = 0.0, scale = 0.0;
            std::vector<double> got_row(d, 0.0), got_col(d, 0.0);
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t c = 0; c < d; ++c) {
                    got_row[c] += row_hw[i * d + c];
                    got_col[c] += col_hw[i * d + c];
                }
            for (std::size_t c = 0; c < d; ++c) {
                dev = std::max({dev, std::fabs(got_row[c] - expect_row[c]),
                                std::fabs(got_col[c] - expect_col[c]),
                                std::fabs(glob_hw[c] - expect_glob[c])});
                scale = std::max({scale, std::fabs(expect_row[c]),
                                  std::fabs(expect_col[c]), std::fabs(expect_glob[c]), 1.0});
            }
            trace->per_layer_highway_deviation.push_back(dev / scale);
            trace->highway_max_deviation =
                std::max(trace->highway_max_deviation, dev / scale);
        }

        // FFN sublayers with the 4d-wide highway concat.
        for (std::size_t i = 0; i < n; ++i)
            ffn_sublayer(leaf_tokens.data() + i * d, row_hw.data() + i * d,
                         col_hw.data() + i * d, w.leaf_stream[layer]);
        std::vector<double> rmean(d), cmean(d);
        for (const TileSpec& t : partition.tiles) {
            const std::size_t chunk = chunk_len[t.id];
            const std::size_t row0 = t.row_begin * l, col0 = t.col_begin * l;
            for (std::size_t tok = 0; tok < ls; ++tok) {
                std::fill(rmean.begin(), rmean.end(), 0.0);
                std::fill(cmean.begin(), cmean.end(), 0.0);
                for (std::size_t s = 0; s < chunk; ++s)
                    for (std::size_t c = 0; c < d; ++c) {
                        rmean[c] += row_hw[(row0 + tok * chunk + s) * d + c];
                        cmean[c] += col_hw[(col0 + tok * chunk + s) * d + c];
                    }
                for (std::size_t c = 0; c < d; ++c) {
                    rmean[c] /= static_cast<double>(chunk);
                    cmean[c] /= static_cast<double>(chunk);
                }
                ffn_sublayer(tile_tokens.data() + (t.id * ls + tok) * d, rmean.data(),
                             cmean.data(), w.tile_stream[layer]);
            }
        }
    }

    // Decoder heads into the packed layout.
    FactorTensor out(layout);
    std::vector<double> head_hidden(d), row(l);
    for (std::size_t i = 0; i < n; ++i) {
        const double* tok = leaf_tokens.data() + i * d;
        const std::size_t k = i / l, r = i % l;
        // Leaf factor row via the two-layer head.
        affine(tok, 1, w.leaf_head1, w.leaf_head1_b, head_hidden.data());
        for (double& v : head_hidden) v = gelu(v);
        affine(head_hidden.data(), 1, w.leaf_head2, w.leaf_head2_b, row.data());
        float* f = out.data.data() + layout.leaf_factor(k) + r * l;
        for (std::size_t c = 0; c < l; ++c) f[c] = static_cast<float>(row[c]);
        // Bridge rows.
        float* bu = out.data.data() + layout.bridge_u(k) + r * ls;
        float* bv = out.data.data() + layout.bridge_v(k) + r * ls;
        for (std::size_t c = 0; c < ls; ++c) {
            double au = w.bridge_head_u_b[c], av = w.bridge_head_v_b[c];
            for (std::size_t q = 0; q < d; ++q) {
                au += tok[q] * w.bridge_head_u.at(q, c);
                av += tok[q] * w.bridge_head_v.at(q, c);
            }
            bu[c] = static_cast<float>(au);
            bv[c] = static_cast<float>(av);
        }
        // Gate.
        double g = w.gate_head_b;
        for (std::size_t q = 0; q < d; ++q) g += tok[q] * w.gate_head[q];
        out.data[layout.gate() + i] = static_cast<float>(g);
    }
    const std::size_t rank = layout.coupling_rank;
    for (std::size_t m = 0; m < tile_count; ++m)
        for (std::size_t tok = 0; tok < ls; ++tok) {
            const double* e = tile_tokens.data() + (m * ls + tok) * d;
            float* u = out.data.data() + layout.tile_u(m) + tok * rank;
            float* v = out.data.data() + layout.tile_v(m) + tok * rank;
            for (std::size_t c = 0; c < rank; ++c) {
                double au = w.tile_head_u_b[c], av = w.tile_head_v_b[c];
                for (std::size_t q = 0; q < d; ++q) {
                    au += e[q] * w.tile_head_u.at(q, c);
                    av += e[q] * w.tile_head_v.at(q, c);
                }
                u[c] = static_cast<float>(au);
                v[c] = static_cast<float>(av);
            }
        }
    return out;
}

} // namespace hfp::toynet
