#pragma once

#include "hfp/apply.hpp"
#include "hfp/frame.hpp"

#include <vector>

namespace hfp::toynet {

// Toy-scale configuration; production sizes scale d/layers/heads up but the
// routing is identical.
struct Config {
    std::size_t d = 16;        // embedding width, heads must divide it
    std::size_t layers = 2;    // transformer blocks per stream
    std::size_t heads = 2;
    std::size_t gcn_layers = 2;
    std::size_t d_global = 12; // broadcast per-frame context width
    std::size_t edge_hidden = 8;
};

struct StreamLayerWeights {
    DenseMat wq, wk, wv, wo;   // d x d each
    DenseMat ffn1;             // 4d x 4d (token + row/col/global highway concat)
    std::vector<double> ffn1_b;
    DenseMat ffn2;             // 4d x d
    std::vector<double> ffn2_b;
};

struct EdgeMlpWeights {
    DenseMat w1; // 4 x hidden
    std::vector<double> b1;
    DenseMat w2; // hidden x heads
    std::vector<double> b2;
};

struct Weights {
    DenseMat enc1; // feature -> d
    std::vector<double> enc1_b;
    DenseMat enc2; // d -> d
    std::vector<double> enc2_b;
    std::vector<DenseMat> gcn; // d -> d per graph-conv layer

    std::vector<StreamLayerWeights> leaf_stream;
    std::vector<StreamLayerWeights> tile_stream;
    EdgeMlpWeights leaf_edge;
    EdgeMlpWeights tile_edge;

    DenseMat leaf_head1; // d -> d
    std::vector<double> leaf_head1_b;
    DenseMat leaf_head2; // d -> L
    std::vector<double> leaf_head2_b;
    DenseMat tile_head_u, tile_head_v;     // d -> coupling rank
    std::vector<double> tile_head_u_b, tile_head_v_b;
    DenseMat bridge_head_u, bridge_head_v; // d -> L_s
    std::vector<double> bridge_head_u_b, bridge_head_v_b;
    std::vector<double> gate_head; // d
    double gate_head_b = 0.0;

    void zero(); // zeroes every weight and bias (for invariance tests)
};

Weights init_weights(const Config& cfg, const FactorLayout& layout, std::uint64_t seed);

struct Trace {
    std::size_t leaf_attention_dispatches = 0;
    std::size_t tile_attention_dispatches = 0;
    std::size_t attention_kernel_families() const {
        return (leaf_attention_dispatches > 0 ? 1 : 0) +
               (tile_attention_dispatches > 0 ? 1 : 0);
    }
    double max_attention_row_sum_error = 0.0;
    double highway_max_deviation = 0.0; // conservation, relative
    std::vector<double> per_layer_highway_deviation;
};

// Feature lift (density, position, boundary flags, broadcast frame context)
// followed by residual graph convolutions weighted by D^{-1} A.
DenseMat encode(const Frame& frame, const HPartition& partition, const Config& cfg,
                const Weights& weights);

// Full forward pass: leaf-batched and tile-batched attention streams with
// per-layer highway buffers, decoded into a packed factor tensor of exact
// packed width.
FactorTensor forward(const Frame& frame, const HPartition& partition,
                     std::size_t coarse_size, const Config& cfg, const Weights& weights,
                     Trace* trace = nullptr);

} // namespace hfp::toynet
