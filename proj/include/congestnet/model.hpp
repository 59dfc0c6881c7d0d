#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "congestnet/graph.hpp"
#include "congestnet/tape.hpp"
#include "congestnet/tensor.hpp"

namespace congestnet {

struct ModelConfig {
    int l = 3;                // layers per pathway
    int d = 64;               // hidden width
    int heads = 4;            // attention heads; d % heads == 0
    int K = 16;               // RBF basis count
    double cutoff = 0.0;      // RBF distance cutoff, layout units (8 x tile_w by default)
    int fourier_bands = 4;    // F_b
    double leaky_slope = 0.2;
    int out_mlp_width = 64;
    int f_t = 7;
    int f_g = 9;

    int fourier_width() const { return 2 + 4 * fourier_bands; }
    void validate() const; // throws std::invalid_argument
};

enum class Mode { full, topo_only, geo_only };
Mode mode_from_string(const std::string& s);
std::string mode_to_string(Mode m);

// Named parameter tensors in a fixed creation order (the checkpoint layout and
// the optimizer iteration order). Names are dotted paths; a final component
// starting with 'b' marks a bias (excluded from weight decay).
template <class T>
struct ModelParams {
    std::vector<std::pair<std::string, Tensor<T>>> items;

    Tensor<T>& find(const std::string& name);
    const Tensor<T>& find(const std::string& name) const;
    bool has(const std::string& name) const;

    template <class U>
    ModelParams<U> cast() const {
        ModelParams<U> out;
        out.items.reserve(items.size());
        for (const auto& [n, t] : items) out.items.emplace_back(n, t.template cast<U>());
        return out;
    }
};

bool is_bias_name(const std::string& name);

// Glorot-uniform weights (s = sqrt(6/(fan_in+fan_out))), zero biases, filled
// in a fixed order from one seeded stream.
template <class T>
ModelParams<T> init_params(const ModelConfig& cfg, uint64_t seed);

// ---------------------------------------------------------------------------
// Design-level input preparation (host-side, off-tape)
// ---------------------------------------------------------------------------

// Column statistics over the 7 topology features, pooled over the training
// designs and frozen into the checkpoint.
struct FeatureNorm {
    std::vector<double> mean, stdev; // size f_t; stdev clamped >= 1e-8
};

FeatureNorm compute_feature_norm(const std::vector<const MultiViewGraph*>& train_designs);

// Per-design target standardization (each design uses its own statistics).
struct TargetStats {
    double mean = 0.0;
    double stdev = 1.0; // clamped >= 1e-12
};

TargetStats target_stats(const std::vector<double>& y);
std::vector<double> standardize(const std::vector<double>& y, const TargetStats& s);

// [x, y, then sin/cos(2^b pi x), sin/cos(2^b pi y) for b = 0..bands-1];
// coords must lie in [0,1]^2 within 1e-6.
Tensor<double> fourier_features(const Tensor<double>& coords, int bands);

// e_k(dist) = exp(-gamma (min(dist,cutoff) - mu_k)^2), mu_k = k*cutoff/(K-1),
// gamma = ((K-1)/cutoff)^2.
Tensor<double> rbf_expand(const std::vector<double>& dist, int K, double cutoff);

// Everything the forward pass needs for one design, in model precision.
template <class T>
struct ModelInputs {
    int n = 0;
    Tensor<T> x_t;               // N x f_t, normalized
    Tensor<T> x_g;               // N x f_g = [normalized x_t || raw coords]
    Tensor<T> fourier;           // N x (2+4F_b)
    Tensor<T> rbf;               // E_g x K
    std::vector<int> att_src;    // topo edges then self-edges (E_t + N)
    std::vector<int> att_dst;
    std::vector<int> geo_src;    // E_g
    std::vector<int> geo_dst;
};

// Topology edges plus one self-edge per node, appended in node order — the
// per-destination softmax then always has at least one row per segment.
void attention_edges(const Graph& topo, std::vector<int>& src, std::vector<int>& dst);

template <class T>
ModelInputs<T> prepare_inputs(const MultiViewGraph& mvg, const FeatureNorm& norm,
                              const ModelConfig& cfg);

// ---------------------------------------------------------------------------
// Layers (tape ops over prepared inputs). Ids refer to `tape` nodes.
// ---------------------------------------------------------------------------

template <class T>
using NodeId = typename Tape<T>::Id;

// z = hW + b; score(i->j) = leaky_relu(a_src.z_i + a_dst.z_j) per head;
// alpha = softmax over each destination's incoming rows (self-edge included in
// att_*); out_j = sum_i alpha_ij z_i, heads concatenated. Hidden layers apply
// leaky_relu afterwards, the last layer returns the raw aggregate.
// *alpha_out (optional) receives the alpha node for inspection.
template <class T>
NodeId<T> gat_layer(Tape<T>& tape, NodeId<T> h, const std::vector<int>& att_src,
                    const std::vector<int>& att_dst, int n_nodes, NodeId<T> W, NodeId<T> b,
                    NodeId<T> a_src, NodeId<T> a_dst, int heads, T slope, bool last,
                    NodeId<T>* alpha_out = nullptr);

// m = hW_in + b_in (+ pe on the first layer); message(i->j) = m_i * g_ij;
// out_j = ssp(sum(messages) W_out + b_out + skip), skip = h W_res when given
// (first layer) else h itself.
template <class T>
NodeId<T> cfconv_layer(Tape<T>& tape, NodeId<T> h, const std::vector<int>& geo_src,
                       const std::vector<int>& geo_dst, int n_nodes, NodeId<T> g_filter,
                       NodeId<T> W_in, NodeId<T> b_in, NodeId<T> W_out, NodeId<T> b_out,
                       std::optional<NodeId<T>> W_res, std::optional<NodeId<T>> pe);

// 2-layer MLP over the Fourier features, leaky_relu hidden, linear out.
template <class T>
NodeId<T> positional_encoding(Tape<T>& tape, NodeId<T> fourier, NodeId<T> W1, NodeId<T> b1,
                              NodeId<T> W2, NodeId<T> b2, T slope);

// z_t = leaky_relu([h_t||x_t] W_t + b_t) when h_t present, else zeros (the
// pathway is ablated away entirely); z_g symmetric; yhat = MLP_out([z_t||z_g])
// with one leaky_relu hidden layer and a linear scalar output. Returns N x 1.
template <class T>
NodeId<T> fusion_head(Tape<T>& tape, std::optional<NodeId<T>> h_t, std::optional<NodeId<T>> h_g,
                      NodeId<T> x_t, NodeId<T> x_g, NodeId<T> W_t, NodeId<T> b_t, NodeId<T> W_g,
                      NodeId<T> b_g, NodeId<T> W1, NodeId<T> b1, NodeId<T> W2, NodeId<T> b2,
                      T slope);

// ---------------------------------------------------------------------------
// Whole-model forward
// ---------------------------------------------------------------------------

template <class T>
struct ForwardResult {
    NodeId<T> yhat = -1;                         // N x 1
    std::map<std::string, NodeId<T>> param_ids;  // leaves created for this pass
    std::vector<NodeId<T>> alphas;               // one per GAT layer (when run)
};

// Builds the requested pathways on the tape. An ablated mode never touches the
// other view's inputs or parameters, so its predictions cannot depend on them.
template <class T>
ForwardResult<T> model_forward(Tape<T>& tape, const ModelParams<T>& params,
                               const ModelInputs<T>& in, const ModelConfig& cfg, Mode mode,
                               bool train);

extern template struct ModelParams<float>;
extern template struct ModelParams<double>;

} // namespace congestnet
