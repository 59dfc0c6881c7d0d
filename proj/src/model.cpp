#include "congestnet/model.hpp"

#include <cmath>
#include <stdexcept>

#include "congestnet/rng.hpp"

namespace congestnet {

void ModelConfig::validate() const {
    if (l < 1) throw std::invalid_argument("model: l must be >= 1");
    if (d < 1 || heads < 1 || d % heads != 0)
        throw std::invalid_argument("model: d must be positive and divisible by heads");
    if (K < 2) throw std::invalid_argument("model: K must be >= 2");
    if (!(cutoff > 0.0)) throw std::invalid_argument("model: cutoff must be positive");
    if (fourier_bands < 0) throw std::invalid_argument("model: fourier_bands must be >= 0");
    if (out_mlp_width < 1) throw std::invalid_argument("model: out_mlp_width must be >= 1");
    if (f_t < 1 || f_g < f_t) throw std::invalid_argument("model: bad feature widths");
}

Mode mode_from_string(const std::string& s) {
    if (s == "full") return Mode::full;
    if (s == "topo" || s == "topo_only") return Mode::topo_only;
    if (s == "geo" || s == "geo_only") return Mode::geo_only;
    throw std::invalid_argument("model: unknown mode '" + s + "' (full|topo|geo)");
}

std::string mode_to_string(Mode m) {
    switch (m) {
        case Mode::full: return "full";
        case Mode::topo_only: return "topo_only";
        case Mode::geo_only: return "geo_only";
    }
    return "full";
}

template <class T>
Tensor<T>& ModelParams<T>::find(const std::string& name) {
    for (auto& [n, t] : items)
        if (n == name) return t;
    throw std::out_of_range("model: unknown parameter '" + name + "'");
}

template <class T>
const Tensor<T>& ModelParams<T>::find(const std::string& name) const {
    for (const auto& [n, t] : items)
        if (n == name) return t;
    throw std::out_of_range("model: unknown parameter '" + name + "'");
}

template <class T>
bool ModelParams<T>::has(const std::string& name) const {
    for (const auto& [n, t] : items)
        if (n == name) return true;
    return false;
}

bool is_bias_name(const std::string& name) {
    const size_t dot = name.find_last_of('.');
    const size_t last = dot == std::string::npos ? 0 : dot + 1;
    return last < name.size() && name[last] == 'b';
}

template <class T>
ModelParams<T> init_params(const ModelConfig& cfg, uint64_t seed) {
    cfg.validate();
    Rng rng(seed);
    ModelParams<T> p;
    const auto weight = [&](const std::string& name, int fan_in, int fan_out) {
        const double s = std::sqrt(6.0 / (fan_in + fan_out));
        Tensor<T> t({fan_in, fan_out});
        for (auto& v : t.data) v = static_cast<T>(rng.uniform(-s, s));
        p.items.emplace_back(name, std::move(t));
    };
    const auto attn_vec = [&](const std::string& name, int heads, int dh) {
        const double s = std::sqrt(6.0 / (dh + 1));
        Tensor<T> t({heads, dh});
        for (auto& v : t.data) v = static_cast<T>(rng.uniform(-s, s));
        p.items.emplace_back(name, std::move(t));
    };
    const auto bias = [&](const std::string& name, int n) {
        p.items.emplace_back(name, Tensor<T>({n}));
    };

    const int dh = cfg.d / cfg.heads;
    for (int i = 0; i < cfg.l; ++i) {
        const std::string pre = "gat." + std::to_string(i) + ".";
        weight(pre + "W", i == 0 ? cfg.f_t : cfg.d, cfg.d);
        bias(pre + "b", cfg.d);
        attn_vec(pre + "a_src", cfg.heads, dh);
        attn_vec(pre + "a_dst", cfg.heads, dh);
    }
    for (int i = 0; i < cfg.l; ++i) {
        const std::string pre = "cf." + std::to_string(i) + ".";
        weight(pre + "W_in", i == 0 ? cfg.f_g : cfg.d, cfg.d);
        bias(pre + "b_in", cfg.d);
        weight(pre + "filt.W1", cfg.K, cfg.d);
        bias(pre + "filt.b1", cfg.d);
        weight(pre + "filt.W2", cfg.d, cfg.d);
        bias(pre + "filt.b2", cfg.d);
        weight(pre + "W_out", cfg.d, cfg.d);
        bias(pre + "b_out", cfg.d);
        if (i == 0) weight(pre + "W_res", cfg.f_g, cfg.d);
    }
    weight("pe.W1", cfg.fourier_width(), cfg.d);
    bias("pe.b1", cfg.d);
    weight("pe.W2", cfg.d, cfg.d);
    bias("pe.b2", cfg.d);
    weight("fuse_t.W", cfg.d + cfg.f_t, cfg.d);
    bias("fuse_t.b", cfg.d);
    weight("fuse_g.W", cfg.d + cfg.f_g, cfg.d);
    bias("fuse_g.b", cfg.d);
    weight("out.W1", 2 * cfg.d, cfg.out_mlp_width);
    bias("out.b1", cfg.out_mlp_width);
    weight("out.W2", cfg.out_mlp_width, 1);
    bias("out.b2", 1);
    return p;
}

// ---------------------------------------------------------------------------
// Host-side preparation
// ---------------------------------------------------------------------------

FeatureNorm compute_feature_norm(const std::vector<const MultiViewGraph*>& train_designs) {
    if (train_designs.empty())
        throw std::invalid_argument("feature_norm: need at least one design");
    const int f = train_designs[0]->x_t.shape[1];
    size_t n = 0;
    std::vector<double> sum(f, 0.0);
    for (const MultiViewGraph* mv : train_designs) {
        if (mv->x_t.shape[1] != f)
            throw std::invalid_argument("feature_norm: inconsistent feature widths");
        for (int i = 0; i < mv->x_t.shape[0]; ++i)
            for (int j = 0; j < f; ++j) sum[j] += mv->x_t.at(i, j);
        n += static_cast<size_t>(mv->x_t.shape[0]);
    }
    if (n == 0) throw std::invalid_argument("feature_norm: no cells");
    FeatureNorm norm;
    norm.mean.resize(f);
    for (int j = 0; j < f; ++j) norm.mean[j] = sum[j] / static_cast<double>(n);
    std::vector<double> ssd(f, 0.0);
    for (const MultiViewGraph* mv : train_designs)
        for (int i = 0; i < mv->x_t.shape[0]; ++i)
            for (int j = 0; j < f; ++j) {
                const double d = mv->x_t.at(i, j) - norm.mean[j];
                ssd[j] += d * d;
            }
    norm.stdev.resize(f);
    for (int j = 0; j < f; ++j)
        norm.stdev[j] = std::max(std::sqrt(ssd[j] / static_cast<double>(n)), 1e-8);
    return norm;
}

TargetStats target_stats(const std::vector<double>& y) {
    if (y.empty()) throw std::invalid_argument("target_stats: empty target vector");
    double sum = 0.0;
    for (double v : y) sum += v;
    TargetStats s;
    s.mean = sum / static_cast<double>(y.size());
    double ssd = 0.0;
    for (double v : y) ssd += (v - s.mean) * (v - s.mean);
    s.stdev = std::max(std::sqrt(ssd / static_cast<double>(y.size())), 1e-12);
    return s;
}

std::vector<double> standardize(const std::vector<double>& y, const TargetStats& s) {
    std::vector<double> out(y.size());
    for (size_t i = 0; i < y.size(); ++i) out[i] = (y[i] - s.mean) / s.stdev;
    return out;
}

Tensor<double> fourier_features(const Tensor<double>& coords, int bands) {
    if (coords.rank() != 2 || coords.shape[1] != 2)
        throw std::invalid_argument("fourier: coords must be N x 2");
    const int n = coords.shape[0];
    const int width = 2 + 4 * bands;
    Tensor<double> out({n, width});
    for (int i = 0; i < n; ++i) {
        const double x = coords.at(i, 0), y = coords.at(i, 1);
        if (x < -1e-6 || x > 1.0 + 1e-6 || y < -1e-6 || y > 1.0 + 1e-6)
            throw std::invalid_argument("fourier: coords outside [0,1]^2");
        out.at(i, 0) = x;
        out.at(i, 1) = y;
        int c = 2;
        for (int b = 0; b < bands; ++b) {
            const double w = std::ldexp(M_PI, b); // 2^b * pi
            out.at(i, c++) = std::sin(w * x);
            out.at(i, c++) = std::cos(w * x);
            out.at(i, c++) = std::sin(w * y);
            out.at(i, c++) = std::cos(w * y);
        }
    }
    return out;
}

Tensor<double> rbf_expand(const std::vector<double>& dist, int K, double cutoff) {
    if (K < 2 || !(cutoff > 0.0)) throw std::invalid_argument("rbf: need K >= 2, cutoff > 0");
    const double gamma = ((K - 1) / cutoff) * ((K - 1) / cutoff);
    const int e = static_cast<int>(dist.size());
    Tensor<double> out({e, K});
    for (int i = 0; i < e; ++i) {
        const double d = std::min(dist[i], cutoff);
        for (int k = 0; k < K; ++k) {
            const double mu = k * cutoff / (K - 1);
            out.at(i, k) = std::exp(-gamma * (d - mu) * (d - mu));
        }
    }
    return out;
}

void attention_edges(const Graph& topo, std::vector<int>& src, std::vector<int>& dst) {
    src.clear();
    dst.clear();
    src.reserve(topo.edges.size() + topo.n_nodes);
    dst.reserve(topo.edges.size() + topo.n_nodes);
    for (const auto& [u, v] : topo.edges) {
        src.push_back(u);
        dst.push_back(v);
    }
    for (int i = 0; i < topo.n_nodes; ++i) { // implicit self-edges
        src.push_back(i);
        dst.push_back(i);
    }
}

template <class T>
ModelInputs<T> prepare_inputs(const MultiViewGraph& mvg, const FeatureNorm& norm,
                              const ModelConfig& cfg) {
    cfg.validate();
    if (mvg.x_t.shape[1] != cfg.f_t || mvg.x_g.shape[1] != cfg.f_g)
        throw std::invalid_argument("prepare_inputs: feature width mismatch with config");
    if (static_cast<int>(norm.mean.size()) != cfg.f_t ||
        static_cast<int>(norm.stdev.size()) != cfg.f_t)
        throw std::invalid_argument("prepare_inputs: feature-norm width mismatch");

    ModelInputs<T> in;
    in.n = mvg.x_t.shape[0];
    Tensor<double> xt(mvg.x_t.shape);
    for (int i = 0; i < in.n; ++i)
        for (int j = 0; j < cfg.f_t; ++j)
            xt.at(i, j) = (mvg.x_t.at(i, j) - norm.mean[j]) / norm.stdev[j];
    Tensor<double> xg({in.n, cfg.f_g});
    for (int i = 0; i < in.n; ++i) {
        for (int j = 0; j < cfg.f_t; ++j) xg.at(i, j) = xt.at(i, j);
        for (int j = cfg.f_t; j < cfg.f_g; ++j) xg.at(i, j) = mvg.x_g.at(i, j); // raw coords
    }
    in.x_t = xt.template cast<T>();
    in.x_g = xg.template cast<T>();
    in.fourier = fourier_features(mvg.coords, cfg.fourier_bands).template cast<T>();
    in.rbf = rbf_expand(mvg.geo.edge_attr, cfg.K, cfg.cutoff).template cast<T>();
    attention_edges(mvg.topo, in.att_src, in.att_dst);
    in.geo_src.reserve(mvg.geo.edges.size());
    in.geo_dst.reserve(mvg.geo.edges.size());
    for (const auto& [u, v] : mvg.geo.edges) {
        in.geo_src.push_back(u);
        in.geo_dst.push_back(v);
    }
    return in;
}

// ---------------------------------------------------------------------------
// Layers
// ---------------------------------------------------------------------------

template <class T>
NodeId<T> gat_layer(Tape<T>& tape, NodeId<T> h, const std::vector<int>& att_src,
                    const std::vector<int>& att_dst, int n_nodes, NodeId<T> W, NodeId<T> b,
                    NodeId<T> a_src, NodeId<T> a_dst, int heads, T slope, bool last,
                    NodeId<T>* alpha_out) {
    const auto z = tape.add(tape.matmul(h, W), b);
    const auto s_src = tape.head_dot(z, a_src, heads); // N x H
    const auto s_dst = tape.head_dot(z, a_dst, heads);
    const auto scores = tape.leaky_relu(
        tape.add(tape.gather_rows(s_src, att_src), tape.gather_rows(s_dst, att_dst)), slope);
    const auto alpha = tape.segment_softmax(scores, att_dst, n_nodes);
    if (alpha_out) *alpha_out = alpha;
    const auto msg = tape.head_scale(tape.gather_rows(z, att_src), alpha, heads);
    const auto out = tape.segment_sum(msg, att_dst, n_nodes);
    return last ? out : tape.leaky_relu(out, slope);
}

template <class T>
NodeId<T> cfconv_layer(Tape<T>& tape, NodeId<T> h, const std::vector<int>& geo_src,
                       const std::vector<int>& geo_dst, int n_nodes, NodeId<T> g_filter,
                       NodeId<T> W_in, NodeId<T> b_in, NodeId<T> W_out, NodeId<T> b_out,
                       std::optional<NodeId<T>> W_res, std::optional<NodeId<T>> pe) {
    auto m = tape.add(tape.matmul(h, W_in), b_in);
    if (pe) m = tape.add(m, *pe);
    const auto msg = tape.mul(tape.gather_rows(m, geo_src), g_filter);
    const auto agg = tape.segment_sum(msg, geo_dst, n_nodes);
    const auto pre = tape.add(tape.matmul(agg, W_out), b_out);
    const auto skip = W_res ? tape.matmul(h, *W_res) : h;
    return tape.shifted_softplus(tape.add(pre, skip));
}

template <class T>
NodeId<T> positional_encoding(Tape<T>& tape, NodeId<T> fourier, NodeId<T> W1, NodeId<T> b1,
                              NodeId<T> W2, NodeId<T> b2, T slope) {
    const auto hidden = tape.leaky_relu(tape.add(tape.matmul(fourier, W1), b1), slope);
    return tape.add(tape.matmul(hidden, W2), b2);
}

template <class T>
NodeId<T> fusion_head(Tape<T>& tape, std::optional<NodeId<T>> h_t, std::optional<NodeId<T>> h_g,
                      NodeId<T> x_t, NodeId<T> x_g, NodeId<T> W_t, NodeId<T> b_t, NodeId<T> W_g,
                      NodeId<T> b_g, NodeId<T> W1, NodeId<T> b1, NodeId<T> W2, NodeId<T> b2,
                      T slope) {
    const int d = tape.value(W1).shape[0] / 2;
    const auto branch = [&](std::optional<NodeId<T>> h, NodeId<T> x, NodeId<T> W,
                            NodeId<T> b) -> NodeId<T> {
        if (!h) {
            // ablated pathway contributes a constant zero block; nothing from
            // its view can reach the output
            const int n = tape.value(x_t != -1 ? x_t : x_g).shape[0];
            return tape.leaf(Tensor<T>({n, d}));
        }
        return tape.leaky_relu(tape.add(tape.matmul(tape.concat(*h, x, 1), W), b), slope);
    };
    const auto z_t = branch(h_t, x_t, W_t, b_t);
    const auto z_g = branch(h_g, x_g, W_g, b_g);
    const auto cat = tape.concat(z_t, z_g, 1);
    const auto hidden = tape.leaky_relu(tape.add(tape.matmul(cat, W1), b1), slope);
    return tape.add(tape.matmul(hidden, W2), b2);
}

// ---------------------------------------------------------------------------
// Whole model
// ---------------------------------------------------------------------------

template <class T>
ForwardResult<T> model_forward(Tape<T>& tape, const ModelParams<T>& params,
                               const ModelInputs<T>& in, const ModelConfig& cfg, Mode mode,
                               bool train) {
    cfg.validate();
    ForwardResult<T> res;
    const auto pid = [&](const std::string& name) {
        const auto it = res.param_ids.find(name);
        if (it != res.param_ids.end()) return it->second;
        const auto id = tape.leaf(params.find(name), train);
        res.param_ids.emplace(name, id);
        return id;
    };
    const T slope = static_cast<T>(cfg.leaky_slope);

    std::optional<NodeId<T>> h_t, h_g;
    NodeId<T> xt = -1, xg = -1;
    if (mode != Mode::geo_only) {
        xt = tape.leaf(in.x_t);
        auto h = xt;
        for (int i = 0; i < cfg.l; ++i) {
            const std::string pre = "gat." + std::to_string(i) + ".";
            NodeId<T> alpha = -1;
            h = gat_layer(tape, h, in.att_src, in.att_dst, in.n, pid(pre + "W"),
                          pid(pre + "b"), pid(pre + "a_src"), pid(pre + "a_dst"), cfg.heads,
                          slope, i == cfg.l - 1, &alpha);
            res.alphas.push_back(alpha);
        }
        h_t = h;
    }
    if (mode != Mode::topo_only) {
        xg = tape.leaf(in.x_g);
        const auto pe = positional_encoding(tape, tape.leaf(in.fourier), pid("pe.W1"),
                                            pid("pe.b1"), pid("pe.W2"), pid("pe.b2"), slope);
        const auto rbf = tape.leaf(in.rbf);
        auto h = xg;
        for (int i = 0; i < cfg.l; ++i) {
            const std::string pre = "cf." + std::to_string(i) + ".";
            const auto g1 = tape.shifted_softplus(
                tape.add(tape.matmul(rbf, pid(pre + "filt.W1")), pid(pre + "filt.b1")));
            const auto g = tape.add(tape.matmul(g1, pid(pre + "filt.W2")),
                                    pid(pre + "filt.b2"));
            h = cfconv_layer(tape, h, in.geo_src, in.geo_dst, in.n, g, pid(pre + "W_in"),
                             pid(pre + "b_in"), pid(pre + "W_out"), pid(pre + "b_out"),
                             i == 0 ? std::optional<NodeId<T>>(pid(pre + "W_res"))
                                    : std::nullopt,
                             i == 0 ? std::optional<NodeId<T>>(pe) : std::nullopt);
        }
        h_g = h;
    }

    const NodeId<T> Wt = h_t ? pid("fuse_t.W") : -1, bt = h_t ? pid("fuse_t.b") : -1;
    const NodeId<T> Wg = h_g ? pid("fuse_g.W") : -1, bg = h_g ? pid("fuse_g.b") : -1;
    res.yhat = fusion_head(tape, h_t, h_g, xt, xg, Wt, bt, Wg, bg, pid("out.W1"),
                           pid("out.b1"), pid("out.W2"), pid("out.b2"), slope);
    return res;
}

// ---------------------------------------------------------------------------

template struct ModelParams<float>;
template struct ModelParams<double>;
template ModelParams<float> init_params<float>(const ModelConfig&, uint64_t);
template ModelParams<double> init_params<double>(const ModelConfig&, uint64_t);
template ModelInputs<float> prepare_inputs<float>(const MultiViewGraph&, const FeatureNorm&,
                                                  const ModelConfig&);
template ModelInputs<double> prepare_inputs<double>(const MultiViewGraph&, const FeatureNorm&,
                                                    const ModelConfig&);
template NodeId<float> gat_layer<float>(Tape<float>&, NodeId<float>, const std::vector<int>&,
                                        const std::vector<int>&, int, NodeId<float>,
                                        NodeId<float>, NodeId<float>, NodeId<float>, int, float,
                                        bool, NodeId<float>*);
template NodeId<double> gat_layer<double>(Tape<double>&, NodeId<double>,
                                          const std::vector<int>&, const std::vector<int>&, int,
                                          NodeId<double>, NodeId<double>, NodeId<double>,
                                          NodeId<double>, int, double, bool, NodeId<double>*);
template NodeId<float> cfconv_layer<float>(Tape<float>&, NodeId<float>, const std::vector<int>&,
                                           const std::vector<int>&, int, NodeId<float>,
                                           NodeId<float>, NodeId<float>, NodeId<float>,
                                           NodeId<float>, std::optional<NodeId<float>>,
                                           std::optional<NodeId<float>>);
template NodeId<double> cfconv_layer<double>(Tape<double>&, NodeId<double>,
                                             const std::vector<int>&, const std::vector<int>&,
                                             int, NodeId<double>, NodeId<double>,
                                             NodeId<double>, NodeId<double>, NodeId<double>,
                                             std::optional<NodeId<double>>,
                                             std::optional<NodeId<double>>);
template NodeId<float> positional_encoding<float>(Tape<float>&, NodeId<float>, NodeId<float>,
                                                  NodeId<float>, NodeId<float>, NodeId<float>,
                                                  float);
template NodeId<double> positional_encoding<double>(Tape<double>&, NodeId<double>,
                                                    NodeId<double>, NodeId<double>,
                                                    NodeId<double>, NodeId<double>, double);
template NodeId<float> fusion_head<float>(Tape<float>&, std::optional<NodeId<float>>,
                                          std::optional<NodeId<float>>, NodeId<float>,
                                          NodeId<float>, NodeId<float>, NodeId<float>,
                                          NodeId<float>, NodeId<float>, NodeId<float>,
                                          NodeId<float>, NodeId<float>, NodeId<float>, float);
template NodeId<double> fusion_head<double>(Tape<double>&, std::optional<NodeId<double>>,
                                            std::optional<NodeId<double>>, NodeId<double>,
                                            NodeId<double>, NodeId<double>, NodeId<double>,
                                            NodeId<double>, NodeId<double>, NodeId<double>,
                                            NodeId<double>, NodeId<double>, NodeId<double>,
                                            double);
template ForwardResult<float> model_forward<float>(Tape<float>&, const ModelParams<float>&,
                                                   const ModelInputs<float>&, const ModelConfig&,
                                                   Mode, bool);
template ForwardResult<double> model_forward<double>(Tape<double>&, const ModelParams<double>&,
                                                     const ModelInputs<double>&,
                                                     const ModelConfig&, Mode, bool);

} // namespace congestnet
