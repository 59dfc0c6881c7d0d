#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "congestnet/circuit.hpp"
#include "congestnet/graph.hpp"
#include "congestnet/model.hpp"
#include "congestnet/rng.hpp"
#include "congestnet/tape.hpp"

using namespace congestnet;

namespace {

Tensor<double> rand_tensor(Rng& rng, std::vector<int> shape, double lo = -1.0,
                           double hi = 1.0) {
    Tensor<double> t(std::move(shape));
    for (auto& v : t.data) v = rng.uniform(lo, hi);
    return t;
}

bool close(double a, double b, double tol = 1e-9) {
    return std::abs(a - b) <= tol * std::max({1.0, std::abs(a), std::abs(b)});
}

double lrelu(double x, double s) { return x >= 0 ? x : s * x; }
double ssp(double x) { return std::log(0.5 * std::exp(x) + 0.5); }

ModelConfig small_cfg() {
    ModelConfig cfg;
    cfg.l = 2;
    cfg.d = 8;
    cfg.heads = 2;
    cfg.K = 4;
    cfg.cutoff = 2.0;
    cfg.fourier_bands = 1;
    cfg.out_mlp_width = 4;
    return cfg;
}

} // namespace

TEST_CASE("init_params: names, order, shapes, Glorot bounds") {
    ModelConfig cfg = small_cfg();
    cfg.out_mlp_width = 5;
    const auto p = init_params<double>(cfg, 42);

    const std::vector<std::pair<std::string, std::vector<int>>> want = {
        {"gat.0.W", {7, 8}},       {"gat.0.b", {8}},
        {"gat.0.a_src", {2, 4}},   {"gat.0.a_dst", {2, 4}},
        {"gat.1.W", {8, 8}},       {"gat.1.b", {8}},
        {"gat.1.a_src", {2, 4}},   {"gat.1.a_dst", {2, 4}},
        {"cf.0.W_in", {9, 8}},     {"cf.0.b_in", {8}},
        {"cf.0.filt.W1", {4, 8}},  {"cf.0.filt.b1", {8}},
        {"cf.0.filt.W2", {8, 8}},  {"cf.0.filt.b2", {8}},
        {"cf.0.W_out", {8, 8}},    {"cf.0.b_out", {8}},
        {"cf.0.W_res", {9, 8}},    {"cf.1.W_in", {8, 8}},
        {"cf.1.b_in", {8}},        {"cf.1.filt.W1", {4, 8}},
        {"cf.1.filt.b1", {8}},     {"cf.1.filt.W2", {8, 8}},
        {"cf.1.filt.b2", {8}},     {"cf.1.W_out", {8, 8}},
        {"cf.1.b_out", {8}},       {"pe.W1", {6, 8}},
        {"pe.b1", {8}},            {"pe.W2", {8, 8}},
        {"pe.b2", {8}},            {"fuse_t.W", {15, 8}},
        {"fuse_t.b", {8}},         {"fuse_g.W", {17, 8}},
        {"fuse_g.b", {8}},         {"out.W1", {16, 5}},
        {"out.b1", {5}},           {"out.W2", {5, 1}},
        {"out.b2", {1}},
    };
    REQUIRE(p.items.size() == want.size());
    for (size_t i = 0; i < want.size(); ++i) {
        CHECK(p.items[i].first == want[i].first);
        CHECK(p.items[i].second.shape == want[i].second);
    }

    for (const auto& [name, t] : p.items) {
        if (is_bias_name(name)) {
            for (double v : t.data) CHECK(v == 0.0);
            continue;
        }
        double bound;
        if (name.find("a_src") != std::string::npos || name.find("a_dst") != std::string::npos)
            bound = std::sqrt(6.0 / (t.shape[1] + 1));
        else
            bound = std::sqrt(6.0 / (t.shape[0] + t.shape[1]));
        bool any_nonzero = false;
        for (double v : t.data) {
            CHECK(std::abs(v) <= bound);
            if (v != 0.0) any_nonzero = true;
        }
        CHECK(any_nonzero);
    }

    SUBCASE("deterministic per seed, divergent across seeds") {
        const auto q = init_params<double>(cfg, 42);
        REQUIRE(q.items.size() == p.items.size());
        for (size_t i = 0; i < p.items.size(); ++i)
            CHECK(p.items[i].second.data == q.items[i].second.data);
        const auto r = init_params<double>(cfg, 43);
        bool differs = false;
        for (size_t i = 0; i < p.items.size(); ++i)
            if (p.items[i].second.data != r.items[i].second.data) differs = true;
        CHECK(differs);
    }
}

TEST_CASE("config validation and mode parsing") {
    ModelConfig cfg = small_cfg();
    CHECK_NOTHROW(cfg.validate());
    cfg.heads = 3; // 8 % 3 != 0
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = small_cfg();
    cfg.K = 1;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = small_cfg();
    cfg.cutoff = 0.0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = small_cfg();
    cfg.l = 0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);

    CHECK(mode_from_string("full") == Mode::full);
    CHECK(mode_from_string("topo") == Mode::topo_only);
    CHECK(mode_from_string("geo_only") == Mode::geo_only);
    CHECK(mode_from_string(mode_to_string(Mode::topo_only)) == Mode::topo_only);
    CHECK(mode_from_string(mode_to_string(Mode::geo_only)) == Mode::geo_only);
    CHECK_THROWS_AS(mode_from_string("both"), std::invalid_argument);

    CHECK(is_bias_name("gat.0.b"));
    CHECK(is_bias_name("cf.0.b_in"));
    CHECK(is_bias_name("out.b2"));
    CHECK(is_bias_name("b"));
    CHECK(!is_bias_name("cf.0.filt.W1"));
    CHECK(!is_bias_name("fuse_t.W"));
    CHECK(!is_bias_name("gat.0.a_src"));
}

TEST_CASE("feature norm and target stats") {
    MultiViewGraph a, b;
    a.x_t = Tensor<double>({2, 1}, {1.0, 3.0});
    b.x_t = Tensor<double>({2, 1}, {5.0, 7.0});
    const FeatureNorm norm = compute_feature_norm({&a, &b});
    CHECK(norm.mean[0] == doctest::Approx(4.0));
    CHECK(norm.stdev[0] == doctest::Approx(std::sqrt(5.0))); // population over {1,3,5,7}

    MultiViewGraph c;
    c.x_t = Tensor<double>({3, 1}, {2.0, 2.0, 2.0});
    const FeatureNorm flat = compute_feature_norm({&c});
    CHECK(flat.stdev[0] == 1e-8); // clamped

    const TargetStats s = target_stats({1.0, 2.0, 3.0});
    CHECK(s.mean == doctest::Approx(2.0));
    CHECK(s.stdev == doctest::Approx(std::sqrt(2.0 / 3.0)));
    const auto z = standardize({1.0, 2.0, 3.0}, s);
    CHECK(z[1] == doctest::Approx(0.0));
    CHECK(z[2] == doctest::Approx(1.0 / std::sqrt(2.0 / 3.0)));
    const TargetStats flat_t = target_stats({4.0, 4.0});
    CHECK(flat_t.stdev == 1e-12);
}

TEST_CASE("fourier features") {
    const Tensor<double> origin({1, 2}, {0.0, 0.0});
    const Tensor<double> f0 = fourier_features(origin, 2);
    CHECK(f0.shape == std::vector<int>{1, 10});
    const std::vector<double> want = {0, 0, 0, 1, 0, 1, 0, 1, 0, 1};
    for (int j = 0; j < 10; ++j) CHECK(f0.at(0, j) == doctest::Approx(want[j]));

    SUBCASE("recomputation oracle") {
        const double x = 0.3, y = 0.8;
        const Tensor<double> f = fourier_features(Tensor<double>({1, 2}, {x, y}), 3);
        CHECK(f.shape == std::vector<int>{1, 14});
        CHECK(f.at(0, 0) == x);
        CHECK(f.at(0, 1) == y);
        int c = 2;
        for (int b = 0; b < 3; ++b) {
            const double w = M_PI * std::pow(2.0, b);
            CHECK(close(f.at(0, c++), std::sin(w * x)));
            CHECK(close(f.at(0, c++), std::cos(w * x)));
            CHECK(close(f.at(0, c++), std::sin(w * y)));
            CHECK(close(f.at(0, c++), std::cos(w * y)));
        }
    }
    SUBCASE("domain checks") {
        CHECK_THROWS_AS(fourier_features(Tensor<double>({1, 2}, {-0.01, 0.5}), 1),
                        std::invalid_argument);
        CHECK_THROWS_AS(fourier_features(Tensor<double>({1, 2}, {0.5, 1.01}), 1),
                        std::invalid_argument);
        CHECK_NOTHROW(fourier_features(Tensor<double>({1, 2}, {1.0000005, 0.0}), 1));
        CHECK_THROWS_AS(fourier_features(Tensor<double>({2, 1}, {0.0, 0.0}), 1),
                        std::invalid_argument);
    }
}

TEST_CASE("rbf expansion") {
    const Tensor<double> e = rbf_expand({0.0, 2.0}, 4, 2.0);
    CHECK(e.shape == std::vector<int>{2, 4});
    CHECK(e.at(0, 0) == doctest::Approx(1.0)); // d=0 sits on mu_0
    CHECK(e.at(1, 3) == doctest::Approx(1.0)); // d=cutoff sits on mu_{K-1}

    // K=3, cutoff=2: gamma=1, mu={0,1,2}; d=1 is exactly mu_1
    const Tensor<double> m = rbf_expand({1.0}, 3, 2.0);
    CHECK(m.at(0, 1) == doctest::Approx(1.0));
    CHECK(m.at(0, 0) == doctest::Approx(std::exp(-1.0)));
    CHECK(m.at(0, 2) == doctest::Approx(std::exp(-1.0)));

    SUBCASE("beyond-cutoff distances clamp to the cutoff row") {
        const Tensor<double> far = rbf_expand({5.0}, 3, 2.0);
        const Tensor<double> at = rbf_expand({2.0}, 3, 2.0);
        for (int k = 0; k < 3; ++k) CHECK(far.at(0, k) == at.at(0, k));
    }
    SUBCASE("partition quality: some basis is always >= e^{-1/4}") {
        for (int i = 0; i <= 50; ++i) {
            const double d = 2.4 * i / 50.0;
            const Tensor<double> row = rbf_expand({d}, 5, 2.0);
            double best = 0.0;
            for (int k = 0; k < 5; ++k) best = std::max(best, row.at(0, k));
            CHECK(best >= std::exp(-0.25) - 1e-12);
        }
    }
    CHECK_THROWS_AS(rbf_expand({1.0}, 1, 2.0), std::invalid_argument);
    CHECK_THROWS_AS(rbf_expand({1.0}, 4, 0.0), std::invalid_argument);
}

TEST_CASE("attention edges append one self-edge per node") {
    Graph topo;
    topo.n_nodes = 3;
    topo.edges = {{0, 1}, {2, 0}};
    std::vector<int> src, dst;
    attention_edges(topo, src, dst);
    CHECK(src == std::vector<int>{0, 2, 0, 1, 2});
    CHECK(dst == std::vector<int>{1, 0, 0, 1, 2});
}

TEST_CASE("prepare_inputs normalizes features and keeps raw coords") {
    const auto [nl, pl] = generate_synthetic(11, 40, 0.6, 10.0);
    const GridSpec grid = make_grid(pl.die, 4, 4);
    const MultiViewGraph mv = assemble_multiview(nl, pl, grid, 8);
    const FeatureNorm norm = compute_feature_norm({&mv});
    ModelConfig cfg = small_cfg();
    const auto in = prepare_inputs<double>(mv, norm, cfg);

    REQUIRE(in.n == 40);
    for (int i = 0; i < in.n; ++i)
        for (int j = 0; j < 7; ++j) {
            const double want = (mv.x_t.at(i, j) - norm.mean[j]) / norm.stdev[j];
            CHECK(close(in.x_t.at(i, j), want));
            CHECK(in.x_g.at(i, j) == in.x_t.at(i, j));
        }
    for (int i = 0; i < in.n; ++i) {
        CHECK(in.x_g.at(i, 7) == mv.coords.at(i, 0));
        CHECK(in.x_g.at(i, 8) == mv.coords.at(i, 1));
    }
    CHECK(in.fourier.shape == std::vector<int>{in.n, cfg.fourier_width()});
    CHECK(in.rbf.shape ==
          std::vector<int>{static_cast<int>(mv.geo.edges.size()), cfg.K});
    CHECK(in.att_src.size() == mv.topo.edges.size() + 40);
    CHECK(in.geo_src.size() == mv.geo.edges.size());
    // normalized columns have pooled mean ~0
    for (int j = 0; j < 7; ++j) {
        double s = 0.0;
        for (int i = 0; i < in.n; ++i) s += in.x_t.at(i, j);
        CHECK(std::abs(s / in.n) < 1e-6);
    }
}

TEST_CASE("gat_layer matches a dense softmax oracle") {
    const int n = 4, f = 3, d = 4, heads = 2, dh = 2;
    const double slope = 0.2;
    Rng rng(77);
    const Tensor<double> x = rand_tensor(rng, {n, f});
    const Tensor<double> W = rand_tensor(rng, {f, d});
    const Tensor<double> b = rand_tensor(rng, {d});
    const Tensor<double> a_src = rand_tensor(rng, {heads, dh});
    const Tensor<double> a_dst = rand_tensor(rng, {heads, dh});

    Graph topo;
    topo.n_nodes = n;
    topo.edges = {{0, 1}, {0, 2}, {1, 0}, {1, 2}, {2, 1}}; // node 3 isolated
    std::vector<int> src, dst;
    attention_edges(topo, src, dst);
    const int e = static_cast<int>(src.size());

    Tape<double> tape;
    const auto hx = tape.leaf(x);
    NodeId<double> alpha = -1;
    const auto out = gat_layer(tape, hx, src, dst, n, tape.leaf(W, true), tape.leaf(b, true),
                               tape.leaf(a_src, true), tape.leaf(a_dst, true), heads, slope,
                               /*last=*/false, &alpha);

    // oracle with plain loops
    std::vector<std::vector<double>> z(n, std::vector<double>(d, 0.0));
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < d; ++j) {
            double s = b.data[j];
            for (int k = 0; k < f; ++k) s += x.at(i, k) * W.at(k, j);
            z[i][j] = s;
        }
    std::vector<std::vector<double>> score(e, std::vector<double>(heads, 0.0));
    for (int k = 0; k < e; ++k)
        for (int h = 0; h < heads; ++h) {
            double ssc = 0.0, dsc = 0.0;
            for (int q = 0; q < dh; ++q) {
                ssc += z[src[k]][h * dh + q] * a_src.at(h, q);
                dsc += z[dst[k]][h * dh + q] * a_dst.at(h, q);
            }
            score[k][h] = lrelu(ssc + dsc, slope);
        }
    std::vector<std::vector<double>> aref(e, std::vector<double>(heads, 0.0));
    for (int v = 0; v < n; ++v)
        for (int h = 0; h < heads; ++h) {
            double denom = 0.0;
            for (int k = 0; k < e; ++k)
                if (dst[k] == v) denom += std::exp(score[k][h]);
            for (int k = 0; k < e; ++k)
                if (dst[k] == v) aref[k][h] = std::exp(score[k][h]) / denom;
        }
    std::vector<std::vector<double>> oref(n, std::vector<double>(d, 0.0));
    for (int k = 0; k < e; ++k)
        for (int h = 0; h < heads; ++h)
            for (int q = 0; q < dh; ++q)
                oref[dst[k]][h * dh + q] += aref[k][h] * z[src[k]][h * dh + q];
    for (auto& row : oref)
        for (auto& v : row) v = lrelu(v, slope);

    const Tensor<double>& got = tape.value(out);
    REQUIRE(got.shape == std::vector<int>{n, d});
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < d; ++j) CHECK(close(got.at(i, j), oref[i][j]));

    const Tensor<double>& av = tape.value(alpha);
    REQUIRE(av.shape == std::vector<int>{e, heads});
    for (int k = 0; k < e; ++k)
        for (int h = 0; h < heads; ++h) CHECK(close(av.at(k, h), aref[k][h]));

    SUBCASE("attention over each destination sums to one") {
        for (int v = 0; v < n; ++v)
            for (int h = 0; h < heads; ++h) {
                double s = 0.0;
                for (int k = 0; k < e; ++k)
                    if (dst[k] == v) s += av.at(k, h);
                CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
            }
    }
    SUBCASE("an isolated node attends only to itself") {
        // its single (self) attention row carries weight exactly 1
        for (int k = 0; k < e; ++k)
            if (dst[k] == 3) {
                CHECK(src[k] == 3);
                for (int h = 0; h < heads; ++h) CHECK(av.at(k, h) == 1.0);
            }
        // so its output is just (the activation of) its own z row
        for (int j = 0; j < d; ++j) CHECK(close(got.at(3, j), lrelu(z[3][j], slope)));
    }
    SUBCASE("last layer skips the output activation") {
        Tape<double> t2;
        const auto out2 = gat_layer(t2, t2.leaf(x), src, dst, n, t2.leaf(W), t2.leaf(b),
                                    t2.leaf(a_src), t2.leaf(a_dst), heads, slope,
                                    /*last=*/true, nullptr);
        std::vector<std::vector<double>> raw(n, std::vector<double>(d, 0.0));
        for (int k = 0; k < e; ++k)
            for (int h = 0; h < heads; ++h)
                for (int q = 0; q < dh; ++q)
                    raw[dst[k]][h * dh + q] += aref[k][h] * z[src[k]][h * dh + q];
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < d; ++j) CHECK(close(t2.value(out2).at(i, j), raw[i][j]));
    }
}

TEST_CASE("cfconv_layer matches a message-passing loop oracle") {
    const int n = 4, f = 3, d = 5;
    Rng rng(123);
    const Tensor<double> h = rand_tensor(rng, {n, f});
    const Tensor<double> W_in = rand_tensor(rng, {f, d});
    const Tensor<double> b_in = rand_tensor(rng, {d});
    const Tensor<double> W_out = rand_tensor(rng, {d, d});
    const Tensor<double> b_out = rand_tensor(rng, {d});
    const Tensor<double> W_res = rand_tensor(rng, {f, d});
    const Tensor<double> pe = rand_tensor(rng, {n, d});

    const std::vector<int> gsrc = {0, 1, 1, 2}; // node 3 has no incident edges
    const std::vector<int> gdst = {1, 0, 2, 1};
    const int e = 4;
    const Tensor<double> g = rand_tensor(rng, {e, d});

    Tape<double> tape;
    const auto out = cfconv_layer(tape, tape.leaf(h), gsrc, gdst, n, tape.leaf(g),
                                  tape.leaf(W_in), tape.leaf(b_in), tape.leaf(W_out),
                                  tape.leaf(b_out), std::optional<NodeId<double>>(tape.leaf(W_res)),
                                  std::optional<NodeId<double>>(tape.leaf(pe)));

    std::vector<std::vector<double>> m(n, std::vector<double>(d, 0.0));
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < d; ++j) {
            double s = b_in.data[j] + pe.at(i, j);
            for (int k = 0; k < f; ++k) s += h.at(i, k) * W_in.at(k, j);
            m[i][j] = s;
        }
    std::vector<std::vector<double>> agg(n, std::vector<double>(d, 0.0));
    for (int k = 0; k < e; ++k)
        for (int j = 0; j < d; ++j) agg[gdst[k]][j] += m[gsrc[k]][j] * g.at(k, j);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < d; ++j) {
            double pre = b_out.data[j], skip = 0.0;
            for (int k = 0; k < d; ++k) pre += agg[i][k] * W_out.at(k, j);
            for (int k = 0; k < f; ++k) skip += h.at(i, k) * W_res.at(k, j);
            const double want = ssp(pre + skip);
            CHECK(close(tape.value(out).at(i, j), want));
        }

    SUBCASE("a node with no incoming edges still gets bias + skip") {
        // row 3 aggregates nothing: out = ssp(b_out + h_3 W_res), independent of g
        for (int j = 0; j < d; ++j) {
            double skip = 0.0;
            for (int k = 0; k < f; ++k) skip += h.at(3, k) * W_res.at(k, j);
            CHECK(close(tape.value(out).at(3, j), ssp(b_out.data[j] + skip)));
        }
    }
    SUBCASE("identity skip without W_res needs square features") {
        Tape<double> t2;
        Rng r2(5);
        const Tensor<double> hs = rand_tensor(r2, {n, d});
        const Tensor<double> Wi = rand_tensor(r2, {d, d});
        const auto o2 = cfconv_layer(t2, t2.leaf(hs), gsrc, gdst, n, t2.leaf(g), t2.leaf(Wi),
                                     t2.leaf(b_in), t2.leaf(W_out), t2.leaf(b_out),
                                     std::nullopt, std::nullopt);
        // node 3: out = ssp(b_out + h_3) exactly (no messages, identity skip)
        for (int j = 0; j < d; ++j)
            CHECK(close(t2.value(o2).at(3, j), ssp(b_out.data[j] + hs.at(3, j))));
    }
}

TEST_CASE("positional encoding recomputation") {
    const int n = 3, fw = 6, d = 4;
    const double slope = 0.2;
    Rng rng(9);
    const Tensor<double> fo = rand_tensor(rng, {n, fw});
    const Tensor<double> W1 = rand_tensor(rng, {fw, d});
    const Tensor<double> b1 = rand_tensor(rng, {d});
    const Tensor<double> W2 = rand_tensor(rng, {d, d});
    const Tensor<double> b2 = rand_tensor(rng, {d});
    Tape<double> tape;
    const auto out = positional_encoding(tape, tape.leaf(fo), tape.leaf(W1), tape.leaf(b1),
                                         tape.leaf(W2), tape.leaf(b2), slope);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < d; ++j) {
            std::vector<double> hid(d, 0.0);
            for (int q = 0; q < d; ++q) {
                double s = b1.data[q];
                for (int k = 0; k < fw; ++k) s += fo.at(i, k) * W1.at(k, q);
                hid[q] = lrelu(s, slope);
            }
            double want = b2.data[j];
            for (int q = 0; q < d; ++q) want += hid[q] * W2.at(q, j);
            CHECK(close(tape.value(out).at(i, j), want));
        }
}

TEST_CASE("fusion head") {
    const int n = 3, d = 2, ft = 3, fg = 4, w = 4;
    const double slope = 0.2;
    Rng rng(31);
    const Tensor<double> h_t = rand_tensor(rng, {n, d});
    const Tensor<double> h_g = rand_tensor(rng, {n, d});
    const Tensor<double> x_t = rand_tensor(rng, {n, ft});
    const Tensor<double> x_g = rand_tensor(rng, {n, fg});
    const Tensor<double> W_t = rand_tensor(rng, {d + ft, d});
    const Tensor<double> b_t = rand_tensor(rng, {d});
    const Tensor<double> W_g = rand_tensor(rng, {d + fg, d});
    const Tensor<double> b_g = rand_tensor(rng, {d});
    const Tensor<double> W1 = rand_tensor(rng, {2 * d, w});
    const Tensor<double> b1 = rand_tensor(rng, {w});
    const Tensor<double> W2 = rand_tensor(rng, {w, 1});
    const Tensor<double> b2 = rand_tensor(rng, {1});

    const auto oracle = [&](bool with_t, bool with_g) {
        std::vector<double> y(n, 0.0);
        for (int i = 0; i < n; ++i) {
            std::vector<double> zt(d, 0.0), zg(d, 0.0);
            if (with_t)
                for (int j = 0; j < d; ++j) {
                    double s = b_t.data[j];
                    for (int k = 0; k < d; ++k) s += h_t.at(i, k) * W_t.at(k, j);
                    for (int k = 0; k < ft; ++k) s += x_t.at(i, k) * W_t.at(d + k, j);
                    zt[j] = lrelu(s, slope);
                }
            if (with_g)
                for (int j = 0; j < d; ++j) {
                    double s = b_g.data[j];
                    for (int k = 0; k < d; ++k) s += h_g.at(i, k) * W_g.at(k, j);
                    for (int k = 0; k < fg; ++k) s += x_g.at(i, k) * W_g.at(d + k, j);
                    zg[j] = lrelu(s, slope);
                }
            std::vector<double> hid(w, 0.0);
            for (int q = 0; q < w; ++q) {
                double s = b1.data[q];
                for (int k = 0; k < d; ++k) s += zt[k] * W1.at(k, q);
                for (int k = 0; k < d; ++k) s += zg[k] * W1.at(d + k, q);
                hid[q] = lrelu(s, slope);
            }
            double out = b2.data[0];
            for (int q = 0; q < w; ++q) out += hid[q] * W2.at(q, 0);
            y[i] = out;
        }
        return y;
    };

    const auto run = [&](bool with_t, bool with_g) {
        Tape<double> tape;
        const auto id = fusion_head(
            tape, with_t ? std::optional<NodeId<double>>(tape.leaf(h_t)) : std::nullopt,
            with_g ? std::optional<NodeId<double>>(tape.leaf(h_g)) : std::nullopt,
            tape.leaf(x_t), tape.leaf(x_g), with_t ? tape.leaf(W_t) : -1,
            with_t ? tape.leaf(b_t) : -1, with_g ? tape.leaf(W_g) : -1,
            with_g ? tape.leaf(b_g) : -1, tape.leaf(W1), tape.leaf(b1), tape.leaf(W2),
            tape.leaf(b2), slope);
        REQUIRE(tape.value(id).shape == std::vector<int>{n, 1});
        std::vector<double> y(n);
        for (int i = 0; i < n; ++i) y[i] = tape.value(id).at(i, 0);
        return y;
    };

    SUBCASE("recomputation oracle, both pathways") {
        const auto got = run(true, true), want = oracle(true, true);
        for (int i = 0; i < n; ++i) CHECK(close(got[i], want[i]));
    }
    SUBCASE("ablated pathways feed zero blocks") {
        auto got = run(true, false);
        auto want = oracle(true, false);
        for (int i = 0; i < n; ++i) CHECK(close(got[i], want[i]));
        got = run(false, true);
        want = oracle(false, true);
        for (int i = 0; i < n; ++i) CHECK(close(got[i], want[i]));
    }
    SUBCASE("zero output weight collapses to its bias") {
        Tape<double> tape;
        const auto id = fusion_head(tape, std::optional<NodeId<double>>(tape.leaf(h_t)),
                                    std::optional<NodeId<double>>(tape.leaf(h_g)),
                                    tape.leaf(x_t), tape.leaf(x_g), tape.leaf(W_t),
                                    tape.leaf(b_t), tape.leaf(W_g), tape.leaf(b_g),
                                    tape.leaf(W1), tape.leaf(b1),
                                    tape.leaf(Tensor<double>({w, 1})),
                                    tape.leaf(Tensor<double>({1}, {0.7})), slope);
        for (int i = 0; i < n; ++i) CHECK(tape.value(id).at(i, 0) == 0.7);
    }
}

namespace {

struct PreparedDesign {
    MultiViewGraph mv;
    FeatureNorm norm;
    ModelConfig cfg;
    ModelInputs<double> in;
};

PreparedDesign prepared(uint64_t seed, int cells) {
    PreparedDesign p;
    const auto [nl, pl] = generate_synthetic(seed, cells, 0.6, 10.0);
    const GridSpec grid = make_grid(pl.die, 4, 4);
    p.mv = assemble_multiview(nl, pl, grid, 8);
    p.norm = compute_feature_norm({&p.mv});
    p.cfg = small_cfg();
    p.in = prepare_inputs<double>(p.mv, p.norm, p.cfg);
    return p;
}

} // namespace

TEST_CASE("model_forward: shapes, finiteness, per-mode parameter surface") {
    const PreparedDesign p = prepared(61, 30);
    const auto params = init_params<double>(p.cfg, 3);

    for (const Mode mode : {Mode::full, Mode::topo_only, Mode::geo_only}) {
        Tape<double> tape;
        const auto fwd = model_forward(tape, params, p.in, p.cfg, mode, true);
        const Tensor<double>& y = tape.value(fwd.yhat);
        REQUIRE(y.shape == std::vector<int>{30, 1});
        for (double v : y.data) CHECK(std::isfinite(v));

        const auto touches = [&](const std::string& prefix) {
            for (const auto& [name, id] : fwd.param_ids)
                if (name.rfind(prefix, 0) == 0) return true;
            return false;
        };
        if (mode == Mode::topo_only) {
            CHECK(!touches("cf."));
            CHECK(!touches("pe."));
            CHECK(!touches("fuse_g."));
            CHECK(touches("gat."));
            CHECK(touches("fuse_t."));
            CHECK(fwd.alphas.size() == static_cast<size_t>(p.cfg.l));
        }
        if (mode == Mode::geo_only) {
            CHECK(!touches("gat."));
            CHECK(!touches("fuse_t."));
            CHECK(touches("cf."));
            CHECK(touches("pe."));
            CHECK(touches("fuse_g."));
            CHECK(fwd.alphas.empty());
        }
        if (mode == Mode::full) {
            CHECK(fwd.param_ids.size() == params.items.size()); // every tensor used
        }
        CHECK(touches("out."));
    }
}

TEST_CASE("model_forward is permutation equivariant") {
    const PreparedDesign p = prepared(67, 36);
    const int n = p.in.n;
    Rng rng(99);
    std::vector<int> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    for (int i = n - 1; i > 0; --i)
        std::swap(perm[i], perm[rng.uniform_int(0, i)]);

    // relabel every per-node row and endpoint through perm
    MultiViewGraph mv2;
    mv2.x_t = Tensor<double>(p.mv.x_t.shape);
    mv2.x_g = Tensor<double>(p.mv.x_g.shape);
    mv2.coords = Tensor<double>(p.mv.coords.shape);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < 7; ++j) mv2.x_t.at(perm[i], j) = p.mv.x_t.at(i, j);
        for (int j = 0; j < 9; ++j) mv2.x_g.at(perm[i], j) = p.mv.x_g.at(i, j);
        for (int j = 0; j < 2; ++j) mv2.coords.at(perm[i], j) = p.mv.coords.at(i, j);
    }
    mv2.topo.n_nodes = mv2.geo.n_nodes = n;
    for (const auto& [u, v] : p.mv.topo.edges) mv2.topo.edges.push_back({perm[u], perm[v]});
    for (const auto& [u, v] : p.mv.geo.edges) mv2.geo.edges.push_back({perm[u], perm[v]});
    mv2.geo.edge_attr = p.mv.geo.edge_attr;

    const auto in2 = prepare_inputs<double>(mv2, p.norm, p.cfg);
    const auto params = init_params<double>(p.cfg, 13);
    for (const Mode mode : {Mode::full, Mode::topo_only, Mode::geo_only}) {
        Tape<double> t1, t2;
        const auto f1 = model_forward(t1, params, p.in, p.cfg, mode, false);
        const auto f2 = model_forward(t2, params, in2, p.cfg, mode, false);
        const Tensor<double>&y1 = t1.value(f1.yhat), &y2 = t2.value(f2.yhat);
        for (int i = 0; i < n; ++i)
            CHECK(std::abs(y2.at(perm[i], 0) - y1.at(i, 0)) <= 1e-9);
    }
}

TEST_CASE("view separation at the input level is bitwise") {
    const PreparedDesign p = prepared(71, 32);
    const auto params = init_params<double>(p.cfg, 21);

    SUBCASE("topo_only ignores every geometry input") {
        ModelInputs<double> other = p.in;
        for (auto& v : other.x_g.data) v += 0.37;
        for (auto& v : other.fourier.data) v = 0.25;
        for (auto& v : other.rbf.data) v *= 0.5;
        std::reverse(other.geo_src.begin(), other.geo_src.end()); // rewire geometry
        Tape<double> t1, t2;
        const auto f1 = model_forward(t1, params, p.in, p.cfg, Mode::topo_only, false);
        const auto f2 = model_forward(t2, params, other, p.cfg, Mode::topo_only, false);
        CHECK(t1.value(f1.yhat).data == t2.value(f2.yhat).data);
    }
    SUBCASE("geo_only ignores every topology input") {
        ModelInputs<double> other = p.in;
        for (auto& v : other.x_t.data) v -= 1.5;
        std::rotate(other.att_src.begin(), other.att_src.begin() + 3, other.att_src.end());
        std::rotate(other.att_dst.begin(), other.att_dst.begin() + 5, other.att_dst.end());
        Tape<double> t1, t2;
        const auto f1 = model_forward(t1, params, p.in, p.cfg, Mode::geo_only, false);
        const auto f2 = model_forward(t2, params, other, p.cfg, Mode::geo_only, false);
        CHECK(t1.value(f1.yhat).data == t2.value(f2.yhat).data);
    }
}
