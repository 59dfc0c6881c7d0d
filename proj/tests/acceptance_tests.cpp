// Acceptance gate: one pass/fail line per criterion, nonzero exit on any
// failure. Heavier end-to-end checks (6, 8) drive the CLI binary.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <unistd.h>
#include <vector>

#include <nlohmann/json.hpp>

#include "congestnet/circuit.hpp"
#include "congestnet/delaunay.hpp"
#include "congestnet/graph.hpp"
#include "congestnet/metrics.hpp"
#include "congestnet/model.hpp"
#include "congestnet/rng.hpp"
#include "congestnet/tape.hpp"
#include "congestnet/train.hpp"

using namespace congestnet;
namespace fs = std::filesystem;
using json = nlohmann::json;
using clock_type = std::chrono::steady_clock;

namespace {

double seconds_since(clock_type::time_point t0) {
    return std::chrono::duration<double>(clock_type::now() - t0).count();
}

struct Outcome {
    bool ok = false;
    std::string detail;
};

int run_cli(const std::string& args) {
    const std::string cmd = std::string(CONGESTNET_BIN_PATH) + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    if (status == -1) return -1;
    return WIFEXITED(status) ? WEXITSTATUS(status) : -2;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in.good()) throw std::runtime_error("cannot read " + p.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.4g", v);
    return buf;
}

// ---------------------------------------------------------------------------
// Criterion 1 — full-model gradients against central differences
// ---------------------------------------------------------------------------

Outcome criterion1() {
    const auto t0 = clock_type::now();
    const auto [nl, pl] = generate_synthetic(3, 6, 0.5, 4.0);
    const GridSpec grid = make_grid(pl.die, 2, 2);
    const MultiViewGraph mvg = assemble_multiview(nl, pl, grid, 16);
    const FeatureNorm norm = compute_feature_norm({&mvg});

    ModelConfig cfg;
    cfg.l = 1;
    cfg.d = 4;
    cfg.heads = 2;
    cfg.K = 4;
    cfg.cutoff = 8.0 * grid.tile_w;
    cfg.out_mlp_width = 8;
    const auto in = prepare_inputs<double>(mvg, norm, cfg);

    const LabelGrid labels = rudy_label_grid(nl, pl, grid);
    const std::vector<double> raw = sample_labels_at_cells(labels, nl, pl);
    const std::vector<double> stdz = standardize(raw, target_stats(raw));
    Tensor<double> target({static_cast<int>(stdz.size()), 1});
    for (size_t i = 0; i < stdz.size(); ++i) target.data[i] = stdz[i];

    ModelParams<double> params = init_params<double>(cfg, 1);
    const auto eval_loss = [&](const ModelParams<double>& p) {
        Tape<double> tape;
        const auto fwd = model_forward(tape, p, in, cfg, Mode::full, false);
        return tape.value(mse_loss(tape, fwd.yhat, target)).data[0];
    };

    // analytic gradients for every tensor from one taped pass
    Tape<double> tape;
    const auto fwd = model_forward(tape, params, in, cfg, Mode::full, true);
    tape.backward(mse_loss(tape, fwd.yhat, target));

    const double eps = 1e-5;
    double max_err = 0.0;
    std::string worst;
    for (const auto& [name, id] : fwd.param_ids) {
        const std::vector<double>& analytic = tape.grad(id);
        Tensor<double>& theta = params.find(name);
        for (size_t i = 0; i < theta.data.size(); ++i) {
            const double keep = theta.data[i];
            theta.data[i] = keep + eps;
            const double lp = eval_loss(params);
            theta.data[i] = keep - eps;
            const double lm = eval_loss(params);
            theta.data[i] = keep;
            const double c = (lp - lm) / (2.0 * eps);
            const double err = std::abs(analytic[i] - c) /
                               std::max({1.0, std::abs(analytic[i]), std::abs(c)});
            if (err > max_err) {
                max_err = err;
                worst = name;
            }
        }
    }
    const double dt = seconds_since(t0);
    Outcome out;
    out.ok = max_err <= 1e-4 && dt < 30.0;
    out.detail = "max rel err " + fmt(max_err) + " at " + worst + ", " + fmt(dt) + "s";
    return out;
}

// ---------------------------------------------------------------------------
// Criterion 2 — Delaunay empty-circumcircle + Euler counts
// ---------------------------------------------------------------------------

Outcome criterion2() {
    const auto t0 = clock_type::now();
    Rng rng(2025);
    int worst_set = -1;
    double worst_excess = 0.0;
    bool euler_ok = true;
    for (int trial = 0; trial < 200; ++trial) {
        const int n = static_cast<int>(rng.uniform_int(8, 64));
        const double span = rng.uniform(1.0, 50.0);
        std::vector<std::pair<double, double>> pts(static_cast<size_t>(n));
        for (auto& [x, y] : pts) {
            x = rng.uniform(0.0, span);
            y = rng.uniform(0.0, span);
        }
        const auto tris = delaunay_triangulate(pts);
        const double tol = 1e-9 * span * span;
        for (const Triangle& t : tris)
            for (int p = 0; p < n; ++p) {
                if (p == t.a || p == t.b || p == t.c) continue;
                const double det = incircle_det(pts[t.a], pts[t.b], pts[t.c], pts[p]);
                if (det > tol && det - tol > worst_excess) {
                    worst_excess = det - tol;
                    worst_set = trial;
                }
            }
        const int T = static_cast<int>(tris.size());
        const int h = static_cast<int>(convex_hull_indices(pts).size());
        const int E = static_cast<int>(triangulation_edges(tris).size());
        if (T != 2 * n - h - 2 || 2 * E != 3 * T + h) {
            euler_ok = false;
            worst_set = trial;
        }
    }
    const double dt = seconds_since(t0);
    Outcome out;
    out.ok = worst_set < 0 && euler_ok && dt < 5.0;
    out.detail = out.ok ? "200 sets clean, " + fmt(dt) + "s"
                        : "violation in set " + std::to_string(worst_set);
    return out;
}

// ---------------------------------------------------------------------------
// Criterion 3 — correlation metrics against naive oracles
// ---------------------------------------------------------------------------

double pearson_oracle(const std::vector<double>& a, const std::vector<double>& b) {
    const size_t n = a.size();
    double ma = 0, mb = 0;
    for (size_t i = 0; i < n; ++i) {
        ma += a[i];
        mb += b[i];
    }
    ma /= static_cast<double>(n);
    mb /= static_cast<double>(n);
    double sab = 0, saa = 0, sbb = 0;
    for (size_t i = 0; i < n; ++i) {
        sab += (a[i] - ma) * (b[i] - mb);
        saa += (a[i] - ma) * (a[i] - ma);
        sbb += (b[i] - mb) * (b[i] - mb);
    }
    if (saa == 0.0 || sbb == 0.0) return std::nan("");
    return sab / std::sqrt(saa * sbb);
}

std::vector<double> midranks_oracle(const std::vector<double>& v) {
    const size_t n = v.size();
    std::vector<double> r(n);
    for (size_t i = 0; i < n; ++i) {
        size_t below = 0, tied = 0;
        for (size_t j = 0; j < n; ++j) {
            if (v[j] < v[i]) ++below;
            if (v[j] == v[i]) ++tied;
        }
        r[i] = static_cast<double>(below) + (static_cast<double>(tied) + 1.0) / 2.0;
    }
    return r;
}

double kendall_oracle(const std::vector<double>& a, const std::vector<double>& b) {
    const size_t n = a.size();
    long long conc = 0, disc = 0, ta = 0, tb = 0;
    for (size_t i = 0; i < n; ++i)
        for (size_t j = i + 1; j < n; ++j) {
            const double da = a[i] - a[j], db = b[i] - b[j];
            if (da == 0.0 && db == 0.0) continue;
            if (da == 0.0)
                ++ta;
            else if (db == 0.0)
                ++tb;
            else if ((da > 0) == (db > 0))
                ++conc;
            else
                ++disc;
        }
    const double den = std::sqrt(static_cast<double>(conc + disc + ta) *
                                 static_cast<double>(conc + disc + tb));
    if (den == 0.0) return std::nan("");
    return static_cast<double>(conc - disc) / den;
}

Outcome criterion3() {
    Rng rng(31415);
    double max_err = 0.0;
    const auto note = [&](double got, double want) {
        if (std::isnan(got) && std::isnan(want)) return;
        max_err = std::max(max_err, std::abs(got - want));
    };
    for (int trial = 0; trial < 100; ++trial) {
        const size_t n = trial < 90 ? 4 + static_cast<size_t>(rng.uniform_int(0, 196))
                                    : 500 + static_cast<size_t>(rng.uniform_int(0, 500));
        std::vector<double> a(n), b(n);
        const bool tie_a = rng.uniform() < 0.6, tie_b = rng.uniform() < 0.6;
        for (size_t i = 0; i < n; ++i) {
            a[i] = tie_a ? static_cast<double>(rng.uniform_int(0, 12)) : rng.uniform(-2, 2);
            b[i] = tie_b ? static_cast<double>(rng.uniform_int(0, 12)) : rng.uniform(-2, 2);
        }
        note(pearson(a, b), pearson_oracle(a, b));
        note(kendall(a, b), kendall_oracle(a, b));
        note(spearman(a, b), pearson_oracle(midranks_oracle(a), midranks_oracle(b)));
    }
    const bool exact = kendall({1, 2, 3}, {1, 3, 2}) == 1.0 / 3.0;
    Outcome out;
    out.ok = max_err <= 1e-9 && exact;
    out.detail = "max abs err " + fmt(max_err) + (exact ? ", kendall 1/3 exact" : ", 1/3 NOT exact");
    return out;
}

// ---------------------------------------------------------------------------
// Criterion 4 — permutation equivariance on 10 designs, all modes
// ---------------------------------------------------------------------------

Outcome criterion4() {
    Rng rng(424242);
    double worst = 0.0;
    for (int trial = 0; trial < 10; ++trial) {
        const int cells = static_cast<int>(rng.uniform_int(50, 200));
        const double die = std::ceil(std::sqrt(cells * 1.2 / 0.6));
        const auto [nl, pl] = generate_synthetic(1000 + trial, cells, 0.6, die);
        const GridSpec grid = make_grid(pl.die, 6, 6);
        const MultiViewGraph mv = assemble_multiview(nl, pl, grid, 12);
        const FeatureNorm norm = compute_feature_norm({&mv});
        ModelConfig cfg;
        cfg.l = 2;
        cfg.d = 8;
        cfg.heads = 2;
        cfg.K = 4;
        cfg.cutoff = 8.0 * grid.tile_w;
        cfg.fourier_bands = 2;
        cfg.out_mlp_width = 8;
        const auto in1 = prepare_inputs<float>(mv, norm, cfg);

        const int n = mv.x_t.shape[0];
        std::vector<int> perm(static_cast<size_t>(n));
        std::iota(perm.begin(), perm.end(), 0);
        for (int i = n - 1; i > 0; --i)
            std::swap(perm[static_cast<size_t>(i)],
                      perm[static_cast<size_t>(rng.uniform_int(0, i))]);

        MultiViewGraph mv2;
        mv2.x_t = Tensor<double>(mv.x_t.shape);
        mv2.x_g = Tensor<double>(mv.x_g.shape);
        mv2.coords = Tensor<double>(mv.coords.shape);
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < 7; ++j) mv2.x_t.at(perm[i], j) = mv.x_t.at(i, j);
            for (int j = 0; j < 9; ++j) mv2.x_g.at(perm[i], j) = mv.x_g.at(i, j);
            for (int j = 0; j < 2; ++j) mv2.coords.at(perm[i], j) = mv.coords.at(i, j);
        }
        mv2.topo.n_nodes = mv2.geo.n_nodes = n;
        for (const auto& [u, v] : mv.topo.edges) mv2.topo.edges.push_back({perm[u], perm[v]});
        for (const auto& [u, v] : mv.geo.edges) mv2.geo.edges.push_back({perm[u], perm[v]});
        mv2.geo.edge_attr = mv.geo.edge_attr;
        const auto in2 = prepare_inputs<float>(mv2, norm, cfg);

        const auto params = init_params<float>(cfg, 9000 + trial);
        for (const Mode mode : {Mode::full, Mode::topo_only, Mode::geo_only}) {
            Tape<float> t1, t2;
            const auto f1 = model_forward(t1, params, in1, cfg, mode, false);
            const auto f2 = model_forward(t2, params, in2, cfg, mode, false);
            const Tensor<float>&y1 = t1.value(f1.yhat), &y2 = t2.value(f2.yhat);
            for (int i = 0; i < n; ++i)
                worst = std::max(worst, std::abs(static_cast<double>(y2.at(perm[i], 0)) -
                                                 static_cast<double>(y1.at(i, 0))));
        }
    }
    Outcome out;
    out.ok = worst <= 1e-5;
    out.detail = "max abs deviation " + fmt(worst);
    return out;
}

// ---------------------------------------------------------------------------
// Criterion 5 — view separation, bitwise, at the design level
// ---------------------------------------------------------------------------

Outcome criterion5() {
    const auto [nl, pl] = generate_synthetic(77, 150, 0.6, 18.0);
    const GridSpec grid = make_grid(pl.die, 8, 8);
    const MultiViewGraph mvA = assemble_multiview(nl, pl, grid, 16);
    const FeatureNorm norm = compute_feature_norm({&mvA});
    ModelConfig cfg;
    cfg.l = 2;
    cfg.d = 8;
    cfg.heads = 2;
    cfg.K = 4;
    cfg.cutoff = 8.0 * grid.tile_w;
    cfg.fourier_bands = 2;
    cfg.out_mlp_width = 8;
    const auto params = init_params<float>(cfg, 55);
    const auto inA = prepare_inputs<float>(mvA, norm, cfg);

    const auto forward_bits = [&](const ModelInputs<float>& in, Mode mode) {
        Tape<float> tape;
        const auto fwd = model_forward(tape, params, in, cfg, mode, false);
        return tape.value(fwd.yhat).data;
    };

    // --- coordinate perturbation holding X_t fixed -------------------------
    Rng jitter(555);
    Placement plB = pl;
    for (size_t i = 0; i < plB.positions.size(); ++i) {
        auto& [x, y] = plB.positions[i];
        const double wmax = pl.die.x1 - nl.cells[i].width;
        const double hmax = pl.die.y1 - nl.cells[i].height;
        x = std::clamp(x + jitter.uniform(-0.4, 0.4), pl.die.x0, wmax);
        y = std::clamp(y + jitter.uniform(-0.4, 0.4), pl.die.y0, hmax);
    }
    const MultiViewGraph mvB = assemble_multiview(nl, plB, grid, 16);
    if (mvB.geo.edges == mvA.geo.edges && mvB.coords.data == mvA.coords.data)
        return {false, "perturbation did not change the geometry view"};
    MultiViewGraph mvB2;
    mvB2.topo = mvA.topo; // nets unchanged
    mvB2.x_t = mvA.x_t;   // held fixed
    mvB2.geo = mvB.geo;
    mvB2.coords = mvB.coords;
    mvB2.x_g = Tensor<double>(mvA.x_g.shape);
    const int n = mvA.x_t.shape[0];
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < 7; ++j) mvB2.x_g.at(i, j) = mvA.x_t.at(i, j);
        mvB2.x_g.at(i, 7) = mvB.coords.at(i, 0);
        mvB2.x_g.at(i, 8) = mvB.coords.at(i, 1);
    }
    const auto inB = prepare_inputs<float>(mvB2, norm, cfg);
    const bool topo_invariant =
        forward_bits(inA, Mode::topo_only) == forward_bits(inB, Mode::topo_only);

    // --- net rewiring holding X_g fixed ------------------------------------
    Rng rw(777);
    std::vector<int> sigma(static_cast<size_t>(n));
    std::iota(sigma.begin(), sigma.end(), 0);
    for (int i = n - 1; i > 0; --i)
        std::swap(sigma[static_cast<size_t>(i)],
                  sigma[static_cast<size_t>(rw.uniform_int(0, i))]);
    Netlist nlC = nl;
    for (Net& net : nlC.nets) {
        std::vector<int> cells;
        for (const NetPin& p : net.pins)
            if (std::find(cells.begin(), cells.end(), p.cell) == cells.end())
                cells.push_back(p.cell);
        net.pins.clear();
        for (const int c : cells) net.pins.push_back({sigma[static_cast<size_t>(c)], 0});
    }
    const Graph topoC = build_topology_edges(nlC, 16);
    if (topoC.edges == mvA.topo.edges) return {false, "rewiring did not change topology"};
    MultiViewGraph mvC2;
    mvC2.topo = topoC;
    mvC2.x_t = mvA.x_t;       // held fixed: X_g embeds this feature block, so
                              // holding X_g fixed pins it too; only edges move
    mvC2.geo = mvA.geo;       // held fixed
    mvC2.coords = mvA.coords; // held fixed
    mvC2.x_g = mvA.x_g;       // held fixed
    const auto inC = prepare_inputs<float>(mvC2, norm, cfg);
    const bool geo_invariant =
        forward_bits(inA, Mode::geo_only) == forward_bits(inC, Mode::geo_only);

    Outcome out;
    out.ok = topo_invariant && geo_invariant;
    out.detail = std::string("topo_only ") + (topo_invariant ? "bitwise equal" : "CHANGED") +
                 ", geo_only " + (geo_invariant ? "bitwise equal" : "CHANGED");
    return out;
}

// ---------------------------------------------------------------------------
// Criterion 6 — directional replication: full model beats both ablations
// ---------------------------------------------------------------------------

Outcome criterion6() {
    const auto t0 = clock_type::now();
    const fs::path dir =
        fs::temp_directory_path() / ("congestnet_accept6_" + std::to_string(::getpid()));
    fs::remove_all(dir);
    fs::create_directories(dir);

    if (run_cli("gen --seed 7 --out-dir " + dir.string()) != 0)
        return {false, "gen failed"};

    const auto pooled_pearson = [&]() -> double {
        const json r = json::parse(slurp(dir / "report_test.json"));
        if (!r.at("pearson").is_number()) return std::nan("");
        return r.at("pearson").get<double>();
    };

    int passed = 0, tried = 0;
    std::string detail;
    for (const uint64_t seed : {7ULL, 8ULL, 9ULL}) {
        if (passed >= 2) break; // criterion already satisfied
        std::map<std::string, double> r;
        bool run_ok = true;
        for (const std::string mode : {"full", "topo", "geo"}) {
            const std::string train_args = "train --seed " + std::to_string(seed) +
                                           " --mode " + mode + " --epochs 200 --out-dir " +
                                           dir.string();
            if (run_cli(train_args) != 0 || run_cli("eval --out-dir " + dir.string()) != 0) {
                run_ok = false;
                break;
            }
            r[mode] = pooled_pearson();
            std::fprintf(stderr, "  [criterion 6] seed %llu %s pearson %.4f (%.0fs)\n",
                         static_cast<unsigned long long>(seed), mode.c_str(), r[mode],
                         seconds_since(t0));
        }
        ++tried;
        const bool seed_ok = run_ok && std::isfinite(r["full"]) && r["full"] >= 0.5 &&
                             r["full"] >= r["topo"] + 0.02 && r["full"] >= r["geo"] + 0.02;
        if (seed_ok) ++passed;
        detail += (detail.empty() ? "" : "; ") + std::string("seed ") + std::to_string(seed) +
                  (run_ok ? " full " + fmt(r["full"]) + " topo " + fmt(r["topo"]) + " geo " +
                                fmt(r["geo"])
                          : " run failed") +
                  (seed_ok ? " ok" : " below bar");
    }
    fs::remove_all(dir);
    Outcome out;
    // 2 passes satisfy "at least 2 of 3"; with 2 seeds tried and 2 passes we
    // never needed the third.
    out.ok = passed >= 2;
    out.detail = detail + ", " + fmt(seconds_since(t0)) + "s";
    return out;
}

// ---------------------------------------------------------------------------
// Criterion 7 — AdamW unit checks in double precision
// ---------------------------------------------------------------------------

Outcome criterion7() {
    TrainConfig cfg;
    cfg.lr = 2e-4;
    cfg.weight_decay = 0.0;

    ModelParams<double> p;
    p.items.emplace_back("w", Tensor<double>({1}, {0.0}));
    OptimizerState<double> st;
    const std::map<std::string, std::vector<double>> g = {{"w", {1.0}}};
    adamw_step(p, g, st, cfg);
    const double want = -2e-4 / (1.0 + 1e-8);
    const double err = std::abs(p.items[0].second.data[0] - want);

    ModelParams<double> q;
    q.items.emplace_back("layer.b", Tensor<double>({2}, {0.25, -1.75}));
    OptimizerState<double> st2;
    const std::map<std::string, std::vector<double>> gz = {{"layer.b", {0.0, 0.0}}};
    adamw_step(q, gz, st2, cfg);
    const bool noop = q.items[0].second.data == std::vector<double>{0.25, -1.75};

    Outcome out;
    out.ok = err <= 1e-12 && noop;
    out.detail = "step error " + fmt(err) + (noop ? ", zero step exact no-op" : ", no-op FAILED");
    return out;
}

// ---------------------------------------------------------------------------
// Criterion 8 — byte-identical pipeline runs
// ---------------------------------------------------------------------------

Outcome criterion8() {
    const fs::path base =
        fs::temp_directory_path() / ("congestnet_accept8_" + std::to_string(::getpid()));
    const fs::path d1 = base / "run1", d2 = base / "run2";
    fs::remove_all(base);
    fs::create_directories(d1);
    fs::create_directories(d2);

    const std::string gen_flags = " --seed 11 --cells 400 --designs 4 --split 3/1";
    const std::string train_flags = " --seed 11 --epochs 10";
    for (const fs::path& d : {d1, d2}) {
        if (run_cli("gen --out-dir " + d.string() + gen_flags) != 0 ||
            run_cli("train --out-dir " + d.string() + train_flags) != 0 ||
            run_cli("eval --out-dir " + d.string()) != 0)
            return {false, "pipeline run failed"};
    }
    const std::vector<std::string> files = {"checkpoint/params.bin", "checkpoint/manifest.json",
                                            "checkpoint/config.json", "loss.csv",
                                            "report_test.json"};
    std::string diff;
    for (const std::string& f : files)
        if (slurp(d1 / f) != slurp(d2 / f)) diff += (diff.empty() ? "" : ", ") + f;
    fs::remove_all(base);
    Outcome out;
    out.ok = diff.empty();
    out.detail = diff.empty() ? "checkpoint, loss curve, report all byte-identical"
                              : "differs: " + diff;
    return out;
}

} // namespace

int main() {
    struct Entry {
        int id;
        const char* desc;
        Outcome (*fn)();
    };
    const std::vector<Entry> entries = {
        {1, "full-model gradient check <= 1e-4", criterion1},
        {2, "Delaunay empty-circumcircle + Euler counts", criterion2},
        {3, "correlation metrics match naive oracles within 1e-9", criterion3},
        {4, "permutation equivariance within 1e-5 (all modes)", criterion4},
        {5, "view separation is bitwise", criterion5},
        {6, "full model beats both ablations (test Pearson)", criterion6},
        {7, "AdamW step within 1e-12; zero step is a no-op", criterion7},
        {8, "two seeded pipeline runs are byte-identical", criterion8},
    };

    int failures = 0;
    std::vector<std::string> lines(entries.size());
    for (size_t i = 0; i < entries.size(); ++i) {
        const Entry& e = entries[i];
        std::fprintf(stderr, "[acceptance] running criterion %d...\n", e.id);
        Outcome o;
        try {
            o = e.fn();
        } catch (const std::exception& ex) {
            o = {false, std::string("exception: ") + ex.what()};
        }
        if (!o.ok) ++failures;
        lines[i] = std::string(o.ok ? "PASS" : "FAIL") + " criterion " + std::to_string(e.id) +
                   ": " + e.desc + " (" + o.detail + ")";
        std::fprintf(stderr, "[acceptance] %s\n", lines[i].c_str());
    }
    for (const std::string& l : lines) std::printf("%s\n", l.c_str());
    return failures == 0 ? 0 : 1;
}
