// congestnet command-line tool: gen / train / eval / predict / replay.
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <omp.h>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "congestnet/checkpoint.hpp"
#include "congestnet/circuit.hpp"
#include "congestnet/graph.hpp"
#include "congestnet/metrics.hpp"
#include "congestnet/model.hpp"
#include "congestnet/rng.hpp"
#include "congestnet/tape.hpp"
#include "congestnet/textio.hpp"
#include "congestnet/train.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace congestnet;

namespace {

constexpr const char* kVersion = "0.1.0";

// ---------------------------------------------------------------------------
// Shared plumbing
// ---------------------------------------------------------------------------

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + p.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const fs::path& p, const std::string& text) {
    fs::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + p.string());
    out << text;
    if (!out) throw std::runtime_error("write failed for " + p.string());
}

struct CommonOptions {
    uint64_t seed = 1;
    std::string out_dir = ".";
    int jobs = 0; // 0 = library default thread count
};

void apply_jobs(int jobs) {
    if (jobs > 0) omp_set_num_threads(jobs);
}

json common_to_json(const CommonOptions& c) {
    return json{{"seed", c.seed}, {"out_dir", c.out_dir}, {"jobs", c.jobs}};
}

void common_from_json(const json& j, CommonOptions& c) {
    c.seed = j.at("seed").get<uint64_t>();
    c.out_dir = j.at("out_dir").get<std::string>();
    c.jobs = j.at("jobs").get<int>();
}

void write_manifest(const fs::path& path, const std::string& command, uint64_t seed,
                    const json& flags, const std::vector<std::string>& inputs,
                    const std::vector<std::string>& outputs,
                    std::chrono::steady_clock::time_point started) {
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    json m;
    m["command"] = command;
    m["version"] = kVersion;
    m["seed"] = seed;
    m["flags"] = flags;
    m["inputs"] = inputs;
    m["outputs"] = outputs;
    m["duration_seconds"] = seconds;
    write_file(path, m.dump(2) + "\n");
}

struct LoadedDesign {
    std::string name;
    Netlist nl;
    Placement pl;
    LabelGrid labels;
};

LoadedDesign load_design(const fs::path& dir) {
    LoadedDesign d;
    d.name = dir.filename().string();
    d.nl = parse_netlist(read_file(dir / "netlist.json"));
    d.pl = parse_placement(read_file(dir / "placement.json"), d.nl);
    d.labels = parse_label_grid(read_file(dir / "labels.grid"));
    return d;
}

struct Split {
    std::vector<std::string> train, test;
};

Split read_split(const fs::path& out_dir) {
    const json j = json::parse(read_file(out_dir / "split.json"));
    Split s;
    s.train = j.at("train").get<std::vector<std::string>>();
    s.test = j.at("test").get<std::vector<std::string>>();
    return s;
}

// Everything eval/train need per design, rebuilt identically from the files.
struct PreparedDesign {
    std::string name;
    MultiViewGraph mvg;
    std::vector<double> raw_target; // per-cell RUDY sample
    TargetStats tstats;             // this design's own stats
    std::vector<double> std_target;
};

PreparedDesign prepare_design(const LoadedDesign& d, int clique_cap, int feature_coarsen) {
    PreparedDesign p;
    p.name = d.name;
    const GridSpec& lg = d.labels.grid;
    const int fx = std::max(1, lg.nx / std::max(1, feature_coarsen));
    const int fy = std::max(1, lg.ny / std::max(1, feature_coarsen));
    const GridSpec fgrid = make_grid(d.pl.die, fx, fy);
    p.mvg = assemble_multiview(d.nl, d.pl, fgrid, clique_cap);
    p.raw_target = sample_labels_at_cells(d.labels, d.nl, d.pl);
    p.tstats = target_stats(p.raw_target);
    p.std_target = standardize(p.raw_target, p.tstats);
    return p;
}

// Graph construction is the one stage --jobs may parallelize; each design is
// independent and the result is identical for any thread count.
std::vector<PreparedDesign> prepare_designs(const std::vector<LoadedDesign>& loaded,
                                            int clique_cap, int feature_coarsen) {
    std::vector<PreparedDesign> out(loaded.size());
    std::exception_ptr err;
#pragma omp parallel for schedule(dynamic)
    for (int i = 0; i < static_cast<int>(loaded.size()); ++i) {
        try {
            out[static_cast<size_t>(i)] =
                prepare_design(loaded[static_cast<size_t>(i)], clique_cap, feature_coarsen);
        } catch (...) {
#pragma omp critical
            if (!err) err = std::current_exception();
        }
    }
    if (err) std::rethrow_exception(err);
    return out;
}

std::vector<LoadedDesign> load_designs(const fs::path& out_dir,
                                       const std::vector<std::string>& names) {
    std::vector<LoadedDesign> out;
    out.reserve(names.size());
    for (const std::string& n : names) out.push_back(load_design(out_dir / "designs" / n));
    return out;
}

// Standardized predictions for one design under a loaded checkpoint.
std::vector<double> predict_design(const ModelParams<float>& params, const CheckpointConfig& ck,
                                   const PreparedDesign& d) {
    const ModelInputs<float> inputs = prepare_inputs<float>(d.mvg, ck.feature_norm, ck.model);
    Tape<float> tape;
    const auto fwd = model_forward<float>(tape, params, inputs, ck.model, ck.mode, false);
    const Tensor<float>& y = tape.value(fwd.yhat);
    std::vector<double> pred(y.data.size());
    for (size_t i = 0; i < pred.size(); ++i) pred[i] = static_cast<double>(y.data[i]);
    return pred;
}

std::string pgm_from_grid(const LabelGrid& g) {
    double lo = g.values.empty() ? 0.0 : g.values[0];
    double hi = lo;
    for (const double v : g.values) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    std::string out = "P2\n" + std::to_string(g.grid.nx) + " " + std::to_string(g.grid.ny) +
                      "\n255\n";
    int on_line = 0;
    for (int iy = g.grid.ny - 1; iy >= 0; --iy) // top image row = highest y
        for (int ix = 0; ix < g.grid.nx; ++ix) {
            const double v = g.at(ix, iy);
            const int pix =
                hi > lo ? static_cast<int>(std::lround((v - lo) / (hi - lo) * 255.0)) : 0;
            out += std::to_string(pix);
            if (++on_line == 16) {
                out += '\n';
                on_line = 0;
            } else {
                out += ' ';
            }
        }
    if (on_line != 0) out += '\n';
    return out;
}

// ---------------------------------------------------------------------------
// gen
// ---------------------------------------------------------------------------

struct GenOptions {
    CommonOptions common;
    int cells = 2000;
    int designs = 9;
    double die = 0.0;  // 0 = auto from cell count
    double tile = 0.0; // 0 = die/32
    std::string split; // "T/E"; empty = 2:1 default
    double rent = 0.0; // 0 = cycle {0.5, 0.6, 0.7}
};

json gen_flags(const GenOptions& o) {
    json j = common_to_json(o.common);
    j["cells"] = o.cells;
    j["designs"] = o.designs;
    j["die"] = o.die;
    j["tile"] = o.tile;
    j["split"] = o.split;
    j["rent"] = o.rent;
    return j;
}

GenOptions gen_from_flags(const json& j) {
    GenOptions o;
    common_from_json(j, o.common);
    o.cells = j.at("cells").get<int>();
    o.designs = j.at("designs").get<int>();
    o.die = j.at("die").get<double>();
    o.tile = j.at("tile").get<double>();
    o.split = j.at("split").get<std::string>();
    o.rent = j.at("rent").get<double>();
    return o;
}

std::pair<int, int> resolve_split(const std::string& split, int designs) {
    if (designs < 1) throw std::invalid_argument("gen: --designs must be >= 1");
    if (split.empty()) {
        const int train = std::max(1, (2 * designs + 2) / 3);
        return {std::min(train, designs), designs - std::min(train, designs)};
    }
    const size_t slash = split.find('/');
    if (slash == std::string::npos)
        throw std::invalid_argument("gen: --split must look like 6/3");
    const int train = std::stoi(split.substr(0, slash));
    const int test = std::stoi(split.substr(slash + 1));
    if (train < 1 || test < 0 || train + test != designs)
        throw std::invalid_argument("gen: --split does not add up to --designs");
    return {train, test};
}

void cmd_gen(const GenOptions& opt) {
    const auto started = std::chrono::steady_clock::now();
    apply_jobs(opt.common.jobs);
    const fs::path out_dir(opt.common.out_dir);
    const double die_side =
        opt.die > 0.0 ? opt.die : std::sqrt(static_cast<double>(opt.cells) * 1.2 / 0.65);
    const auto [n_train, n_test] = resolve_split(opt.split, opt.designs);

    Rng root(opt.common.seed);
    std::vector<std::string> names, outputs;
    static constexpr double kRentLevels[3] = {0.5, 0.6, 0.7};
    for (int i = 0; i < opt.designs; ++i) {
        char buf[16];
        std::snprintf(buf, sizeof buf, "d%03d", i);
        const std::string name(buf);
        const uint64_t design_seed = root.fork(static_cast<uint64_t>(i)).next_u64();
        const double rent = opt.rent > 0.0 ? opt.rent : kRentLevels[i % 3];
        auto [nl, pl] = generate_synthetic(design_seed, opt.cells, rent, die_side);
        nl.name = name;

        const double tile = opt.tile > 0.0 ? opt.tile : pl.die.width() / 32.0;
        const int nx = std::max(1, static_cast<int>(std::ceil(pl.die.width() / tile - 1e-9)));
        const int ny = std::max(1, static_cast<int>(std::ceil(pl.die.height() / tile - 1e-9)));
        const GridSpec grid{pl.die.x0, pl.die.y0, tile, tile, nx, ny};
        const LabelGrid labels = rudy_label_grid(nl, pl, grid);

        const fs::path dir = out_dir / "designs" / name;
        write_file(dir / "netlist.json", serialize_netlist(nl));
        write_file(dir / "placement.json", serialize_placement(pl, nl));
        write_file(dir / "labels.grid", serialize_label_grid(labels));
        for (const char* f : {"netlist.json", "placement.json", "labels.grid"})
            outputs.push_back((dir / f).string());
        names.push_back(name);
    }

    json split_json;
    split_json["train"] = std::vector<std::string>(names.begin(), names.begin() + n_train);
    split_json["test"] = std::vector<std::string>(names.begin() + n_train, names.end());
    write_file(out_dir / "split.json", split_json.dump(2) + "\n");
    outputs.push_back((out_dir / "split.json").string());

    write_manifest(out_dir / "gen_manifest.json", "gen", opt.common.seed, gen_flags(opt), {},
                   outputs, started);
    std::cout << "gen: wrote " << opt.designs << " designs (" << n_train << " train / " << n_test
              << " test) under " << (out_dir / "designs").string() << "\n";
}

// ---------------------------------------------------------------------------
// train
// ---------------------------------------------------------------------------

struct TrainOptions {
    CommonOptions common;
    std::string mode = "full";
    int epochs = 500;
    double lr = 2e-4;
    int clique_cap = 16;
    int feature_coarsen = 4;
    double weight_decay = 0.01;
    double clip = 5.0;
    int log_every = 25;
    int layers = 3;
    int dim = 64;
    int heads = 4;
    int rbf_k = 16;
    double cutoff = 0.0; // 0 = 8 label tiles
    int fourier_bands = 4;
    int out_mlp_width = 64;
};

json train_flags(const TrainOptions& o) {
    json j = common_to_json(o.common);
    j["mode"] = o.mode;
    j["epochs"] = o.epochs;
    j["lr"] = o.lr;
    j["clique_cap"] = o.clique_cap;
    j["feature_coarsen"] = o.feature_coarsen;
    j["weight_decay"] = o.weight_decay;
    j["clip"] = o.clip;
    j["log_every"] = o.log_every;
    j["layers"] = o.layers;
    j["dim"] = o.dim;
    j["heads"] = o.heads;
    j["rbf_k"] = o.rbf_k;
    j["cutoff"] = o.cutoff;
    j["fourier_bands"] = o.fourier_bands;
    j["out_mlp_width"] = o.out_mlp_width;
    return j;
}

TrainOptions train_from_flags(const json& j) {
    TrainOptions o;
    common_from_json(j, o.common);
    o.mode = j.at("mode").get<std::string>();
    o.epochs = j.at("epochs").get<int>();
    o.lr = j.at("lr").get<double>();
    o.clique_cap = j.at("clique_cap").get<int>();
    o.feature_coarsen = j.at("feature_coarsen").get<int>();
    o.weight_decay = j.at("weight_decay").get<double>();
    o.clip = j.at("clip").get<double>();
    o.log_every = j.at("log_every").get<int>();
    o.layers = j.at("layers").get<int>();
    o.dim = j.at("dim").get<int>();
    o.heads = j.at("heads").get<int>();
    o.rbf_k = j.at("rbf_k").get<int>();
    o.cutoff = j.at("cutoff").get<double>();
    o.fourier_bands = j.at("fourier_bands").get<int>();
    o.out_mlp_width = j.at("out_mlp_width").get<int>();
    return o;
}

void cmd_train(const TrainOptions& opt) {
    const auto started = std::chrono::steady_clock::now();
    apply_jobs(opt.common.jobs);
    const fs::path out_dir(opt.common.out_dir);
    const Split split = read_split(out_dir);
    if (split.train.empty()) throw std::runtime_error("train: split has no training designs");
    const std::vector<LoadedDesign> loaded = load_designs(out_dir, split.train);
    std::vector<std::string> inputs;
    for (const std::string& n : split.train)
        inputs.push_back((out_dir / "designs" / n).string());

    ModelConfig mcfg;
    mcfg.l = opt.layers;
    mcfg.d = opt.dim;
    mcfg.heads = opt.heads;
    mcfg.K = opt.rbf_k;
    mcfg.cutoff = opt.cutoff > 0.0 ? opt.cutoff : 8.0 * loaded[0].labels.grid.tile_w;
    mcfg.fourier_bands = opt.fourier_bands;
    mcfg.out_mlp_width = opt.out_mlp_width;
    mcfg.validate();
    const Mode mode = mode_from_string(opt.mode);

    const std::vector<PreparedDesign> prepared =
        prepare_designs(loaded, opt.clique_cap, opt.feature_coarsen);
    std::vector<const MultiViewGraph*> views;
    for (const PreparedDesign& p : prepared) views.push_back(&p.mvg);
    const FeatureNorm norm = compute_feature_norm(views);

    std::vector<TrainDesign> train_set;
    for (const PreparedDesign& p : prepared) {
        TrainDesign td;
        td.name = p.name;
        td.inputs = prepare_inputs<float>(p.mvg, norm, mcfg);
        Tensor<float> target({static_cast<int>(p.std_target.size()), 1});
        for (size_t i = 0; i < p.std_target.size(); ++i)
            target.data[i] = static_cast<float>(p.std_target[i]);
        td.target = std::move(target);
        train_set.push_back(std::move(td));
    }

    ModelParams<float> params = init_params<float>(mcfg, opt.common.seed);
    TrainConfig tcfg;
    tcfg.epochs = opt.epochs;
    tcfg.lr = opt.lr;
    tcfg.weight_decay = opt.weight_decay;
    tcfg.grad_clip_norm = opt.clip;
    tcfg.seed = opt.common.seed;
    tcfg.log_every = opt.log_every;

    const auto on_epoch = [&](const EpochStats& s) {
        if (opt.log_every > 0 && (s.epoch == 1 || s.epoch == tcfg.epochs ||
                                  s.epoch % opt.log_every == 0))
            std::cout << "epoch " << s.epoch << "/" << tcfg.epochs << " loss "
                      << fmt_double(s.mean_loss) << "\n";
    };
    const std::vector<EpochStats> stats =
        train_model(params, train_set, mcfg, mode, tcfg, on_epoch);

    CheckpointConfig ck;
    ck.model = mcfg;
    ck.mode = mode;
    ck.clique_cap = opt.clique_cap;
    ck.feature_coarsen = opt.feature_coarsen;
    ck.feature_norm = norm;
    const fs::path ckpt_dir = out_dir / "checkpoint";
    save_checkpoint(ckpt_dir.string(), params, ck);
    write_file(out_dir / "loss.csv", loss_curve_csv(stats));

    std::vector<std::string> outputs = {(ckpt_dir / "manifest.json").string(),
                                        (ckpt_dir / "params.bin").string(),
                                        (ckpt_dir / "config.json").string(),
                                        (out_dir / "loss.csv").string()};
    write_manifest(out_dir / "train_manifest.json", "train", opt.common.seed, train_flags(opt),
                   inputs, outputs, started);
    std::cout << "train: " << mode_to_string(mode) << " model, final loss "
              << fmt_double(stats.back().mean_loss) << ", checkpoint at " << ckpt_dir.string()
              << "\n";
}

// ---------------------------------------------------------------------------
// eval
// ---------------------------------------------------------------------------

struct EvalOptions {
    CommonOptions common;
    std::string checkpoint; // empty = <out-dir>/checkpoint
    std::string on = "test";
    bool per_design = false;
};

json eval_flags(const EvalOptions& o) {
    json j = common_to_json(o.common);
    j["checkpoint"] = o.checkpoint;
    j["on"] = o.on;
    j["per_design"] = o.per_design;
    return j;
}

EvalOptions eval_from_flags(const json& j) {
    EvalOptions o;
    common_from_json(j, o.common);
    o.checkpoint = j.at("checkpoint").get<std::string>();
    o.on = j.at("on").get<std::string>();
    o.per_design = j.at("per_design").get<bool>();
    return o;
}

void cmd_eval(const EvalOptions& opt) {
    const auto started = std::chrono::steady_clock::now();
    apply_jobs(opt.common.jobs);
    const fs::path out_dir(opt.common.out_dir);
    const fs::path ckpt =
        opt.checkpoint.empty() ? out_dir / "checkpoint" : fs::path(opt.checkpoint);
    auto [params, ck] = load_checkpoint(ckpt.string());

    const Split split = read_split(out_dir);
    const std::vector<std::string>& names =
        opt.on == "train" ? split.train : (opt.on == "test" ? split.test : split.test);
    if (opt.on != "train" && opt.on != "test")
        throw std::invalid_argument("eval: --on must be train or test");
    if (names.empty()) throw std::runtime_error("eval: split has no '" + opt.on + "' designs");

    const std::vector<LoadedDesign> loaded = load_designs(out_dir, names);
    const std::vector<PreparedDesign> prepared =
        prepare_designs(loaded, ck.clique_cap, ck.feature_coarsen);

    std::vector<std::vector<double>> preds, targets;
    for (const PreparedDesign& p : prepared) {
        preds.push_back(predict_design(params, ck, p));
        targets.push_back(p.std_target);
    }
    const EvalReport report = evaluate(names, preds, targets);
    std::cout << report_table(report, opt.per_design);

    const fs::path report_path = out_dir / ("report_" + opt.on + ".json");
    write_file(report_path, report_to_json(report));

    std::vector<std::string> inputs = {ckpt.string()};
    for (const std::string& n : names) inputs.push_back((out_dir / "designs" / n).string());
    write_manifest(out_dir / "eval_manifest.json", "eval", opt.common.seed, eval_flags(opt),
                   inputs, {report_path.string()}, started);
}

// ---------------------------------------------------------------------------
// predict
// ---------------------------------------------------------------------------

struct PredictOptions {
    CommonOptions common;
    std::string checkpoint; // empty = <out-dir>/checkpoint
    std::string design;     // empty = first test design
};

json predict_flags(const PredictOptions& o) {
    json j = common_to_json(o.common);
    j["checkpoint"] = o.checkpoint;
    j["design"] = o.design;
    return j;
}

PredictOptions predict_from_flags(const json& j) {
    PredictOptions o;
    common_from_json(j, o.common);
    o.checkpoint = j.at("checkpoint").get<std::string>();
    o.design = j.at("design").get<std::string>();
    return o;
}

void cmd_predict(const PredictOptions& opt) {
    const auto started = std::chrono::steady_clock::now();
    apply_jobs(opt.common.jobs);
    const fs::path out_dir(opt.common.out_dir);
    const fs::path ckpt =
        opt.checkpoint.empty() ? out_dir / "checkpoint" : fs::path(opt.checkpoint);
    auto [params, ck] = load_checkpoint(ckpt.string());

    std::string design = opt.design;
    if (design.empty()) {
        const Split split = read_split(out_dir);
        if (split.test.empty()) throw std::runtime_error("predict: no test designs in split");
        design = split.test.front();
    }
    const LoadedDesign loaded = load_design(out_dir / "designs" / design);
    const PreparedDesign prep = prepare_design(loaded, ck.clique_cap, ck.feature_coarsen);
    const std::vector<double> pred_std = predict_design(params, ck, prep);

    // De-standardize with this design's own target statistics.
    std::vector<double> pred_raw(pred_std.size());
    for (size_t i = 0; i < pred_std.size(); ++i)
        pred_raw[i] = pred_std[i] * prep.tstats.stdev + prep.tstats.mean;

    std::string csv = "cell,x,y,target,pred\n";
    for (size_t i = 0; i < loaded.nl.cells.size(); ++i) {
        const auto [cx, cy] = cell_center(loaded.nl, loaded.pl, static_cast<int>(i));
        csv += loaded.nl.cells[i].name + "," + fmt_double(cx) + "," + fmt_double(cy) + "," +
               fmt_double(prep.raw_target[i]) + "," + fmt_double(pred_raw[i]) + "\n";
    }

    // Tile-aggregated heatmaps on the label grid: mean prediction per tile.
    LabelGrid pred_grid;
    pred_grid.grid = loaded.labels.grid;
    pred_grid.values.assign(loaded.labels.values.size(), 0.0);
    std::vector<int> counts(loaded.labels.values.size(), 0);
    for (size_t i = 0; i < pred_raw.size(); ++i) {
        const auto [cx, cy] = cell_center(loaded.nl, loaded.pl, static_cast<int>(i));
        const int ix = tile_ix(pred_grid.grid, cx);
        const int iy = tile_iy(pred_grid.grid, cy);
        pred_grid.at(ix, iy) += pred_raw[i];
        counts[static_cast<size_t>(iy) * pred_grid.grid.nx + ix] += 1;
    }
    for (size_t i = 0; i < pred_grid.values.size(); ++i)
        if (counts[i] > 0) pred_grid.values[i] /= counts[i];

    const fs::path dir = out_dir / "pred" / design;
    write_file(dir / "pred.csv", csv);
    write_file(dir / "pred.pgm", pgm_from_grid(pred_grid));
    write_file(dir / "target.pgm", pgm_from_grid(loaded.labels));

    write_manifest(out_dir / "predict_manifest.json", "predict", opt.common.seed,
                   predict_flags(opt),
                   {ckpt.string(), (out_dir / "designs" / design).string()},
                   {(dir / "pred.csv").string(), (dir / "pred.pgm").string(),
                    (dir / "target.pgm").string()},
                   started);
    std::cout << "predict: wrote " << (dir / "pred.csv").string() << " ("
              << loaded.nl.cells.size() << " cells)\n";
}

// ---------------------------------------------------------------------------
// replay
// ---------------------------------------------------------------------------

void dispatch_flags(const std::string& command, const json& flags) {
    if (command == "gen")
        cmd_gen(gen_from_flags(flags));
    else if (command == "train")
        cmd_train(train_from_flags(flags));
    else if (command == "eval")
        cmd_eval(eval_from_flags(flags));
    else if (command == "predict")
        cmd_predict(predict_from_flags(flags));
    else
        throw std::runtime_error("replay: unknown command '" + command + "'");
}

void cmd_replay(const std::string& manifest_path) {
    const json m = json::parse(read_file(manifest_path));
    dispatch_flags(m.at("command").get<std::string>(), m.at("flags"));
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"congestnet: placement-congestion prediction on synthetic designs"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    CommonOptions common;
    const auto add_common = [&](CLI::App* sub) {
        sub->add_option("--seed", common.seed, "master random seed")->capture_default_str();
        sub->add_option("--out-dir", common.out_dir, "workspace directory")
            ->capture_default_str();
        sub->add_option("--jobs", common.jobs,
                        "worker threads for graph construction (0 = default)")
            ->capture_default_str();
    };

    GenOptions gen;
    CLI::App* sub_gen = app.add_subcommand("gen", "generate synthetic designs + RUDY labels");
    add_common(sub_gen);
    sub_gen->add_option("--cells", gen.cells, "cells per design")->capture_default_str();
    sub_gen->add_option("--designs", gen.designs, "number of designs")->capture_default_str();
    sub_gen->add_option("--die", gen.die, "die side length (0 = auto)")->capture_default_str();
    sub_gen->add_option("--tile", gen.tile, "label tile size (0 = die/32)")
        ->capture_default_str();
    sub_gen->add_option("--split", gen.split, "train/test split, e.g. 6/3")
        ->capture_default_str();
    sub_gen->add_option("--rent", gen.rent, "locality exponent for all designs (0 = cycle)")
        ->capture_default_str();

    TrainOptions train;
    CLI::App* sub_train = app.add_subcommand("train", "train a model on the train split");
    add_common(sub_train);
    sub_train->add_option("--mode", train.mode, "full | topo | geo")->capture_default_str();
    sub_train->add_option("--epochs", train.epochs, "training epochs")->capture_default_str();
    sub_train->add_option("--lr", train.lr, "learning rate")->capture_default_str();
    sub_train->add_option("--clique-cap", train.clique_cap, "max net size expanded as clique")
        ->capture_default_str();
    sub_train->add_option("--feature-coarsen", train.feature_coarsen,
                          "density-feature grid = label grid / this factor")
        ->capture_default_str();
    sub_train->add_option("--weight-decay", train.weight_decay, "AdamW weight decay")
        ->capture_default_str();
    sub_train->add_option("--clip", train.clip, "global gradient-norm clip")
        ->capture_default_str();
    sub_train->add_option("--log-every", train.log_every, "progress print period (epochs)")
        ->capture_default_str();
    sub_train->add_option("--layers", train.layers, "GNN layers per pathway")
        ->capture_default_str();
    sub_train->add_option("--dim", train.dim, "hidden width")->capture_default_str();
    sub_train->add_option("--heads", train.heads, "attention heads")->capture_default_str();
    sub_train->add_option("--rbf-k", train.rbf_k, "radial basis functions")
        ->capture_default_str();
    sub_train->add_option("--cutoff", train.cutoff, "RBF distance cutoff (0 = 8 label tiles)")
        ->capture_default_str();
    sub_train->add_option("--fourier-bands", train.fourier_bands, "positional Fourier bands")
        ->capture_default_str();
    sub_train->add_option("--out-mlp-width", train.out_mlp_width, "fusion MLP hidden width")
        ->capture_default_str();

    EvalOptions eval;
    CLI::App* sub_eval = app.add_subcommand("eval", "evaluate a checkpoint on a split");
    add_common(sub_eval);
    sub_eval->add_option("--checkpoint", eval.checkpoint, "checkpoint dir (default in out-dir)")
        ->capture_default_str();
    sub_eval->add_option("--on", eval.on, "train | test")->capture_default_str();
    sub_eval->add_flag("--per-design", eval.per_design, "print per-design rows");

    PredictOptions predict;
    CLI::App* sub_predict =
        app.add_subcommand("predict", "per-cell predictions + PGM heatmaps for one design");
    add_common(sub_predict);
    sub_predict
        ->add_option("--checkpoint", predict.checkpoint, "checkpoint dir (default in out-dir)")
        ->capture_default_str();
    sub_predict->add_option("--design", predict.design, "design name (default: first test)")
        ->capture_default_str();

    std::string manifest_path;
    CLI::App* sub_replay =
        app.add_subcommand("replay", "re-run a command from its RunManifest");
    sub_replay->add_option("manifest", manifest_path, "path to a *_manifest.json")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (sub_gen->parsed()) {
            gen.common = common;
            cmd_gen(gen);
        } else if (sub_train->parsed()) {
            train.common = common;
            cmd_train(train);
        } else if (sub_eval->parsed()) {
            eval.common = common;
            cmd_eval(eval);
        } else if (sub_predict->parsed()) {
            predict.common = common;
            cmd_predict(predict);
        } else if (sub_replay->parsed()) {
            cmd_replay(manifest_path);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
