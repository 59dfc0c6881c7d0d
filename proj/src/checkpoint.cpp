#include "congestnet/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace congestnet {

static_assert(std::endian::native == std::endian::little,
              "checkpoint blobs are little-endian; big-endian hosts are unsupported");
static_assert(sizeof(float) == 4);

using json = nlohmann::ordered_json;

namespace {

std::string read_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw std::runtime_error("checkpoint: cannot open " + p.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::filesystem::path& p, const std::string& bytes) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("checkpoint: cannot write " + p.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw std::runtime_error("checkpoint: write failed for " + p.string());
}

json config_to_json(const CheckpointConfig& cfg) {
    json j;
    j["mode"] = mode_to_string(cfg.mode);
    j["clique_cap"] = cfg.clique_cap;
    j["feature_coarsen"] = cfg.feature_coarsen;
    json m;
    m["l"] = cfg.model.l;
    m["d"] = cfg.model.d;
    m["heads"] = cfg.model.heads;
    m["K"] = cfg.model.K;
    m["cutoff"] = cfg.model.cutoff;
    m["fourier_bands"] = cfg.model.fourier_bands;
    m["leaky_slope"] = cfg.model.leaky_slope;
    m["out_mlp_width"] = cfg.model.out_mlp_width;
    m["f_t"] = cfg.model.f_t;
    m["f_g"] = cfg.model.f_g;
    j["model"] = m;
    j["feature_norm"] = {{"mean", cfg.feature_norm.mean}, {"stdev", cfg.feature_norm.stdev}};
    return j;
}

CheckpointConfig config_from_json(const json& j) {
    CheckpointConfig cfg;
    cfg.mode = mode_from_string(j.at("mode").get<std::string>());
    cfg.clique_cap = j.at("clique_cap").get<int>();
    cfg.feature_coarsen = j.at("feature_coarsen").get<int>();
    const json& m = j.at("model");
    cfg.model.l = m.at("l").get<int>();
    cfg.model.d = m.at("d").get<int>();
    cfg.model.heads = m.at("heads").get<int>();
    cfg.model.K = m.at("K").get<int>();
    cfg.model.cutoff = m.at("cutoff").get<double>();
    cfg.model.fourier_bands = m.at("fourier_bands").get<int>();
    cfg.model.leaky_slope = m.at("leaky_slope").get<double>();
    cfg.model.out_mlp_width = m.at("out_mlp_width").get<int>();
    cfg.model.f_t = m.at("f_t").get<int>();
    cfg.model.f_g = m.at("f_g").get<int>();
    cfg.feature_norm.mean = j.at("feature_norm").at("mean").get<std::vector<double>>();
    cfg.feature_norm.stdev = j.at("feature_norm").at("stdev").get<std::vector<double>>();
    cfg.model.validate();
    return cfg;
}

} // namespace

void save_checkpoint(const std::string& dir, const ModelParams<float>& params,
                     const CheckpointConfig& cfg) {
    const std::filesystem::path root(dir);
    std::filesystem::create_directories(root);

    json manifest;
    manifest["dtype"] = "f32";
    json tensors = json::array();
    std::string blob;
    size_t offset = 0;
    for (const auto& [name, t] : params.items) {
        json e;
        e["name"] = name;
        e["shape"] = t.shape;
        e["dtype"] = "f32";
        e["byte_offset"] = offset;
        tensors.push_back(std::move(e));
        const size_t bytes = t.data.size() * sizeof(float);
        blob.append(reinterpret_cast<const char*>(t.data.data()), bytes);
        offset += bytes;
    }
    manifest["total_bytes"] = offset;
    manifest["tensors"] = std::move(tensors);

    write_file(root / "params.bin", blob);
    write_file(root / "manifest.json", manifest.dump(2) + "\n");
    write_file(root / "config.json", config_to_json(cfg).dump(2) + "\n");
}

std::pair<ModelParams<float>, CheckpointConfig> load_checkpoint(const std::string& dir) {
    const std::filesystem::path root(dir);
    const json manifest = json::parse(read_file(root / "manifest.json"));
    const std::string blob = read_file(root / "params.bin");
    const size_t total = manifest.at("total_bytes").get<size_t>();
    if (blob.size() != total)
        throw std::runtime_error("checkpoint: params.bin size mismatch (expected " +
                                 std::to_string(total) + " bytes, found " +
                                 std::to_string(blob.size()) + ")");

    ModelParams<float> params;
    for (const json& e : manifest.at("tensors")) {
        if (e.at("dtype").get<std::string>() != "f32")
            throw std::runtime_error("checkpoint: unsupported dtype " +
                                     e.at("dtype").get<std::string>());
        const auto shape = e.at("shape").get<std::vector<int>>();
        Tensor<float> t(shape);
        const size_t offset = e.at("byte_offset").get<size_t>();
        const size_t bytes = t.data.size() * sizeof(float);
        if (offset + bytes > blob.size())
            throw std::runtime_error("checkpoint: params.bin size mismatch (tensor '" +
                                     e.at("name").get<std::string>() + "' out of range)");
        std::memcpy(t.data.data(), blob.data() + offset, bytes);
        params.items.emplace_back(e.at("name").get<std::string>(), std::move(t));
    }
    return {std::move(params), config_from_json(json::parse(read_file(root / "config.json")))};
}

} // namespace congestnet
