#pragma once

#include <string>
#include <utility>

#include "congestnet/model.hpp"

namespace congestnet {

// Everything needed to rebuild model inputs at eval/predict time exactly the
// way training saw them.
struct CheckpointConfig {
    ModelConfig model;
    Mode mode = Mode::full;
    int clique_cap = 16;
    int feature_coarsen = 4;
    FeatureNorm feature_norm;
};

// Layout on disk (directory):
//   manifest.json  — {"dtype":"f32","total_bytes":N,"tensors":[{name,shape,dtype,byte_offset}...]}
//   params.bin     — little-endian float32 blob, tensors concatenated in manifest order
//   config.json    — CheckpointConfig
void save_checkpoint(const std::string& dir, const ModelParams<float>& params,
                     const CheckpointConfig& cfg);

// Throws std::runtime_error if the blob length does not match the manifest.
std::pair<ModelParams<float>, CheckpointConfig> load_checkpoint(const std::string& dir);

} // namespace congestnet
