#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "congestnet/model.hpp"
#include "congestnet/tape.hpp"

namespace congestnet {

struct TrainConfig {
    int epochs = 500;
    double lr = 2e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 0.01; // decoupled; skipped for bias tensors
    double grad_clip_norm = 5.0;
    uint64_t seed = 0;
    int log_every = 25;
};

template <class T>
struct OptimizerState {
    int64_t t = 0;
    std::map<std::string, std::vector<T>> m, v; // sized lazily on first step
};

// Mean squared error between a rank-2 prediction node and a same-shaped
// target, recorded on the tape: mean((pred - target)^2).
template <class T>
typename Tape<T>::Id mse_loss(Tape<T>& tape, typename Tape<T>::Id pred,
                              const Tensor<T>& target);

// Global L2-norm clipping across every gradient in `grads`; scales in place
// when the joint norm exceeds `max_norm`. Returns the pre-clip norm.
template <class T>
double clip_global_norm(std::map<std::string, std::vector<T>>& grads, double max_norm);

// One decoupled-weight-decay Adam update:
//   t += 1
//   m = b1*m + (1-b1)*g;  v = b2*v + (1-b2)*g^2
//   mhat = m/(1-b1^t);    vhat = v/(1-b2^t)
//   theta -= lr * (mhat/(sqrt(vhat)+eps) + wd*theta)
// Only parameters present in `grads` are touched; wd = 0 for bias tensors.
template <class T>
void adamw_step(ModelParams<T>& params, const std::map<std::string, std::vector<T>>& grads,
                OptimizerState<T>& state, const TrainConfig& cfg);

// One design, fully prepared for stepping.
struct TrainDesign {
    std::string name;
    ModelInputs<float> inputs;
    Tensor<float> target; // standardized labels, n x 1
};

struct EpochStats {
    int epoch = 0; // 1-based
    double mean_loss = 0.0;
};

// Full-batch-per-design training loop: every epoch visits each design once in
// a seed-shuffled order, runs forward/backward on a fresh tape, clips the
// global gradient norm, and applies one AdamW step. Throws std::runtime_error
// naming the epoch and design if the loss goes non-finite.
std::vector<EpochStats> train_model(ModelParams<float>& params,
                                    const std::vector<TrainDesign>& designs,
                                    const ModelConfig& mcfg, Mode mode, const TrainConfig& tcfg,
                                    const std::function<void(const EpochStats&)>& on_epoch = {});

// "epoch,loss" header plus one row per epoch.
std::string loss_curve_csv(const std::vector<EpochStats>& stats);

extern template struct OptimizerState<float>;
extern template struct OptimizerState<double>;

} // namespace congestnet
