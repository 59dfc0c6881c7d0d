#include "congestnet/train.hpp"

#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "congestnet/rng.hpp"
#include "congestnet/textio.hpp"

namespace congestnet {

template <class T>
typename Tape<T>::Id mse_loss(Tape<T>& tape, typename Tape<T>::Id pred,
                              const Tensor<T>& target) {
    const auto t = tape.leaf(target);
    const auto diff = tape.sub(pred, t);
    return tape.mean(tape.mul(diff, diff));
}

template <class T>
double clip_global_norm(std::map<std::string, std::vector<T>>& grads, double max_norm) {
    double sq = 0.0;
    for (const auto& [name, g] : grads)
        for (const T v : g) sq += static_cast<double>(v) * static_cast<double>(v);
    const double norm = std::sqrt(sq);
    if (norm > max_norm && norm > 0.0) {
        const double scale = max_norm / norm;
        for (auto& [name, g] : grads)
            for (T& v : g) v = static_cast<T>(v * scale);
    }
    return norm;
}

template <class T>
void adamw_step(ModelParams<T>& params, const std::map<std::string, std::vector<T>>& grads,
                OptimizerState<T>& state, const TrainConfig& cfg) {
    state.t += 1;
    const T b1 = static_cast<T>(cfg.beta1), b2 = static_cast<T>(cfg.beta2);
    const T bc1 = static_cast<T>(1.0 - std::pow(cfg.beta1, static_cast<double>(state.t)));
    const T bc2 = static_cast<T>(1.0 - std::pow(cfg.beta2, static_cast<double>(state.t)));
    const T lr = static_cast<T>(cfg.lr), eps = static_cast<T>(cfg.eps);
    for (const auto& [name, g] : grads) {
        Tensor<T>& theta = params.find(name);
        if (g.size() != theta.data.size())
            throw std::invalid_argument("adamw: gradient size mismatch for '" + name + "'");
        auto& m = state.m[name];
        auto& v = state.v[name];
        if (m.empty()) m.assign(g.size(), T(0));
        if (v.empty()) v.assign(g.size(), T(0));
        const T wd = is_bias_name(name) ? T(0) : static_cast<T>(cfg.weight_decay);
        for (size_t i = 0; i < g.size(); ++i) {
            m[i] = b1 * m[i] + (T(1) - b1) * g[i];
            v[i] = b2 * v[i] + (T(1) - b2) * g[i] * g[i];
            const T mhat = m[i] / bc1;
            const T vhat = v[i] / bc2;
            theta.data[i] -= lr * (mhat / (std::sqrt(vhat) + eps) + wd * theta.data[i]);
        }
    }
}

std::vector<EpochStats> train_model(ModelParams<float>& params,
                                    const std::vector<TrainDesign>& designs,
                                    const ModelConfig& mcfg, Mode mode, const TrainConfig& tcfg,
                                    const std::function<void(const EpochStats&)>& on_epoch) {
    if (designs.empty()) throw std::invalid_argument("train: no designs");
    std::vector<int> order(designs.size());
    std::iota(order.begin(), order.end(), 0);
    Rng shuffle_rng(tcfg.seed ^ 0x7368756666ULL);
    OptimizerState<float> state;
    std::vector<EpochStats> stats;
    stats.reserve(static_cast<size_t>(tcfg.epochs));

    for (int epoch = 1; epoch <= tcfg.epochs; ++epoch) {
        for (size_t i = order.size() - 1; i > 0; --i)
            std::swap(order[i], order[shuffle_rng.uniform_int(0, static_cast<int64_t>(i))]);
        double loss_sum = 0.0;
        for (const int k : order) {
            const TrainDesign& design = designs[k];
            double lval = 0.0;
            try {
                Tape<float> tape;
                auto fwd = model_forward(tape, params, design.inputs, mcfg, mode, true);
                const auto loss = mse_loss(tape, fwd.yhat, design.target);
                lval = static_cast<double>(tape.value(loss).data[0]);
                if (!std::isfinite(lval)) throw std::runtime_error("loss is not finite");
                tape.backward(loss);
                std::map<std::string, std::vector<float>> grads;
                for (const auto& [name, id] : fwd.param_ids) grads.emplace(name, tape.grad(id));
                clip_global_norm(grads, tcfg.grad_clip_norm);
                adamw_step(params, grads, state, tcfg);
            } catch (const std::exception& e) {
                throw std::runtime_error("train: aborted at epoch " + std::to_string(epoch) +
                                         " on design '" + design.name + "': " + e.what());
            }
            loss_sum += lval;
        }
        stats.push_back({epoch, loss_sum / static_cast<double>(designs.size())});
        if (on_epoch) on_epoch(stats.back());
    }
    return stats;
}

std::string loss_curve_csv(const std::vector<EpochStats>& stats) {
    std::string out = "epoch,loss\n";
    for (const EpochStats& s : stats) {
        out += std::to_string(s.epoch);
        out += ',';
        out += fmt_double(s.mean_loss);
        out += '\n';
    }
    return out;
}

template Tape<float>::Id mse_loss<float>(Tape<float>&, Tape<float>::Id, const Tensor<float>&);
template Tape<double>::Id mse_loss<double>(Tape<double>&, Tape<double>::Id,
                                           const Tensor<double>&);
template double clip_global_norm<float>(std::map<std::string, std::vector<float>>&, double);
template double clip_global_norm<double>(std::map<std::string, std::vector<double>>&, double);
template void adamw_step<float>(ModelParams<float>&,
                                const std::map<std::string, std::vector<float>>&,
                                OptimizerState<float>&, const TrainConfig&);
template void adamw_step<double>(ModelParams<double>&,
                                 const std::map<std::string, std::vector<double>>&,
                                 OptimizerState<double>&, const TrainConfig&);
template struct OptimizerState<float>;
template struct OptimizerState<double>;

} // namespace congestnet
