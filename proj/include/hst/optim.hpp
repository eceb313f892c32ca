#pragma once

#include <cmath>
#include <limits>
#include <vector>

#include "hst/network.hpp"

namespace hst::nn {

struct AdamConfig {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

// Per-parameter first/second moment estimates mirroring the network layout.
template <typename T>
struct AdamState {
    AdamConfig cfg;
    long long t = 0;
    std::vector<std::vector<Tensor<T>>> m, v;

    static AdamState init(const Network<T>& net, AdamConfig cfg) {
        AdamState s;
        s.cfg = cfg;
        s.m.resize(net.params.size());
        s.v.resize(net.params.size());
        for (std::size_t i = 0; i < net.params.size(); ++i) {
            for (const auto& p : net.params[i]) {
                s.m[i].push_back(Tensor<T>(p.shape));
                s.v[i].push_back(Tensor<T>(p.shape));
            }
        }
        return s;
    }
};

// One bias-corrected Adam update over all layers. Layers whose mask entry is
// false keep their parameters and moments untouched (their gradients are
// discarded). An empty mask trains everything.
template <typename T>
void adam_step(AdamState<T>& state, Network<T>& net, const Gradients<T>& grads,
               const std::vector<bool>& mask = {}) {
    state.t += 1;
    const double b1 = state.cfg.beta1, b2 = state.cfg.beta2;
    const double bc1 = 1.0 - std::pow(b1, static_cast<double>(state.t));
    const double bc2 = 1.0 - std::pow(b2, static_cast<double>(state.t));
    const double lr = state.cfg.learning_rate, eps = state.cfg.epsilon;
    for (std::size_t li = 0; li < net.params.size(); ++li) {
        if (net.params[li].empty()) continue;
        if (!mask.empty() && !mask[li]) continue;
        for (std::size_t pi = 0; pi < net.params[li].size(); ++pi) {
            Tensor<T>& p = net.params[li][pi];
            const Tensor<T>& g = grads.per_layer[li][pi];
            Tensor<T>& m = state.m[li][pi];
            Tensor<T>& v = state.v[li][pi];
            for (std::size_t i = 0; i < p.size(); ++i) {
                const double gi = g.data[i];
                const double mi = b1 * m.data[i] + (1.0 - b1) * gi;
                const double vi = b2 * v.data[i] + (1.0 - b2) * gi * gi;
                m.data[i] = static_cast<T>(mi);
                v.data[i] = static_cast<T>(vi);
                const double mhat = mi / bc1;
                const double vhat = vi / bc2;
                p.data[i] = static_cast<T>(p.data[i] - lr * mhat / (std::sqrt(vhat) + eps));
            }
        }
    }
}

struct PlateauConfig {
    double factor = 0.1;
    int patience = 5;
};

// Reduce-on-plateau: multiply the learning rate by `factor` once the
// monitored metric has failed to improve (strictly) for more than `patience`
// consecutive epochs.
class PlateauScheduler {
public:
    PlateauScheduler(PlateauConfig cfg, double initial_lr)
        : cfg_(cfg), current_lr_(initial_lr) {}

    double step(double epoch_metric) {
        if (epoch_metric < best_) {
            best_ = epoch_metric;
            bad_epochs_ = 0;
        } else if (++bad_epochs_ > cfg_.patience) {
            current_lr_ *= cfg_.factor;
            bad_epochs_ = 0;
        }
        return current_lr_;
    }

    double lr() const { return current_lr_; }
    double best_metric() const { return best_; }
    int epochs_since_improvement() const { return bad_epochs_; }

private:
    PlateauConfig cfg_;
    double best_ = std::numeric_limits<double>::infinity();
    int bad_epochs_ = 0;
    double current_lr_;
};

}  // namespace hst::nn
