#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "refsig/nn/tensor.hpp"

namespace refsig::nn {

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

struct AdamState {
    std::vector<std::vector<double>> first;
    std::vector<std::vector<double>> second;
};

// One bias-corrected Adam update at step t (1-based); grads are zeroed after.
template <class T>
void adam_step(const ParameterRefs<T>& params, AdamState& state, const AdamConfig& cfg, std::size_t t) {
    if (state.first.size() != params.size()) {
        state.first.assign(params.size(), {});
        state.second.assign(params.size(), {});
        for (std::size_t i = 0; i < params.size(); ++i) {
            state.first[i].assign(params[i]->size(), 0.0);
            state.second[i].assign(params[i]->size(), 0.0);
        }
    }
    const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(t));
    const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(t));
    for (std::size_t i = 0; i < params.size(); ++i) {
        auto& p = *params[i];
        auto& m = state.first[i];
        auto& v = state.second[i];
        for (std::size_t j = 0; j < p.size(); ++j) {
            const double g = p.grad[j];
            m[j] = cfg.beta1 * m[j] + (1.0 - cfg.beta1) * g;
            v[j] = cfg.beta2 * v[j] + (1.0 - cfg.beta2) * g * g;
            const double mhat = m[j] / c1;
            const double vhat = v[j] / c2;
            p.value[j] -= static_cast<T>(cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps));
        }
        p.zero_grad();
    }
}

template <class T>
class Adam {
public:
    Adam(ParameterRefs<T> params, AdamConfig cfg) : params_(std::move(params)), cfg_(cfg) {}

    void step() { adam_step(params_, state_, cfg_, ++steps_); }
    void set_lr(double lr) { cfg_.lr = lr; }
    std::size_t steps() const { return steps_; }
    const AdamConfig& config() const { return cfg_; }

private:
    ParameterRefs<T> params_;
    AdamConfig cfg_;
    AdamState state_;
    std::size_t steps_ = 0;
};

}  // namespace refsig::nn
