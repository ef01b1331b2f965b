#ifndef GAFATT_NN_ADAM_HPP
#define GAFATT_NN_ADAM_HPP

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "gafatt/error.hpp"
#include "gafatt/nn/tensor.hpp"

namespace gafatt::nn {

struct AdamConfig {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

// First/second moment buffers laid out to mirror the parameter list passed to
// adam_step; t counts completed steps.
template <typename T>
struct AdamState {
    AdamConfig config;
    double learning_rate = 1e-3;
    std::uint64_t t = 0;
    std::vector<std::vector<T>> m;
    std::vector<std::vector<T>> v;

    AdamState() = default;
    AdamState(std::span<Tensor<T>* const> params, double lr, AdamConfig cfg = {})
        : config(cfg), learning_rate(lr) {
        if (!(lr > 0)) fail(ErrorCategory::config, "adam: learning rate must be positive");
        m.reserve(params.size());
        v.reserve(params.size());
        for (const Tensor<T>* p : params) {
            m.emplace_back(p->size(), T{0});
            v.emplace_back(p->size(), T{0});
        }
    }
};

// One bias-corrected Adam update from the gradients accumulated in
// param->grad. Gradients are left untouched; callers zero them per step.
template <typename T>
void adam_step(std::span<Tensor<T>* const> params, AdamState<T>& state) {
    if (params.size() != state.m.size())
        fail(ErrorCategory::shape, "adam_step: parameter list does not match optimizer state");
    state.t += 1;
    const double b1 = state.config.beta1;
    const double b2 = state.config.beta2;
    const double corr1 = 1.0 - std::pow(b1, static_cast<double>(state.t));
    const double corr2 = 1.0 - std::pow(b2, static_cast<double>(state.t));
    const T lr = static_cast<T>(state.learning_rate);
    const T eps = static_cast<T>(state.config.epsilon);
    for (std::size_t p = 0; p < params.size(); ++p) {
        Tensor<T>& param = *params[p];
        if (param.grad.size() != param.data.size() || param.size() != state.m[p].size())
            fail(ErrorCategory::shape, "adam_step: gradient/state shape mismatch");
        T* m = state.m[p].data();
        T* v = state.v[p].data();
        const T* g = param.grad.data();
        T* w = param.data.data();
        for (std::size_t i = 0; i < param.size(); ++i) {
            m[i] = static_cast<T>(b1) * m[i] + static_cast<T>(1.0 - b1) * g[i];
            v[i] = static_cast<T>(b2) * v[i] + static_cast<T>(1.0 - b2) * g[i] * g[i];
            const T m_hat = m[i] / static_cast<T>(corr1);
            const T v_hat = v[i] / static_cast<T>(corr2);
            w[i] -= lr * m_hat / (std::sqrt(v_hat) + eps);
        }
    }
}

// base_lr * decay^epoch
inline double lr_schedule(int epoch, double base_lr, double decay) {
    return base_lr * std::pow(decay, epoch);
}

}  // namespace gafatt::nn

#endif  // GAFATT_NN_ADAM_HPP
