#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "sstrec/nn/tensor.hpp"

namespace sstrec::nn {

/// AdamW with decoupled weight decay:
///   p <- p - lr * (m_hat / (sqrt(v_hat) + eps) + weight_decay * p)
struct AdamWState {
    double lr = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 1e-4;
    long step = 0;
    std::vector<std::vector<float>> m, v;

    void check() const {
        if (lr <= 0) throw std::invalid_argument("AdamW: lr <= 0");
        if (beta1 < 0 || beta1 >= 1 || beta2 < 0 || beta2 >= 1)
            throw std::invalid_argument("AdamW: betas outside [0,1)");
    }
};

/// One update over all parameters; moment buffers are allocated lazily and
/// keyed by position, so the parameter list must stay stable across steps.
inline void adamw_step(std::vector<Param*>& params, AdamWState& state) {
    state.check();
    if (state.m.empty()) {
        state.m.resize(params.size());
        state.v.resize(params.size());
        for (size_t p = 0; p < params.size(); ++p) {
            state.m[p].assign(params[p]->value.size(), 0.0f);
            state.v[p].assign(params[p]->value.size(), 0.0f);
        }
    }
    if (state.m.size() != params.size()) throw std::invalid_argument("AdamW: parameter list changed");
    ++state.step;
    double bc1 = 1.0 - std::pow(state.beta1, state.step);
    double bc2 = 1.0 - std::pow(state.beta2, state.step);
    for (size_t p = 0; p < params.size(); ++p) {
        auto& value = params[p]->value.data;
        auto& grad = params[p]->grad.data;
        auto& m = state.m[p];
        auto& v = state.v[p];
        for (size_t i = 0; i < value.size(); ++i) {
            double g = grad[i];
            m[i] = static_cast<float>(state.beta1 * m[i] + (1.0 - state.beta1) * g);
            v[i] = static_cast<float>(state.beta2 * v[i] + (1.0 - state.beta2) * g * g);
            double m_hat = m[i] / bc1;
            double v_hat = v[i] / bc2;
            value[i] = static_cast<float>(
                value[i] - state.lr * (m_hat / (std::sqrt(v_hat) + state.eps) +
                                       state.weight_decay * value[i]));
        }
    }
}

inline void zero_grads(std::vector<Param*>& params) {
    for (auto* p : params) p->zero_grad();
}

}  // namespace sstrec::nn
