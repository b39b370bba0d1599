// Copyright 2026 ccsbesr contributors
// SPDX-License-Identifier: Apache-2.0

#include "ccsbesr/adam.hpp"

#include <cmath>

namespace ccsbesr {

template <typename T>
AdamState<T> make_adam_state(const std::vector<Tensor<T>*>& params) {
    AdamState<T> st;
    st.m.reserve(params.size());
    st.v.reserve(params.size());
    for (const Tensor<T>* p : params) {
        st.m.emplace_back(p->shape());
        st.v.emplace_back(p->shape());
    }
    return st;
}

template <typename T>
void adam_step(const std::vector<Tensor<T>*>& params, const std::vector<Tensor<T>>& grads,
               AdamState<T>& state, const AdamConfig& config) {
    if (params.size() != grads.size())
        throw std::invalid_argument("adam_step: " + std::to_string(params.size()) + " parameters but " +
                                    std::to_string(grads.size()) + " gradients");
    if (state.m.size() != params.size())
        throw std::invalid_argument("adam_step: state holds " + std::to_string(state.m.size()) +
                                    " moment pairs for " + std::to_string(params.size()) + " parameters");
    for (size_t i = 0; i < params.size(); ++i) {
        if (params[i]->shape() != grads[i].shape())
            throw std::invalid_argument("adam_step: parameter " + std::to_string(i) + " has shape " +
                                        shape_str(params[i]->shape()) + " but gradient has shape " +
                                        shape_str(grads[i].shape()));
        if (state.m[i].shape() != params[i]->shape())
            throw std::invalid_argument("adam_step: state " + std::to_string(i) + " has shape " +
                                        shape_str(state.m[i].shape()) + " but parameter has shape " +
                                        shape_str(params[i]->shape()));
    }

    state.step += 1;
    const T b1 = static_cast<T>(config.beta1);
    const T b2 = static_cast<T>(config.beta2);
    const T corr1 = T(1) - static_cast<T>(std::pow(config.beta1, static_cast<double>(state.step)));
    const T corr2 = T(1) - static_cast<T>(std::pow(config.beta2, static_cast<double>(state.step)));
    const T lr = static_cast<T>(config.lr);
    const T eps = static_cast<T>(config.eps);

    for (size_t i = 0; i < params.size(); ++i) {
        T* p = params[i]->data();
        const T* g = grads[i].data();
        T* m = state.m[i].data();
        T* v = state.v[i].data();
        const int64_t n = params[i]->numel();
#pragma omp parallel for schedule(static)
        for (int64_t j = 0; j < n; ++j) {
            m[j] = b1 * m[j] + (T(1) - b1) * g[j];
            v[j] = b2 * v[j] + (T(1) - b2) * g[j] * g[j];
            const T mhat = m[j] / corr1;
            const T vhat = v[j] / corr2;
            p[j] -= lr * mhat / (std::sqrt(vhat) + eps);
        }
    }
}

template struct AdamState<float>;
template struct AdamState<double>;
template AdamState<float> make_adam_state<float>(const std::vector<Tensor<float>*>&);
template AdamState<double> make_adam_state<double>(const std::vector<Tensor<double>*>&);
template void adam_step<float>(const std::vector<Tensor<float>*>&, const std::vector<Tensor<float>>&,
                               AdamState<float>&, const AdamConfig&);
template void adam_step<double>(const std::vector<Tensor<double>*>&, const std::vector<Tensor<double>>&,
                                AdamState<double>&, const AdamConfig&);

}  // namespace ccsbesr
