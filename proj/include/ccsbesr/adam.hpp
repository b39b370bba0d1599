// Copyright 2026 ccsbesr contributors
// SPDX-License-Identifier: Apache-2.0

#ifndef CCSBESR_ADAM_HPP
#define CCSBESR_ADAM_HPP

#include <vector>

#include "ccsbesr/tensor.hpp"

namespace ccsbesr {

struct AdamConfig {
    double lr = 3e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

// First and second moment estimates, one pair per parameter tensor, plus
// the shared step counter. The counter advances by exactly 1 per
// adam_step call.
template <typename T>
struct AdamState {
    std::vector<Tensor<T>> m;
    std::vector<Tensor<T>> v;
    int64_t step = 0;
};

template <typename T>
AdamState<T> make_adam_state(const std::vector<Tensor<T>*>& params);

// Bias-corrected Adam update, applied in place to each parameter.
// grads[i] must match params[i] in shape; a zero gradient leaves the
// parameter unchanged only while the moments are also zero.
template <typename T>
void adam_step(const std::vector<Tensor<T>*>& params, const std::vector<Tensor<T>>& grads,
               AdamState<T>& state, const AdamConfig& config);

extern template struct AdamState<float>;
extern template struct AdamState<double>;
extern template AdamState<float> make_adam_state<float>(const std::vector<Tensor<float>*>&);
extern template AdamState<double> make_adam_state<double>(const std::vector<Tensor<double>*>&);
extern template void adam_step<float>(const std::vector<Tensor<float>*>&, const std::vector<Tensor<float>>&,
                                      AdamState<float>&, const AdamConfig&);
extern template void adam_step<double>(const std::vector<Tensor<double>*>&, const std::vector<Tensor<double>>&,
                                       AdamState<double>&, const AdamConfig&);

}  // namespace ccsbesr

#endif
