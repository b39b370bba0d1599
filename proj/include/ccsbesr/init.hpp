// Copyright 2026 ccsbesr contributors
// SPDX-License-Identifier: Apache-2.0

#ifndef CCSBESR_INIT_HPP
#define CCSBESR_INIT_HPP

#include <cstdint>

#include "ccsbesr/tensor.hpp"

namespace ccsbesr {

// Xavier/Glorot uniform fill: U(-b, b) with b = sqrt(6 / (fan_in + fan_out)).
// For rank-4 conv weights, fan_in = Cin*K*K and fan_out = Cout*K*K; for
// rank-2 matrices, fan_in = cols and fan_out = rows. The same seed always
// produces the same tensor.
template <typename T>
Tensor<T> xavier_init(const Shape& shape, uint64_t seed);

extern template Tensor<float> xavier_init<float>(const Shape&, uint64_t);
extern template Tensor<double> xavier_init<double>(const Shape&, uint64_t);

}  // namespace ccsbesr

#endif
