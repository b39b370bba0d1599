// Copyright 2026 ccsbesr contributors
// SPDX-License-Identifier: Apache-2.0

#include "ccsbesr/init.hpp"

#include <cmath>

#include "ccsbesr/rng.hpp"

namespace ccsbesr {

template <typename T>
Tensor<T> xavier_init(const Shape& shape, uint64_t seed) {
    int64_t fan_in = 0, fan_out = 0;
    switch (shape.size()) {
        case 1:
            fan_in = fan_out = shape[0];
            break;
        case 2:
            fan_out = shape[0];
            fan_in = shape[1];
            break;
        case 4: {
            const int64_t rf = shape[2] * shape[3];
            fan_out = shape[0] * rf;
            fan_in = shape[1] * rf;
            break;
        }
        default:
            throw std::invalid_argument("xavier_init: unsupported rank for shape " + shape_str(shape));
    }
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    Tensor<T> t(shape);
    Rng rng(seed);
    T* p = t.data();
    const int64_t n = t.numel();
    for (int64_t i = 0; i < n; ++i) p[i] = static_cast<T>(rng.uniform(-bound, bound));
    return t;
}

template Tensor<float> xavier_init<float>(const Shape&, uint64_t);
template Tensor<double> xavier_init<double>(const Shape&, uint64_t);

}  // namespace ccsbesr
