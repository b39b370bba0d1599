// Copyright 2026 ccsbesr contributors
// SPDX-License-Identifier: Apache-2.0

#ifndef CCSBESR_METRICS_HPP
#define CCSBESR_METRICS_HPP

#include "ccsbesr/tensor.hpp"

namespace ccsbesr {

// 10*log10(peak^2 / MSE) in dB; identical inputs report the positive
// infinity sentinel. Accumulation runs in double regardless of T.
template <typename T>
double psnr(const Tensor<T>& a, const Tensor<T>& b, double peak);

// Mean local SSIM over the valid (un-padded) region with an 11x11
// Gaussian window, sigma 1.5, K1 = 0.01, K2 = 0.03. Inputs are H x W
// planes or C x H x W stacks (averaged across channels first).
// `luminance_range` is the L in C1 = (K1*L)^2, C2 = (K2*L)^2: 1.0 for
// unit-range data, 255.0 for 8-bit.
template <typename T>
double ssim(const Tensor<T>& a, const Tensor<T>& b, double luminance_range = 1.0);

extern template double psnr<float>(const Tensor<float>&, const Tensor<float>&, double);
extern template double psnr<double>(const Tensor<double>&, const Tensor<double>&, double);
extern template double ssim<float>(const Tensor<float>&, const Tensor<float>&, double);
extern template double ssim<double>(const Tensor<double>&, const Tensor<double>&, double);

}  // namespace ccsbesr

#endif
