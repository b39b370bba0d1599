// Copyright 2026 ccsbesr contributors
// SPDX-License-Identifier: Apache-2.0

#ifndef CCSBESR_OPS_HPP
#define CCSBESR_OPS_HPP

#include <vector>

#include "ccsbesr/tensor.hpp"

// Differentiable tensor operations. Inputs are never mutated; each op
// returns a fresh tensor and, when grad recording is on and an input is
// tracked, registers its backward closure on the tape.
namespace ccsbesr::ops {

using ccsbesr::Tensor;

enum class PoolMode { kMax, kMean };

// input B x Cin x H x W, weight Cout x Cin x K x K (K odd), bias Cout.
// H' = (H + 2*pad - dil*(K-1) - 1) / stride + 1, zero padding.
template <typename T>
Tensor<T> conv2d(const Tensor<T>& input, const Tensor<T>& weight, const Tensor<T>& bias,
                 int64_t stride = 1, int64_t padding = 0, int64_t dilation = 1);

// B x C x H x W -> B x C x 1 x 1. Max-pool gradient flows to the first
// maximal element in row-major order.
template <typename T>
Tensor<T> global_pool_spatial(const Tensor<T>& x, PoolMode mode);

// B x C x H x W -> B x 1 x H x W, pooling over the channel axis.
template <typename T>
Tensor<T> pool_across_channels(const Tensor<T>& x, PoolMode mode);

template <typename T>
Tensor<T> sigmoid(const Tensor<T>& x);

template <typename T>
Tensor<T> relu(const Tensor<T>& x);

template <typename T>
Tensor<T> leaky_relu(const Tensor<T>& x, T negative_slope);

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b);

template <typename T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b);

// Elementwise product. `b` must have the same rank as `a` and each of its
// extents must equal the matching extent of `a` or 1 (singleton axes
// broadcast). Covers gating by B x C x 1 x 1 and masking by B x 1 x H x W.
template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b);

template <typename T>
Tensor<T> scale(const Tensor<T>& x, T factor);

// |x| with subgradient 0 at 0.
template <typename T>
Tensor<T> abs(const Tensor<T>& x);

template <typename T>
Tensor<T> sum_all(const Tensor<T>& x);

template <typename T>
Tensor<T> mean_all(const Tensor<T>& x);

template <typename T>
Tensor<T> concat_channels(const std::vector<Tensor<T>>& xs);

// q, k: B x C x H x W. out[b,h,i,j] = sum_c q[b,c,h,i] * k[b,c,h,j].
template <typename T>
Tensor<T> batched_width_scores(const Tensor<T>& q, const Tensor<T>& k);

// Softmax over the last axis with max subtraction, any rank >= 1.
template <typename T>
Tensor<T> softmax_last_axis(const Tensor<T>& x);

// B x C x H x W with C divisible by s^2 -> B x C/s^2 x H*s x W*s.
// out(b, c, h*s + dy, w*s + dx) = in(b, c*s^2 + dy*s + dx, h, w).
template <typename T>
Tensor<T> pixel_shuffle(const Tensor<T>& x, int64_t s);

// Exact inverse of pixel_shuffle.
template <typename T>
Tensor<T> pixel_unshuffle(const Tensor<T>& x, int64_t s);

template <typename T>
Tensor<T> transpose_last_two(const Tensor<T>& x);

// m: B x H x W x W row-stochastic map, f: B x C x H x W features.
// out[b,c,h,i] = sum_j m[b,h,i,j] * f[b,c,h,j].
template <typename T>
Tensor<T> warp(const Tensor<T>& m, const Tensor<T>& f);

// Batched product of per-(b,h) W x W matrices.
template <typename T>
Tensor<T> batched_width_matmul(const Tensor<T>& a, const Tensor<T>& b);

// Forward difference along `axis`; the extent of that axis shrinks by 1.
template <typename T>
Tensor<T> diff_axis(const Tensor<T>& x, int axis);

// For B x H x W x W maps: d[b,h,i,j] = m[b,h,i+1,j+1] - m[b,h,i,j],
// the difference along the main diagonal of each W x W slice.
template <typename T>
Tensor<T> diag_diff(const Tensor<T>& x);

// y = x / sum(x over last axis), rows assumed to have nonzero sums.
template <typename T>
Tensor<T> normalize_last_axis(const Tensor<T>& x);

// Nearest-neighbour upscale of B x H x W x W attention by factor s along
// all three positional axes -> B x sH x sW x sW.
template <typename T>
Tensor<T> nearest_upsample_attention(const Tensor<T>& x, int64_t s);

// Nearest-neighbour upscale of a B x C x H x W plane stack by factor s.
// Not differentiable; used for masks.
template <typename T>
Tensor<T> nearest_upsample_plane(const Tensor<T>& x, int64_t s);

// Clamp to [0, 1]. Not differentiable; detaches from the tape.
template <typename T>
Tensor<T> clamp01(const Tensor<T>& x);

}  // namespace ccsbesr::ops

#endif
