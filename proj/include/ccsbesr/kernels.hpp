// Copyright 2026 ccsbesr contributors
// SPDX-License-Identifier: Apache-2.0

#ifndef CCSBESR_KERNELS_HPP
#define CCSBESR_KERNELS_HPP

#include <cstdint>

// Parallel compute kernels. Every kernel parallelises over independent
// output elements with a static schedule, so results are bitwise
// identical for any thread count. Backward kernels accumulate (+=) into
// the gradient buffer. ccsbesr::reference holds serial counterparts used
// as oracles in the tests and in the benchmark tool.
namespace ccsbesr::kernels {

// out[b,oc,oh,ow] = bias[oc] + sum_{ic,kh,kw} in[b,ic,ih,iw] * w[oc,ic,kh,kw]
// with ih = oh*stride - pad + kh*dil, iw likewise; out-of-range taps read 0.
template <typename T>
void conv2d_forward(const T* in, const T* w, const T* bias, T* out,
                    int64_t B, int64_t Cin, int64_t H, int64_t W,
                    int64_t Cout, int64_t K, int64_t stride, int64_t pad, int64_t dil,
                    int64_t Ho, int64_t Wo);

template <typename T>
void conv2d_backward_input(const T* gout, const T* w, T* gin,
                           int64_t B, int64_t Cin, int64_t H, int64_t W,
                           int64_t Cout, int64_t K, int64_t stride, int64_t pad, int64_t dil,
                           int64_t Ho, int64_t Wo);

template <typename T>
void conv2d_backward_weight(const T* gout, const T* in, T* gw,
                            int64_t B, int64_t Cin, int64_t H, int64_t W,
                            int64_t Cout, int64_t K, int64_t stride, int64_t pad, int64_t dil,
                            int64_t Ho, int64_t Wo);

template <typename T>
void conv2d_backward_bias(const T* gout, T* gbias, int64_t B, int64_t Cout, int64_t Ho, int64_t Wo);

// out[b,h,i,j] = sum_c q[b,c,h,i] * k[b,c,h,j]
template <typename T>
void width_scores_forward(const T* q, const T* k, T* out, int64_t B, int64_t C, int64_t H, int64_t W);

template <typename T>
void width_scores_backward_q(const T* gout, const T* k, T* gq, int64_t B, int64_t C, int64_t H, int64_t W);

template <typename T>
void width_scores_backward_k(const T* gout, const T* q, T* gk, int64_t B, int64_t C, int64_t H, int64_t W);

// out[b,c,h,i] = sum_j m[b,h,i,j] * f[b,c,h,j]
template <typename T>
void warp_forward(const T* m, const T* f, T* out, int64_t B, int64_t C, int64_t H, int64_t W);

template <typename T>
void warp_backward_map(const T* gout, const T* f, T* gm, int64_t B, int64_t C, int64_t H, int64_t W);

template <typename T>
void warp_backward_feat(const T* gout, const T* m, T* gf, int64_t B, int64_t C, int64_t H, int64_t W);

// out[b,h,i,j] = sum_k a[b,h,i,k] * bm[b,h,k,j]  (batched W x W matmul)
template <typename T>
void width_matmul_forward(const T* a, const T* bm, T* out, int64_t B, int64_t H, int64_t W);

template <typename T>
void width_matmul_backward_a(const T* gout, const T* bm, T* ga, int64_t B, int64_t H, int64_t W);

template <typename T>
void width_matmul_backward_b(const T* gout, const T* a, T* gb, int64_t B, int64_t H, int64_t W);

// Row-wise softmax over the last axis with max subtraction.
template <typename T>
void softmax_rows(const T* x, T* y, int64_t rows, int64_t n);

// Separable Catmull-Rom resampling of a C x Hin x Win plane stack.
// Half-pixel centre mapping, clamped edges, four taps per axis.
template <typename T>
void bicubic_resample(const T* in, T* out, int64_t C, int64_t Hin, int64_t Win, int64_t Hout, int64_t Wout);

}  // namespace ccsbesr::kernels

#endif
