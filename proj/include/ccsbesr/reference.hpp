// Copyright 2026 ccsbesr contributors
// SPDX-License-Identifier: Apache-2.0

#ifndef CCSBESR_REFERENCE_HPP
#define CCSBESR_REFERENCE_HPP

#include <cstdint>

// Serial reference implementations written as direct transcriptions of
// the definitions, with no blocking, no parallelism and no reuse of the
// kernel code. The tests compare ccsbesr::kernels against these, and the
// benchmark tool times the two side by side.
namespace ccsbesr::reference {

template <typename T>
void conv2d_forward(const T* in, const T* w, const T* bias, T* out,
                    int64_t B, int64_t Cin, int64_t H, int64_t W,
                    int64_t Cout, int64_t K, int64_t stride, int64_t pad, int64_t dil,
                    int64_t Ho, int64_t Wo);

template <typename T>
void width_scores_forward(const T* q, const T* k, T* out, int64_t B, int64_t C, int64_t H, int64_t W);

template <typename T>
void warp_forward(const T* m, const T* f, T* out, int64_t B, int64_t C, int64_t H, int64_t W);

template <typename T>
void width_matmul_forward(const T* a, const T* bm, T* out, int64_t B, int64_t H, int64_t W);

template <typename T>
void softmax_rows(const T* x, T* y, int64_t rows, int64_t n);

// Two-pass scalar resampler that evaluates the cubic kernel weights per
// output pixel from first principles.
template <typename T>
void bicubic_resample(const T* in, T* out, int64_t C, int64_t Hin, int64_t Win, int64_t Hout, int64_t Wout);

// mask[b,0,h,j] = 1 if sum_k m[b,h,k,j] > tau else 0, by scalar loops.
template <typename T>
void valid_mask(const T* m, T* mask, int64_t B, int64_t H, int64_t W, T tau);

}  // namespace ccsbesr::reference

#endif
