// Copyright 2026 ccsbesr contributors
// SPDX-License-Identifier: Apache-2.0

#include "ccsbesr/reference.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace ccsbesr::reference {

template <typename T>
void conv2d_forward(const T* in, const T* w, const T* bias, T* out,
                    int64_t B, int64_t Cin, int64_t H, int64_t W,
                    int64_t Cout, int64_t K, int64_t stride, int64_t pad, int64_t dil,
                    int64_t Ho, int64_t Wo) {
    for (int64_t b = 0; b < B; ++b)
        for (int64_t oc = 0; oc < Cout; ++oc)
            for (int64_t oh = 0; oh < Ho; ++oh)
                for (int64_t ow = 0; ow < Wo; ++ow) {
                    T acc = bias ? bias[oc] : T(0);
                    for (int64_t ic = 0; ic < Cin; ++ic)
                        for (int64_t kh = 0; kh < K; ++kh)
                            for (int64_t kw = 0; kw < K; ++kw) {
                                const int64_t ih = oh * stride - pad + kh * dil;
                                const int64_t iw = ow * stride - pad + kw * dil;
                                if (ih < 0 || ih >= H || iw < 0 || iw >= W) continue;
                                acc += in[((b * Cin + ic) * H + ih) * W + iw] *
                                       w[((oc * Cin + ic) * K + kh) * K + kw];
                            }
                    out[((b * Cout + oc) * Ho + oh) * Wo + ow] = acc;
                }
}

template <typename T>
void width_scores_forward(const T* q, const T* k, T* out, int64_t B, int64_t C, int64_t H, int64_t W) {
    for (int64_t b = 0; b < B; ++b)
        for (int64_t h = 0; h < H; ++h)
            for (int64_t i = 0; i < W; ++i)
                for (int64_t j = 0; j < W; ++j) {
                    T acc = T(0);
                    for (int64_t c = 0; c < C; ++c)
                        acc += q[((b * C + c) * H + h) * W + i] * k[((b * C + c) * H + h) * W + j];
                    out[((b * H + h) * W + i) * W + j] = acc;
                }
}

template <typename T>
void warp_forward(const T* m, const T* f, T* out, int64_t B, int64_t C, int64_t H, int64_t W) {
    for (int64_t b = 0; b < B; ++b)
        for (int64_t c = 0; c < C; ++c)
            for (int64_t h = 0; h < H; ++h)
                for (int64_t i = 0; i < W; ++i) {
                    T acc = T(0);
                    for (int64_t j = 0; j < W; ++j)
                        acc += m[((b * H + h) * W + i) * W + j] * f[((b * C + c) * H + h) * W + j];
                    out[((b * C + c) * H + h) * W + i] = acc;
                }
}

template <typename T>
void width_matmul_forward(const T* a, const T* bm, T* out, int64_t B, int64_t H, int64_t W) {
    for (int64_t b = 0; b < B; ++b)
        for (int64_t h = 0; h < H; ++h)
            for (int64_t i = 0; i < W; ++i)
                for (int64_t j = 0; j < W; ++j) {
                    T acc = T(0);
                    for (int64_t kk = 0; kk < W; ++kk)
                        acc += a[((b * H + h) * W + i) * W + kk] * bm[((b * H + h) * W + kk) * W + j];
                    out[((b * H + h) * W + i) * W + j] = acc;
                }
}

template <typename T>
void softmax_rows(const T* x, T* y, int64_t rows, int64_t n) {
    for (int64_t r = 0; r < rows; ++r) {
        const T* xr = x + r * n;
        T* yr = y + r * n;
        T mx = xr[0];
        for (int64_t i = 1; i < n; ++i)
            if (xr[i] > mx) mx = xr[i];
        T sum = T(0);
        for (int64_t i = 0; i < n; ++i) {
            yr[i] = std::exp(xr[i] - mx);
            sum += yr[i];
        }
        const T inv = T(1) / sum;
        for (int64_t i = 0; i < n; ++i) yr[i] *= inv;
    }
}

namespace {

inline double ref_cubic(double t) {
    const double a = -0.5;
    t = std::fabs(t);
    if (t <= 1.0) return (a + 2.0) * t * t * t - (a + 3.0) * t * t + 1.0;
    if (t < 2.0) return a * t * t * t - 5.0 * a * t * t + 8.0 * a * t - 4.0 * a;
    return 0.0;
}

inline double ref_src_coord(int64_t dst, int64_t src_n, int64_t dst_n) {
    return (static_cast<double>(dst) + 0.5) * (static_cast<double>(src_n) / static_cast<double>(dst_n)) - 0.5;
}

inline int64_t ref_clamp(int64_t v, int64_t n) { return std::max<int64_t>(0, std::min<int64_t>(v, n - 1)); }

}  // namespace

template <typename T>
void bicubic_resample(const T* in, T* out, int64_t C, int64_t Hin, int64_t Win, int64_t Hout, int64_t Wout) {
    std::vector<double> mid(static_cast<size_t>(C * Hin * Wout));
    for (int64_t c = 0; c < C; ++c)
        for (int64_t h = 0; h < Hin; ++h)
            for (int64_t ow = 0; ow < Wout; ++ow) {
                const double x = ref_src_coord(ow, Win, Wout);
                const int64_t base = static_cast<int64_t>(std::floor(x));
                double acc = 0.0;
                for (int64_t k = -1; k <= 2; ++k) {
                    const double wgt = ref_cubic(x - static_cast<double>(base + k));
                    acc += wgt * static_cast<double>(in[(c * Hin + h) * Win + ref_clamp(base + k, Win)]);
                }
                mid[(c * Hin + h) * Wout + ow] = acc;
            }
    for (int64_t c = 0; c < C; ++c)
        for (int64_t oh = 0; oh < Hout; ++oh)
            for (int64_t ow = 0; ow < Wout; ++ow) {
                const double y = ref_src_coord(oh, Hin, Hout);
                const int64_t base = static_cast<int64_t>(std::floor(y));
                double acc = 0.0;
                for (int64_t k = -1; k <= 2; ++k) {
                    const double wgt = ref_cubic(y - static_cast<double>(base + k));
                    acc += wgt * mid[(c * Hin + ref_clamp(base + k, Hin)) * Wout + ow];
                }
                out[(c * Hout + oh) * Wout + ow] = static_cast<T>(acc);
            }
}

template <typename T>
void valid_mask(const T* m, T* mask, int64_t B, int64_t H, int64_t W, T tau) {
    for (int64_t b = 0; b < B; ++b)
        for (int64_t h = 0; h < H; ++h)
            for (int64_t j = 0; j < W; ++j) {
                T sum = T(0);
                for (int64_t k = 0; k < W; ++k) sum += m[((b * H + h) * W + k) * W + j];
                mask[(b * H + h) * W + j] = sum > tau ? T(1) : T(0);
            }
}

#define CCSBESR_REF_INSTANTIATE(T)                                                                      \
    template void conv2d_forward<T>(const T*, const T*, const T*, T*, int64_t, int64_t, int64_t,        \
                                    int64_t, int64_t, int64_t, int64_t, int64_t, int64_t, int64_t,      \
                                    int64_t);                                                            \
    template void width_scores_forward<T>(const T*, const T*, T*, int64_t, int64_t, int64_t, int64_t); \
    template void warp_forward<T>(const T*, const T*, T*, int64_t, int64_t, int64_t, int64_t);         \
    template void width_matmul_forward<T>(const T*, const T*, T*, int64_t, int64_t, int64_t);          \
    template void softmax_rows<T>(const T*, T*, int64_t, int64_t);                                      \
    template void bicubic_resample<T>(const T*, T*, int64_t, int64_t, int64_t, int64_t, int64_t);      \
    template void valid_mask<T>(const T*, T*, int64_t, int64_t, int64_t, T);

CCSBESR_REF_INSTANTIATE(float)
CCSBESR_REF_INSTANTIATE(double)

#undef CCSBESR_REF_INSTANTIATE

}  // namespace ccsbesr::reference
