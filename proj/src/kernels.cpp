// Copyright 2026 ccsbesr contributors
// SPDX-License-Identifier: Apache-2.0

#include "ccsbesr/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace ccsbesr::kernels {

namespace {

// Catmull-Rom cubic, a = -0.5. t is the distance from the sample centre.
inline double cubic_weight(double t) {
    t = std::fabs(t);
    if (t <= 1.0) return (1.5 * t - 2.5) * t * t + 1.0;
    if (t < 2.0) return ((-0.5 * t + 2.5) * t - 4.0) * t + 2.0;
    return 0.0;
}

struct Taps {
    int64_t idx[4];
    double w[4];
};

// Half-pixel centre mapping from destination to source coordinates,
// with the four tap indices clamped to the valid range.
inline Taps make_taps(int64_t dst, int64_t src_n, int64_t dst_n) {
    double x = (static_cast<double>(dst) + 0.5) * (static_cast<double>(src_n) / static_cast<double>(dst_n)) - 0.5;
    double base = std::floor(x);
    double frac = x - base;
    Taps t;
    for (int k = 0; k < 4; ++k) {
        int64_t raw = static_cast<int64_t>(base) + k - 1;
        t.idx[k] = std::clamp<int64_t>(raw, 0, src_n - 1);
        t.w[k] = cubic_weight(frac - static_cast<double>(k - 1));
    }
    return t;
}

}  // namespace

template <typename T>
void conv2d_forward(const T* in, const T* w, const T* bias, T* out,
                    int64_t B, int64_t Cin, int64_t H, int64_t W,
                    int64_t Cout, int64_t K, int64_t stride, int64_t pad, int64_t dil,
                    int64_t Ho, int64_t Wo) {
    const int64_t total = B * Cout * Ho;
#pragma omp parallel for schedule(static)
    for (int64_t t = 0; t < total; ++t) {
        const int64_t oh = t % Ho;
        const int64_t oc = (t / Ho) % Cout;
        const int64_t b = t / (Ho * Cout);
        const T* in_b = in + b * Cin * H * W;
        const T* w_oc = w + oc * Cin * K * K;
        T* out_row = out + ((b * Cout + oc) * Ho + oh) * Wo;
        for (int64_t ow = 0; ow < Wo; ++ow) {
            T acc = bias ? bias[oc] : T(0);
            for (int64_t ic = 0; ic < Cin; ++ic) {
                const T* in_c = in_b + ic * H * W;
                const T* w_c = w_oc + ic * K * K;
                for (int64_t kh = 0; kh < K; ++kh) {
                    const int64_t ih = oh * stride - pad + kh * dil;
                    if (ih < 0 || ih >= H) continue;
                    for (int64_t kw = 0; kw < K; ++kw) {
                        const int64_t iw = ow * stride - pad + kw * dil;
                        if (iw < 0 || iw >= W) continue;
                        acc += in_c[ih * W + iw] * w_c[kh * K + kw];
                    }
                }
            }
            out_row[ow] = acc;
        }
    }
}

template <typename T>
void conv2d_backward_input(const T* gout, const T* w, T* gin,
                           int64_t B, int64_t Cin, int64_t H, int64_t W,
                           int64_t Cout, int64_t K, int64_t stride, int64_t pad, int64_t dil,
                           int64_t Ho, int64_t Wo) {
    const int64_t total = B * Cin * H;
#pragma omp parallel for schedule(static)
    for (int64_t t = 0; t < total; ++t) {
        const int64_t ih = t % H;
        const int64_t ic = (t / H) % Cin;
        const int64_t b = t / (H * Cin);
        T* gin_row = gin + ((b * Cin + ic) * H + ih) * W;
        for (int64_t iw = 0; iw < W; ++iw) {
            T acc = T(0);
            for (int64_t kh = 0; kh < K; ++kh) {
                const int64_t num_h = ih + pad - kh * dil;
                if (num_h < 0 || num_h % stride != 0) continue;
                const int64_t oh = num_h / stride;
                if (oh >= Ho) continue;
                for (int64_t kw = 0; kw < K; ++kw) {
                    const int64_t num_w = iw + pad - kw * dil;
                    if (num_w < 0 || num_w % stride != 0) continue;
                    const int64_t ow = num_w / stride;
                    if (ow >= Wo) continue;
                    for (int64_t oc = 0; oc < Cout; ++oc) {
                        acc += gout[((b * Cout + oc) * Ho + oh) * Wo + ow] *
                               w[((oc * Cin + ic) * K + kh) * K + kw];
                    }
                }
            }
            gin_row[iw] += acc;
        }
    }
}

template <typename T>
void conv2d_backward_weight(const T* gout, const T* in, T* gw,
                            int64_t B, int64_t Cin, int64_t H, int64_t W,
                            int64_t Cout, int64_t K, int64_t stride, int64_t pad, int64_t dil,
                            int64_t Ho, int64_t Wo) {
    const int64_t total = Cout * Cin * K * K;
#pragma omp parallel for schedule(static)
    for (int64_t t = 0; t < total; ++t) {
        const int64_t kw = t % K;
        const int64_t kh = (t / K) % K;
        const int64_t ic = (t / (K * K)) % Cin;
        const int64_t oc = t / (K * K * Cin);
        T acc = T(0);
        for (int64_t b = 0; b < B; ++b) {
            for (int64_t oh = 0; oh < Ho; ++oh) {
                const int64_t ih = oh * stride - pad + kh * dil;
                if (ih < 0 || ih >= H) continue;
                for (int64_t ow = 0; ow < Wo; ++ow) {
                    const int64_t iw = ow * stride - pad + kw * dil;
                    if (iw < 0 || iw >= W) continue;
                    acc += gout[((b * Cout + oc) * Ho + oh) * Wo + ow] *
                           in[((b * Cin + ic) * H + ih) * W + iw];
                }
            }
        }
        gw[t] += acc;
    }
}

template <typename T>
void conv2d_backward_bias(const T* gout, T* gbias, int64_t B, int64_t Cout, int64_t Ho, int64_t Wo) {
#pragma omp parallel for schedule(static)
    for (int64_t oc = 0; oc < Cout; ++oc) {
        T acc = T(0);
        for (int64_t b = 0; b < B; ++b) {
            const T* row = gout + (b * Cout + oc) * Ho * Wo;
            for (int64_t i = 0; i < Ho * Wo; ++i) acc += row[i];
        }
        gbias[oc] += acc;
    }
}

template <typename T>
void width_scores_forward(const T* q, const T* k, T* out, int64_t B, int64_t C, int64_t H, int64_t W) {
    const int64_t total = B * H * W;  // (b, h, i)
#pragma omp parallel for schedule(static)
    for (int64_t t = 0; t < total; ++t) {
        const int64_t i = t % W;
        const int64_t h = (t / W) % H;
        const int64_t b = t / (W * H);
        T* out_row = out + t * W;
        for (int64_t j = 0; j < W; ++j) {
            T acc = T(0);
            for (int64_t c = 0; c < C; ++c) {
                const int64_t base = ((b * C + c) * H + h) * W;
                acc += q[base + i] * k[base + j];
            }
            out_row[j] = acc;
        }
    }
}

template <typename T>
void width_scores_backward_q(const T* gout, const T* k, T* gq, int64_t B, int64_t C, int64_t H, int64_t W) {
    const int64_t total = B * C * H;
#pragma omp parallel for schedule(static)
    for (int64_t t = 0; t < total; ++t) {
        const int64_t h = t % H;
        const int64_t c = (t / H) % C;
        const int64_t b = t / (H * C);
        const T* k_row = k + ((b * C + c) * H + h) * W;
        const T* g_rows = gout + (b * H + h) * W * W;
        T* gq_row = gq + t * W;
        for (int64_t i = 0; i < W; ++i) {
            T acc = T(0);
            for (int64_t j = 0; j < W; ++j) acc += g_rows[i * W + j] * k_row[j];
            gq_row[i] += acc;
        }
    }
}

template <typename T>
void width_scores_backward_k(const T* gout, const T* q, T* gk, int64_t B, int64_t C, int64_t H, int64_t W) {
    const int64_t total = B * C * H;
#pragma omp parallel for schedule(static)
    for (int64_t t = 0; t < total; ++t) {
        const int64_t h = t % H;
        const int64_t c = (t / H) % C;
        const int64_t b = t / (H * C);
        const T* q_row = q + ((b * C + c) * H + h) * W;
        const T* g_rows = gout + (b * H + h) * W * W;
        T* gk_row = gk + t * W;
        for (int64_t j = 0; j < W; ++j) {
            T acc = T(0);
            for (int64_t i = 0; i < W; ++i) acc += g_rows[i * W + j] * q_row[i];
            gk_row[j] += acc;
        }
    }
}

template <typename T>
void warp_forward(const T* m, const T* f, T* out, int64_t B, int64_t C, int64_t H, int64_t W) {
    const int64_t total = B * C * H;
#pragma omp parallel for schedule(static)
    for (int64_t t = 0; t < total; ++t) {
        const int64_t h = t % H;
        const int64_t c = (t / H) % C;
        const int64_t b = t / (H * C);
        const T* m_rows = m + (b * H + h) * W * W;
        const T* f_row = f + t * W;
        T* out_row = out + t * W;
        for (int64_t i = 0; i < W; ++i) {
            T acc = T(0);
            for (int64_t j = 0; j < W; ++j) acc += m_rows[i * W + j] * f_row[j];
            out_row[i] = acc;
        }
    }
}

template <typename T>
void warp_backward_map(const T* gout, const T* f, T* gm, int64_t B, int64_t C, int64_t H, int64_t W) {
    const int64_t total = B * H * W;  // (b, h, i)
#pragma omp parallel for schedule(static)
    for (int64_t t = 0; t < total; ++t) {
        const int64_t i = t % W;
        const int64_t h = (t / W) % H;
        const int64_t b = t / (W * H);
        T* gm_row = gm + t * W;
        for (int64_t j = 0; j < W; ++j) {
            T acc = T(0);
            for (int64_t c = 0; c < C; ++c) {
                const int64_t base = ((b * C + c) * H + h) * W;
                acc += gout[base + i] * f[base + j];
            }
            gm_row[j] += acc;
        }
    }
}

template <typename T>
void warp_backward_feat(const T* gout, const T* m, T* gf, int64_t B, int64_t C, int64_t H, int64_t W) {
    const int64_t total = B * C * H;
#pragma omp parallel for schedule(static)
    for (int64_t t = 0; t < total; ++t) {
        const int64_t h = t % H;
        const int64_t b = t / (H * C);
        const T* m_rows = m + (b * H + h) * W * W;
        const T* g_row = gout + t * W;
        T* gf_row = gf + t * W;
        for (int64_t j = 0; j < W; ++j) {
            T acc = T(0);
            for (int64_t i = 0; i < W; ++i) acc += m_rows[i * W + j] * g_row[i];
            gf_row[j] += acc;
        }
    }
}

template <typename T>
void width_matmul_forward(const T* a, const T* bm, T* out, int64_t B, int64_t H, int64_t W) {
    const int64_t total = B * H * W;  // (b, h, i)
#pragma omp parallel for schedule(static)
    for (int64_t t = 0; t < total; ++t) {
        const int64_t i = t % W;
        const int64_t slice = t / W;  // b*H + h
        const T* a_row = a + (slice * W + i) * W;
        const T* b_mat = bm + slice * W * W;
        T* out_row = out + t * W;
        for (int64_t j = 0; j < W; ++j) {
            T acc = T(0);
            for (int64_t k = 0; k < W; ++k) acc += a_row[k] * b_mat[k * W + j];
            out_row[j] = acc;
        }
    }
}

template <typename T>
void width_matmul_backward_a(const T* gout, const T* bm, T* ga, int64_t B, int64_t H, int64_t W) {
    const int64_t total = B * H * W;
#pragma omp parallel for schedule(static)
    for (int64_t t = 0; t < total; ++t) {
        const int64_t slice = t / W;
        const T* g_row = gout + t * W;
        const T* b_mat = bm + slice * W * W;
        T* ga_row = ga + t * W;
        for (int64_t k = 0; k < W; ++k) {
            T acc = T(0);
            for (int64_t j = 0; j < W; ++j) acc += g_row[j] * b_mat[k * W + j];
            ga_row[k] += acc;
        }
    }
}

template <typename T>
void width_matmul_backward_b(const T* gout, const T* a, T* gb, int64_t B, int64_t H, int64_t W) {
    const int64_t total = B * H * W;  // (b, h, k)
#pragma omp parallel for schedule(static)
    for (int64_t t = 0; t < total; ++t) {
        const int64_t k = t % W;
        const int64_t slice = t / W;
        const T* a_col = a + slice * W * W;
        const T* g_mat = gout + slice * W * W;
        T* gb_row = gb + t * W;
        for (int64_t j = 0; j < W; ++j) {
            T acc = T(0);
            for (int64_t i = 0; i < W; ++i) acc += a_col[i * W + k] * g_mat[i * W + j];
            gb_row[j] += acc;
        }
    }
}

template <typename T>
void softmax_rows(const T* x, T* y, int64_t rows, int64_t n) {
#pragma omp parallel for schedule(static)
    for (int64_t r = 0; r < rows; ++r) {
        const T* xr = x + r * n;
        T* yr = y + r * n;
        T mx = xr[0];
        for (int64_t i = 1; i < n; ++i) mx = std::max(mx, xr[i]);
        T sum = T(0);
        for (int64_t i = 0; i < n; ++i) {
            yr[i] = std::exp(xr[i] - mx);
            sum += yr[i];
        }
        const T inv = T(1) / sum;
        for (int64_t i = 0; i < n; ++i) yr[i] *= inv;
    }
}

template <typename T>
void bicubic_resample(const T* in, T* out, int64_t C, int64_t Hin, int64_t Win, int64_t Hout, int64_t Wout) {
    // Horizontal pass with taps precomputed per output column, then a
    // vertical pass with taps precomputed per output row.
    std::vector<Taps> col_taps(static_cast<size_t>(Wout));
    for (int64_t ow = 0; ow < Wout; ++ow) col_taps[static_cast<size_t>(ow)] = make_taps(ow, Win, Wout);
    std::vector<Taps> row_taps(static_cast<size_t>(Hout));
    for (int64_t oh = 0; oh < Hout; ++oh) row_taps[static_cast<size_t>(oh)] = make_taps(oh, Hin, Hout);

    std::vector<double> mid(static_cast<size_t>(C * Hin * Wout));
    const int64_t htotal = C * Hin;
#pragma omp parallel for schedule(static)
    for (int64_t t = 0; t < htotal; ++t) {
        const T* src_row = in + t * Win;
        double* dst_row = mid.data() + t * Wout;
        for (int64_t ow = 0; ow < Wout; ++ow) {
            const Taps& tp = col_taps[static_cast<size_t>(ow)];
            double acc = 0.0;
            for (int k = 0; k < 4; ++k) acc += tp.w[k] * static_cast<double>(src_row[tp.idx[k]]);
            dst_row[ow] = acc;
        }
    }

    const int64_t vtotal = C * Hout;
#pragma omp parallel for schedule(static)
    for (int64_t t = 0; t < vtotal; ++t) {
        const int64_t oh = t % Hout;
        const int64_t c = t / Hout;
        const Taps& tp = row_taps[static_cast<size_t>(oh)];
        const double* mid_c = mid.data() + c * Hin * Wout;
        T* dst_row = out + t * Wout;
        for (int64_t ow = 0; ow < Wout; ++ow) {
            double acc = 0.0;
            for (int k = 0; k < 4; ++k) acc += tp.w[k] * mid_c[tp.idx[k] * Wout + ow];
            dst_row[ow] = static_cast<T>(acc);
        }
    }
}

#define CCSBESR_INSTANTIATE(T)                                                                              \
    template void conv2d_forward<T>(const T*, const T*, const T*, T*, int64_t, int64_t, int64_t, int64_t,  \
                                    int64_t, int64_t, int64_t, int64_t, int64_t, int64_t, int64_t);        \
    template void conv2d_backward_input<T>(const T*, const T*, T*, int64_t, int64_t, int64_t, int64_t,     \
                                           int64_t, int64_t, int64_t, int64_t, int64_t, int64_t, int64_t); \
    template void conv2d_backward_weight<T>(const T*, const T*, T*, int64_t, int64_t, int64_t, int64_t,    \
                                            int64_t, int64_t, int64_t, int64_t, int64_t, int64_t,          \
                                            int64_t);                                                       \
    template void conv2d_backward_bias<T>(const T*, T*, int64_t, int64_t, int64_t, int64_t);               \
    template void width_scores_forward<T>(const T*, const T*, T*, int64_t, int64_t, int64_t, int64_t);     \
    template void width_scores_backward_q<T>(const T*, const T*, T*, int64_t, int64_t, int64_t, int64_t);  \
    template void width_scores_backward_k<T>(const T*, const T*, T*, int64_t, int64_t, int64_t, int64_t);  \
    template void warp_forward<T>(const T*, const T*, T*, int64_t, int64_t, int64_t, int64_t);             \
    template void warp_backward_map<T>(const T*, const T*, T*, int64_t, int64_t, int64_t, int64_t);        \
    template void warp_backward_feat<T>(const T*, const T*, T*, int64_t, int64_t, int64_t, int64_t);       \
    template void width_matmul_forward<T>(const T*, const T*, T*, int64_t, int64_t, int64_t);              \
    template void width_matmul_backward_a<T>(const T*, const T*, T*, int64_t, int64_t, int64_t);           \
    template void width_matmul_backward_b<T>(const T*, const T*, T*, int64_t, int64_t, int64_t);           \
    template void softmax_rows<T>(const T*, T*, int64_t, int64_t);                                         \
    template void bicubic_resample<T>(const T*, T*, int64_t, int64_t, int64_t, int64_t, int64_t);

CCSBESR_INSTANTIATE(float)
CCSBESR_INSTANTIATE(double)

#undef CCSBESR_INSTANTIATE

}  // namespace ccsbesr::kernels
