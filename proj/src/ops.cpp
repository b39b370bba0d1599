// Copyright 2026 ccsbesr contributors
// SPDX-License-Identifier: Apache-2.0

#include "ccsbesr/ops.hpp"

#include <algorithm>
#include <cmath>

#include "ccsbesr/kernels.hpp"

namespace ccsbesr::ops {

namespace {

using ccsbesr::detail::GradSlot;

void expect(bool cond, const std::string& msg) {
    if (!cond) throw std::invalid_argument(msg);
}

template <typename T>
void expect_rank(const Tensor<T>& t, int rank, const char* op, const char* name) {
    if (t.ndim() != rank)
        throw std::invalid_argument(std::string(op) + ": " + name + " must have rank " + std::to_string(rank) +
                                    ", got shape " + shape_str(t.shape()));
}

// Registers `fn(gout)` as the backward step of `out`. The raw slot
// pointer is valid whenever the closure runs because backward() retains
// every slot it visits.
template <typename T>
void attach(Tensor<T>& out, std::initializer_list<const Tensor<T>*> ins, std::function<void(const T*)> fn) {
    if (!grad_enabled()) return;
    bool tracked = false;
    for (const Tensor<T>* t : ins) tracked |= t->tracked();
    if (!tracked) return;
    GradSlot<T>* os = out.ensure_slot().get();
    detail::make_node(out, ins, [os, f = std::move(fn)]() { f(os->grad.data()); });
}

// Strides of `b` viewed through `a`'s index space; 0 on broadcast axes.
std::vector<int64_t> broadcast_strides(const Shape& a, const Shape& b, const char* op) {
    if (a.size() != b.size())
        throw std::invalid_argument(std::string(op) + ": operands must have equal rank, got " + shape_str(a) +
                                    " and " + shape_str(b));
    const int r = static_cast<int>(a.size());
    std::vector<int64_t> stride(static_cast<size_t>(r), 0);
    int64_t acc = 1;
    for (int i = r - 1; i >= 0; --i) {
        if (b[static_cast<size_t>(i)] != a[static_cast<size_t>(i)] && b[static_cast<size_t>(i)] != 1)
            throw std::invalid_argument(std::string(op) + ": shape " + shape_str(b) +
                                        " does not broadcast to " + shape_str(a));
        stride[static_cast<size_t>(i)] = b[static_cast<size_t>(i)] == 1 ? 0 : acc;
        acc *= b[static_cast<size_t>(i)];
    }
    return stride;
}

// Offset into the broadcast operand for a flat row-major index of `a`.
inline int64_t broadcast_offset(int64_t flat, const Shape& a, const std::vector<int64_t>& stride) {
    int64_t off = 0;
    for (int i = static_cast<int>(a.size()) - 1; i >= 0; --i) {
        const int64_t extent = a[static_cast<size_t>(i)];
        off += (flat % extent) * stride[static_cast<size_t>(i)];
        flat /= extent;
    }
    return off;
}

}  // namespace

template <typename T>
Tensor<T> conv2d(const Tensor<T>& input, const Tensor<T>& weight, const Tensor<T>& bias,
                 int64_t stride, int64_t padding, int64_t dilation) {
    expect_rank(input, 4, "conv2d", "input");
    expect_rank(weight, 4, "conv2d", "weight");
    expect(bias.ndim() == 1, "conv2d: bias must have rank 1, got shape " + shape_str(bias.shape()));
    const int64_t B = input.dim(0), Cin = input.dim(1), H = input.dim(2), W = input.dim(3);
    const int64_t Cout = weight.dim(0), K = weight.dim(2);
    expect(weight.dim(1) == Cin, "conv2d: weight expects " + std::to_string(weight.dim(1)) +
                                     " input channels, input has " + std::to_string(Cin));
    expect(weight.dim(3) == K, "conv2d: kernel must be square, got " + shape_str(weight.shape()));
    expect(K % 2 == 1, "conv2d: kernel extent must be odd, got " + std::to_string(K));
    expect(bias.dim(0) == Cout, "conv2d: bias has " + std::to_string(bias.dim(0)) + " entries for " +
                                    std::to_string(Cout) + " output channels");
    expect(stride >= 1, "conv2d: stride must be >= 1");
    expect(dilation >= 1, "conv2d: dilation must be >= 1");
    expect(padding >= 0, "conv2d: padding must be >= 0");
    const int64_t Ho = (H + 2 * padding - dilation * (K - 1) - 1) / stride + 1;
    const int64_t Wo = (W + 2 * padding - dilation * (K - 1) - 1) / stride + 1;
    expect(H + 2 * padding >= dilation * (K - 1) + 1 && Ho >= 1 && Wo >= 1,
           "conv2d: kernel span exceeds padded input " + shape_str(input.shape()));

    Tensor<T> out(Shape{B, Cout, Ho, Wo});
    kernels::conv2d_forward(input.data(), weight.data(), bias.data(), out.data(),
                            B, Cin, H, W, Cout, K, stride, padding, dilation, Ho, Wo);

    auto xs = input.storage();
    auto ws = weight.storage();
    auto xsl = input.slot();
    auto wsl = weight.slot();
    auto bsl = bias.slot();
    attach<T>(out, {&input, &weight, &bias},
              [=](const T* g) {
                  if (xsl) kernels::conv2d_backward_input(g, ws->data(), xsl->ensure(), B, Cin, H, W, Cout, K,
                                                          stride, padding, dilation, Ho, Wo);
                  if (wsl) kernels::conv2d_backward_weight(g, xs->data(), wsl->ensure(), B, Cin, H, W, Cout, K,
                                                           stride, padding, dilation, Ho, Wo);
                  if (bsl) kernels::conv2d_backward_bias(g, bsl->ensure(), B, Cout, Ho, Wo);
              });
    return out;
}

template <typename T>
Tensor<T> global_pool_spatial(const Tensor<T>& x, PoolMode mode) {
    expect_rank(x, 4, "global_pool_spatial", "input");
    const int64_t B = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
    const int64_t HW = H * W;
    Tensor<T> out(Shape{B, C, 1, 1});
    const T* xi = x.data();
    T* yo = out.data();

    if (mode == PoolMode::kMean) {
#pragma omp parallel for schedule(static)
        for (int64_t p = 0; p < B * C; ++p) {
            T acc = T(0);
            for (int64_t i = 0; i < HW; ++i) acc += xi[p * HW + i];
            yo[p] = acc / static_cast<T>(HW);
        }
        auto xsl = x.slot();
        attach<T>(out, {&x}, [=](const T* g) {
            if (!xsl) return;
            T* gi = xsl->ensure();
#pragma omp parallel for schedule(static)
            for (int64_t p = 0; p < B * C; ++p) {
                const T share = g[p] / static_cast<T>(HW);
                for (int64_t i = 0; i < HW; ++i) gi[p * HW + i] += share;
            }
        });
        return out;
    }

    // Max pool. Gradient is routed to the first maximal element in
    // row-major order, so ties resolve identically on every run.
    auto argmax = std::make_shared<std::vector<int64_t>>(static_cast<size_t>(B * C));
#pragma omp parallel for schedule(static)
    for (int64_t p = 0; p < B * C; ++p) {
        T best = xi[p * HW];
        int64_t best_i = 0;
        for (int64_t i = 1; i < HW; ++i)
            if (xi[p * HW + i] > best) {
                best = xi[p * HW + i];
                best_i = i;
            }
        yo[p] = best;
        (*argmax)[static_cast<size_t>(p)] = best_i;
    }
    auto xsl = x.slot();
    attach<T>(out, {&x}, [=](const T* g) {
        if (!xsl) return;
        T* gi = xsl->ensure();
#pragma omp parallel for schedule(static)
        for (int64_t p = 0; p < B * C; ++p) gi[p * HW + (*argmax)[static_cast<size_t>(p)]] += g[p];
    });
    return out;
}

template <typename T>
Tensor<T> pool_across_channels(const Tensor<T>& x, PoolMode mode) {
    expect_rank(x, 4, "pool_across_channels", "input");
    const int64_t B = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
    const int64_t HW = H * W;
    Tensor<T> out(Shape{B, 1, H, W});
    const T* xi = x.data();
    T* yo = out.data();

    if (mode == PoolMode::kMean) {
#pragma omp parallel for schedule(static)
        for (int64_t t = 0; t < B * HW; ++t) {
            const int64_t b = t / HW, i = t % HW;
            T acc = T(0);
            for (int64_t c = 0; c < C; ++c) acc += xi[(b * C + c) * HW + i];
            yo[t] = acc / static_cast<T>(C);
        }
        auto xsl = x.slot();
        attach<T>(out, {&x}, [=](const T* g) {
            if (!xsl) return;
            T* gi = xsl->ensure();
#pragma omp parallel for schedule(static)
            for (int64_t t = 0; t < B * HW; ++t) {
                const int64_t b = t / HW, i = t % HW;
                const T share = g[t] / static_cast<T>(C);
                for (int64_t c = 0; c < C; ++c) gi[(b * C + c) * HW + i] += share;
            }
        });
        return out;
    }

    auto argmax = std::make_shared<std::vector<int64_t>>(static_cast<size_t>(B * HW));
#pragma omp parallel for schedule(static)
    for (int64_t t = 0; t < B * HW; ++t) {
        const int64_t b = t / HW, i = t % HW;
        T best = xi[b * C * HW + i];
        int64_t best_c = 0;
        for (int64_t c = 1; c < C; ++c)
            if (xi[(b * C + c) * HW + i] > best) {
                best = xi[(b * C + c) * HW + i];
                best_c = c;
            }
        yo[t] = best;
        (*argmax)[static_cast<size_t>(t)] = best_c;
    }
    auto xsl = x.slot();
    attach<T>(out, {&x}, [=](const T* g) {
        if (!xsl) return;
        T* gi = xsl->ensure();
#pragma omp parallel for schedule(static)
        for (int64_t t = 0; t < B * HW; ++t) {
            const int64_t b = t / HW, i = t % HW;
            gi[(b * C + (*argmax)[static_cast<size_t>(t)]) * HW + i] += g[t];
        }
    });
    return out;
}

template <typename T>
Tensor<T> sigmoid(const Tensor<T>& x) {
    Tensor<T> out(x.shape());
    const T* xi = x.data();
    T* yo = out.data();
    const int64_t n = x.numel();
#pragma omp parallel for schedule(static)
    for (int64_t i = 0; i < n; ++i) yo[i] = T(1) / (T(1) + std::exp(-xi[i]));
    auto ys = out.storage();
    auto xsl = x.slot();
    attach<T>(out, {&x}, [=](const T* g) {
        if (!xsl) return;
        T* gi = xsl->ensure();
        const T* y = ys->data();
#pragma omp parallel for schedule(static)
        for (int64_t i = 0; i < n; ++i) gi[i] += g[i] * y[i] * (T(1) - y[i]);
    });
    return out;
}

template <typename T>
Tensor<T> relu(const Tensor<T>& x) {
    Tensor<T> out(x.shape());
    const T* xi = x.data();
    T* yo = out.data();
    const int64_t n = x.numel();
#pragma omp parallel for schedule(static)
    for (int64_t i = 0; i < n; ++i) yo[i] = xi[i] > T(0) ? xi[i] : T(0);
    auto xs = x.storage();
    auto xsl = x.slot();
    attach<T>(out, {&x}, [=](const T* g) {
        if (!xsl) return;
        T* gi = xsl->ensure();
        const T* xv = xs->data();
#pragma omp parallel for schedule(static)
        for (int64_t i = 0; i < n; ++i)
            if (xv[i] > T(0)) gi[i] += g[i];
    });
    return out;
}

template <typename T>
Tensor<T> leaky_relu(const Tensor<T>& x, T negative_slope) {
    Tensor<T> out(x.shape());
    const T* xi = x.data();
    T* yo = out.data();
    const int64_t n = x.numel();
#pragma omp parallel for schedule(static)
    for (int64_t i = 0; i < n; ++i) yo[i] = xi[i] > T(0) ? xi[i] : negative_slope * xi[i];
    auto xs = x.storage();
    auto xsl = x.slot();
    attach<T>(out, {&x}, [=](const T* g) {
        if (!xsl) return;
        T* gi = xsl->ensure();
        const T* xv = xs->data();
#pragma omp parallel for schedule(static)
        for (int64_t i = 0; i < n; ++i) gi[i] += g[i] * (xv[i] > T(0) ? T(1) : negative_slope);
    });
    return out;
}

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
    expect(a.shape() == b.shape(),
           "add: shapes " + shape_str(a.shape()) + " and " + shape_str(b.shape()) + " differ");
    Tensor<T> out(a.shape());
    const T* av = a.data();
    const T* bv = b.data();
    T* yo = out.data();
    const int64_t n = a.numel();
#pragma omp parallel for schedule(static)
    for (int64_t i = 0; i < n; ++i) yo[i] = av[i] + bv[i];
    auto asl = a.slot();
    auto bsl = b.slot();
    attach<T>(out, {&a, &b}, [=](const T* g) {
        if (asl) {
            T* ga = asl->ensure();
#pragma omp parallel for schedule(static)
            for (int64_t i = 0; i < n; ++i) ga[i] += g[i];
        }
        if (bsl) {
            T* gb = bsl->ensure();
#pragma omp parallel for schedule(static)
            for (int64_t i = 0; i < n; ++i) gb[i] += g[i];
        }
    });
    return out;
}

template <typename T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b) {
    expect(a.shape() == b.shape(),
           "sub: shapes " + shape_str(a.shape()) + " and " + shape_str(b.shape()) + " differ");
    Tensor<T> out(a.shape());
    const T* av = a.data();
    const T* bv = b.data();
    T* yo = out.data();
    const int64_t n = a.numel();
#pragma omp parallel for schedule(static)
    for (int64_t i = 0; i < n; ++i) yo[i] = av[i] - bv[i];
    auto asl = a.slot();
    auto bsl = b.slot();
    attach<T>(out, {&a, &b}, [=](const T* g) {
        if (asl) {
            T* ga = asl->ensure();
#pragma omp parallel for schedule(static)
            for (int64_t i = 0; i < n; ++i) ga[i] += g[i];
        }
        if (bsl) {
            T* gb = bsl->ensure();
#pragma omp parallel for schedule(static)
            for (int64_t i = 0; i < n; ++i) gb[i] -= g[i];
        }
    });
    return out;
}

template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
    const bool same = a.shape() == b.shape();
    const auto stride = same ? std::vector<int64_t>{} : broadcast_strides(a.shape(), b.shape(), "mul");
    Tensor<T> out(a.shape());
    const T* av = a.data();
    const T* bv = b.data();
    T* yo = out.data();
    const int64_t n = a.numel();
    const Shape ash = a.shape();
    if (same) {
#pragma omp parallel for schedule(static)
        for (int64_t i = 0; i < n; ++i) yo[i] = av[i] * bv[i];
    } else {
#pragma omp parallel for schedule(static)
        for (int64_t i = 0; i < n; ++i) yo[i] = av[i] * bv[broadcast_offset(i, ash, stride)];
    }
    auto as = a.storage();
    auto bs = b.storage();
    auto asl = a.slot();
    auto bsl = b.slot();
    attach<T>(out, {&a, &b}, [=](const T* g) {
        if (asl) {
            T* ga = asl->ensure();
            const T* bp = bs->data();
            if (same) {
#pragma omp parallel for schedule(static)
                for (int64_t i = 0; i < n; ++i) ga[i] += g[i] * bp[i];
            } else {
#pragma omp parallel for schedule(static)
                for (int64_t i = 0; i < n; ++i) ga[i] += g[i] * bp[broadcast_offset(i, ash, stride)];
            }
        }
        if (bsl) {
            T* gb = bsl->ensure();
            const T* ap = as->data();
            if (same) {
#pragma omp parallel for schedule(static)
                for (int64_t i = 0; i < n; ++i) gb[i] += g[i] * ap[i];
            } else {
                // Serial reduction into the broadcast operand keeps the
                // accumulation order fixed.
                for (int64_t i = 0; i < n; ++i) gb[broadcast_offset(i, ash, stride)] += g[i] * ap[i];
            }
        }
    });
    return out;
}

template <typename T>
Tensor<T> scale(const Tensor<T>& x, T factor) {
    Tensor<T> out(x.shape());
    const T* xi = x.data();
    T* yo = out.data();
    const int64_t n = x.numel();
#pragma omp parallel for schedule(static)
    for (int64_t i = 0; i < n; ++i) yo[i] = factor * xi[i];
    auto xsl = x.slot();
    attach<T>(out, {&x}, [=](const T* g) {
        if (!xsl) return;
        T* gi = xsl->ensure();
#pragma omp parallel for schedule(static)
        for (int64_t i = 0; i < n; ++i) gi[i] += factor * g[i];
    });
    return out;
}

template <typename T>
Tensor<T> abs(const Tensor<T>& x) {
    Tensor<T> out(x.shape());
    const T* xi = x.data();
    T* yo = out.data();
    const int64_t n = x.numel();
#pragma omp parallel for schedule(static)
    for (int64_t i = 0; i < n; ++i) yo[i] = std::fabs(xi[i]);
    auto xs = x.storage();
    auto xsl = x.slot();
    attach<T>(out, {&x}, [=](const T* g) {
        if (!xsl) return;
        T* gi = xsl->ensure();
        const T* xv = xs->data();
#pragma omp parallel for schedule(static)
        for (int64_t i = 0; i < n; ++i) {
            if (xv[i] > T(0))
                gi[i] += g[i];
            else if (xv[i] < T(0))
                gi[i] -= g[i];
        }
    });
    return out;
}

template <typename T>
Tensor<T> sum_all(const Tensor<T>& x) {
    Tensor<T> out(Shape{1});
    const T* xi = x.data();
    const int64_t n = x.numel();
    T acc = T(0);
    for (int64_t i = 0; i < n; ++i) acc += xi[i];
    out.data()[0] = acc;
    auto xsl = x.slot();
    attach<T>(out, {&x}, [=](const T* g) {
        if (!xsl) return;
        T* gi = xsl->ensure();
        const T gv = g[0];
#pragma omp parallel for schedule(static)
        for (int64_t i = 0; i < n; ++i) gi[i] += gv;
    });
    return out;
}

template <typename T>
Tensor<T> mean_all(const Tensor<T>& x) {
    return scale(sum_all(x), T(1) / static_cast<T>(x.numel()));
}

template <typename T>
Tensor<T> concat_channels(const std::vector<Tensor<T>>& xs) {
    expect(!xs.empty(), "concat_channels: needs at least one input");
    for (const auto& t : xs) expect_rank(t, 4, "concat_channels", "input");
    const int64_t B = xs[0].dim(0), H = xs[0].dim(2), W = xs[0].dim(3);
    int64_t Ctot = 0;
    for (const auto& t : xs) {
        expect(t.dim(0) == B && t.dim(2) == H && t.dim(3) == W,
               "concat_channels: shape " + shape_str(t.shape()) + " does not match " + shape_str(xs[0].shape()));
        Ctot += t.dim(1);
    }
    Tensor<T> out(Shape{B, Ctot, H, W});
    const int64_t HW = H * W;
    T* yo = out.data();
    int64_t c0 = 0;
    for (const auto& t : xs) {
        const int64_t C = t.dim(1);
        const T* xi = t.data();
#pragma omp parallel for schedule(static)
        for (int64_t p = 0; p < B * C; ++p) {
            const int64_t b = p / C, c = p % C;
            std::copy(xi + p * HW, xi + (p + 1) * HW, yo + ((b * Ctot + c0 + c) * HW));
        }
        c0 += C;
    }

    std::vector<std::shared_ptr<GradSlot<T>>> slots;
    std::vector<int64_t> offs;
    std::vector<int64_t> chans;
    int64_t off = 0;
    for (const auto& t : xs) {
        slots.push_back(t.slot());
        offs.push_back(off);
        chans.push_back(t.dim(1));
        off += t.dim(1);
    }
    bool tracked = false;
    for (const auto& s : slots) tracked |= static_cast<bool>(s);
    if (grad_enabled() && tracked) {
        GradSlot<T>* os = out.ensure_slot().get();
        auto node = std::make_shared<detail::Node<T>>();
        node->seq = detail::next_seq();
        for (const auto& s : slots)
            if (s) node->inputs.push_back(s);
        node->out = os;
        node->backprop = [=]() {
            const T* g = os->grad.data();
            for (size_t t = 0; t < slots.size(); ++t) {
                if (!slots[t]) continue;
                T* gi = slots[t]->ensure();
                const int64_t C = chans[t], c0v = offs[t];
#pragma omp parallel for schedule(static)
                for (int64_t p = 0; p < B * C; ++p) {
                    const int64_t b = p / C, c = p % C;
                    const T* gsrc = g + (b * Ctot + c0v + c) * HW;
                    T* gdst = gi + p * HW;
                    for (int64_t i = 0; i < HW; ++i) gdst[i] += gsrc[i];
                }
            }
        };
        out.slot()->creator = node;
    }
    return out;
}

template <typename T>
Tensor<T> batched_width_scores(const Tensor<T>& q, const Tensor<T>& k) {
    expect_rank(q, 4, "batched_width_scores", "q");
    expect_rank(k, 4, "batched_width_scores", "k");
    expect(q.shape() == k.shape(), "batched_width_scores: shapes " + shape_str(q.shape()) + " and " +
                                       shape_str(k.shape()) + " differ");
    const int64_t B = q.dim(0), C = q.dim(1), H = q.dim(2), W = q.dim(3);
    Tensor<T> out(Shape{B, H, W, W});
    kernels::width_scores_forward(q.data(), k.data(), out.data(), B, C, H, W);
    auto qs = q.storage();
    auto ks = k.storage();
    auto qsl = q.slot();
    auto ksl = k.slot();
    attach<T>(out, {&q, &k}, [=](const T* g) {
        if (qsl) kernels::width_scores_backward_q(g, ks->data(), qsl->ensure(), B, C, H, W);
        if (ksl) kernels::width_scores_backward_k(g, qs->data(), ksl->ensure(), B, C, H, W);
    });
    return out;
}

template <typename T>
Tensor<T> softmax_last_axis(const Tensor<T>& x) {
    expect(x.ndim() >= 1, "softmax_last_axis: input must have rank >= 1");
    const int64_t n = x.dim(x.ndim() - 1);
    const int64_t rows = x.numel() / n;
    Tensor<T> out(x.shape());
    kernels::softmax_rows(x.data(), out.data(), rows, n);
    auto ys = out.storage();
    auto xsl = x.slot();
    attach<T>(out, {&x}, [=](const T* g) {
        if (!xsl) return;
        T* gi = xsl->ensure();
        const T* y = ys->data();
#pragma omp parallel for schedule(static)
        for (int64_t r = 0; r < rows; ++r) {
            const T* yr = y + r * n;
            const T* gr = g + r * n;
            T dot = T(0);
            for (int64_t i = 0; i < n; ++i) dot += gr[i] * yr[i];
            T* gir = gi + r * n;
            for (int64_t i = 0; i < n; ++i) gir[i] += yr[i] * (gr[i] - dot);
        }
    });
    return out;
}

template <typename T>
Tensor<T> pixel_shuffle(const Tensor<T>& x, int64_t s) {
    expect_rank(x, 4, "pixel_shuffle", "input");
    expect(s >= 1 && s <= 4, "pixel_shuffle: factor must be in {1,2,3,4}, got " + std::to_string(s));
    const int64_t B = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
    expect(C % (s * s) == 0, "pixel_shuffle: " + std::to_string(C) + " channels not divisible by " +
                                 std::to_string(s * s));
    const int64_t Co = C / (s * s), Ho = H * s, Wo = W * s;
    Tensor<T> out(Shape{B, Co, Ho, Wo});
    const T* xi = x.data();
    T* yo = out.data();
    const int64_t n = out.numel();
#pragma omp parallel for schedule(static)
    for (int64_t idx = 0; idx < n; ++idx) {
        const int64_t ow = idx % Wo;
        const int64_t oh = (idx / Wo) % Ho;
        const int64_t oc = (idx / (Wo * Ho)) % Co;
        const int64_t b = idx / (Wo * Ho * Co);
        const int64_t ic = oc * s * s + (oh % s) * s + (ow % s);
        yo[idx] = xi[((b * C + ic) * H + oh / s) * W + ow / s];
    }
    auto xsl = x.slot();
    attach<T>(out, {&x}, [=](const T* g) {
        if (!xsl) return;
        T* gi = xsl->ensure();
        const int64_t ni = B * C * H * W;
#pragma omp parallel for schedule(static)
        for (int64_t idx = 0; idx < ni; ++idx) {
            const int64_t w = idx % W;
            const int64_t h = (idx / W) % H;
            const int64_t c = (idx / (W * H)) % C;
            const int64_t b = idx / (W * H * C);
            const int64_t oc = c / (s * s), q = c % (s * s);
            gi[idx] += g[((b * Co + oc) * Ho + h * s + q / s) * Wo + w * s + q % s];
        }
    });
    return out;
}

template <typename T>
Tensor<T> pixel_unshuffle(const Tensor<T>& x, int64_t s) {
    expect_rank(x, 4, "pixel_unshuffle", "input");
    expect(s >= 1 && s <= 4, "pixel_unshuffle: factor must be in {1,2,3,4}, got " + std::to_string(s));
    const int64_t B = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
    expect(H % s == 0 && W % s == 0, "pixel_unshuffle: spatial extents of " + shape_str(x.shape()) +
                                         " not divisible by " + std::to_string(s));
    const int64_t Co = C * s * s, Ho = H / s, Wo = W / s;
    Tensor<T> out(Shape{B, Co, Ho, Wo});
    const T* xi = x.data();
    T* yo = out.data();
    const int64_t n = out.numel();
#pragma omp parallel for schedule(static)
    for (int64_t idx = 0; idx < n; ++idx) {
        const int64_t ow = idx % Wo;
        const int64_t oh = (idx / Wo) % Ho;
        const int64_t oc = (idx / (Wo * Ho)) % Co;
        const int64_t b = idx / (Wo * Ho * Co);
        const int64_t c = oc / (s * s), q = oc % (s * s);
        yo[idx] = xi[((b * C + c) * H + oh * s + q / s) * W + ow * s + q % s];
    }
    auto xsl = x.slot();
    attach<T>(out, {&x}, [=](const T* g) {
        if (!xsl) return;
        T* gi = xsl->ensure();
        const int64_t ni = B * C * H * W;
#pragma omp parallel for schedule(static)
        for (int64_t idx = 0; idx < ni; ++idx) {
            const int64_t w = idx % W;
            const int64_t h = (idx / W) % H;
            const int64_t c = (idx / (W * H)) % C;
            const int64_t b = idx / (W * H * C);
            const int64_t oc = c * s * s + (h % s) * s + (w % s);
            gi[idx] += g[((b * Co + oc) * Ho + h / s) * Wo + w / s];
        }
    });
    return out;
}

template <typename T>
Tensor<T> transpose_last_two(const Tensor<T>& x) {
    expect(x.ndim() >= 2, "transpose_last_two: input must have rank >= 2, got shape " + shape_str(x.shape()));
    const int64_t M = x.dim(x.ndim() - 2), N = x.dim(x.ndim() - 1);
    const int64_t slices = x.numel() / (M * N);
    Shape oshape = x.shape();
    std::swap(oshape[oshape.size() - 2], oshape[oshape.size() - 1]);
    Tensor<T> out(std::move(oshape));
    const T* xi = x.data();
    T* yo = out.data();
#pragma omp parallel for schedule(static)
    for (int64_t sl = 0; sl < slices; ++sl) {
        const T* src = xi + sl * M * N;
        T* dst = yo + sl * M * N;
        for (int64_t i = 0; i < M; ++i)
            for (int64_t j = 0; j < N; ++j) dst[j * M + i] = src[i * N + j];
    }
    auto xsl = x.slot();
    attach<T>(out, {&x}, [=](const T* g) {
        if (!xsl) return;
        T* gi = xsl->ensure();
#pragma omp parallel for schedule(static)
        for (int64_t sl = 0; sl < slices; ++sl) {
            const T* gsrc = g + sl * M * N;
            T* gdst = gi + sl * M * N;
            for (int64_t i = 0; i < M; ++i)
                for (int64_t j = 0; j < N; ++j) gdst[i * N + j] += gsrc[j * M + i];
        }
    });
    return out;
}

template <typename T>
Tensor<T> warp(const Tensor<T>& m, const Tensor<T>& f) {
    expect_rank(m, 4, "warp", "map");
    expect_rank(f, 4, "warp", "features");
    expect(m.dim(2) == m.dim(3), "warp: map slices must be square, got " + shape_str(m.shape()));
    expect(m.dim(0) == f.dim(0) && m.dim(1) == f.dim(2) && m.dim(2) == f.dim(3),
           "warp: map " + shape_str(m.shape()) + " does not match features " + shape_str(f.shape()));
    const int64_t B = f.dim(0), C = f.dim(1), H = f.dim(2), W = f.dim(3);
    Tensor<T> out(f.shape());
    kernels::warp_forward(m.data(), f.data(), out.data(), B, C, H, W);
    auto ms = m.storage();
    auto fs = f.storage();
    auto msl = m.slot();
    auto fsl = f.slot();
    attach<T>(out, {&m, &f}, [=](const T* g) {
        if (msl) kernels::warp_backward_map(g, fs->data(), msl->ensure(), B, C, H, W);
        if (fsl) kernels::warp_backward_feat(g, ms->data(), fsl->ensure(), B, C, H, W);
    });
    return out;
}

template <typename T>
Tensor<T> batched_width_matmul(const Tensor<T>& a, const Tensor<T>& b) {
    expect_rank(a, 4, "batched_width_matmul", "a");
    expect_rank(b, 4, "batched_width_matmul", "b");
    expect(a.shape() == b.shape() && a.dim(2) == a.dim(3),
           "batched_width_matmul: expects matching B x H x W x W inputs, got " + shape_str(a.shape()) +
               " and " + shape_str(b.shape()));
    const int64_t B = a.dim(0), H = a.dim(1), W = a.dim(2);
    Tensor<T> out(a.shape());
    kernels::width_matmul_forward(a.data(), b.data(), out.data(), B, H, W);
    auto as = a.storage();
    auto bs = b.storage();
    auto asl = a.slot();
    auto bsl = b.slot();
    attach<T>(out, {&a, &b}, [=](const T* g) {
        if (asl) kernels::width_matmul_backward_a(g, bs->data(), asl->ensure(), B, H, W);
        if (bsl) kernels::width_matmul_backward_b(g, as->data(), bsl->ensure(), B, H, W);
    });
    return out;
}

template <typename T>
Tensor<T> diff_axis(const Tensor<T>& x, int axis) {
    expect(axis >= 0 && axis < x.ndim(), "diff_axis: axis " + std::to_string(axis) + " out of range for shape " +
                                             shape_str(x.shape()));
    expect(x.dim(axis) >= 2, "diff_axis: axis extent must be >= 2, got shape " + shape_str(x.shape()));
    Shape oshape = x.shape();
    oshape[static_cast<size_t>(axis)] -= 1;
    Tensor<T> out(oshape);
    const Shape xsh = x.shape();
    int64_t stride = 1;
    for (int i = x.ndim() - 1; i > axis; --i) stride *= xsh[static_cast<size_t>(i)];
    const int64_t extent = xsh[static_cast<size_t>(axis)];
    const int64_t inner = stride;
    const int64_t outer = x.numel() / (extent * inner);
    const T* xi = x.data();
    T* yo = out.data();
    const int64_t oext = extent - 1;
#pragma omp parallel for schedule(static)
    for (int64_t o = 0; o < outer; ++o)
        for (int64_t p = 0; p < oext; ++p) {
            const T* hi = xi + (o * extent + p + 1) * inner;
            const T* lo = xi + (o * extent + p) * inner;
            T* dst = yo + (o * oext + p) * inner;
            for (int64_t i = 0; i < inner; ++i) dst[i] = hi[i] - lo[i];
        }
    auto xsl = x.slot();
    attach<T>(out, {&x}, [=](const T* g) {
        if (!xsl) return;
        T* gi = xsl->ensure();
        // Gather form over input positions: x[p] feeds out[p-1] with +1
        // and out[p] with -1.
#pragma omp parallel for schedule(static)
        for (int64_t o = 0; o < outer; ++o)
            for (int64_t p = 0; p < extent; ++p) {
                T* dst = gi + (o * extent + p) * inner;
                const T* gplus = p >= 1 ? g + (o * oext + p - 1) * inner : nullptr;
                const T* gminus = p <= oext - 1 ? g + (o * oext + p) * inner : nullptr;
                for (int64_t i = 0; i < inner; ++i) {
                    T acc = T(0);
                    if (gplus) acc += gplus[i];
                    if (gminus) acc -= gminus[i];
                    dst[i] += acc;
                }
            }
    });
    return out;
}

template <typename T>
Tensor<T> diag_diff(const Tensor<T>& x) {
    expect_rank(x, 4, "diag_diff", "input");
    expect(x.dim(2) == x.dim(3), "diag_diff: slices must be square, got " + shape_str(x.shape()));
    expect(x.dim(2) >= 2, "diag_diff: slice extent must be >= 2, got shape " + shape_str(x.shape()));
    const int64_t S = x.dim(0) * x.dim(1), W = x.dim(2), Wo = W - 1;
    Tensor<T> out(Shape{x.dim(0), x.dim(1), Wo, Wo});
    const T* xi = x.data();
    T* yo = out.data();
#pragma omp parallel for schedule(static)
    for (int64_t sl = 0; sl < S; ++sl) {
        const T* src = xi + sl * W * W;
        T* dst = yo + sl * Wo * Wo;
        for (int64_t i = 0; i < Wo; ++i)
            for (int64_t j = 0; j < Wo; ++j) dst[i * Wo + j] = src[(i + 1) * W + j + 1] - src[i * W + j];
    }
    auto xsl = x.slot();
    attach<T>(out, {&x}, [=](const T* g) {
        if (!xsl) return;
        T* gi = xsl->ensure();
#pragma omp parallel for schedule(static)
        for (int64_t sl = 0; sl < S; ++sl) {
            const T* gsrc = g + sl * Wo * Wo;
            T* gdst = gi + sl * W * W;
            for (int64_t i = 0; i < W; ++i)
                for (int64_t j = 0; j < W; ++j) {
                    T acc = T(0);
                    if (i >= 1 && j >= 1) acc += gsrc[(i - 1) * Wo + j - 1];
                    if (i < Wo && j < Wo) acc -= gsrc[i * Wo + j];
                    gdst[i * W + j] += acc;
                }
        }
    });
    return out;
}

template <typename T>
Tensor<T> normalize_last_axis(const Tensor<T>& x) {
    expect(x.ndim() >= 1, "normalize_last_axis: input must have rank >= 1");
    const int64_t n = x.dim(x.ndim() - 1);
    const int64_t rows = x.numel() / n;
    Tensor<T> out(x.shape());
    auto sums = std::make_shared<std::vector<T>>(static_cast<size_t>(rows));
    const T* xi = x.data();
    T* yo = out.data();
#pragma omp parallel for schedule(static)
    for (int64_t r = 0; r < rows; ++r) {
        const T* xr = xi + r * n;
        T s = T(0);
        for (int64_t i = 0; i < n; ++i) s += xr[i];
        (*sums)[static_cast<size_t>(r)] = s;
        const T inv = T(1) / s;
        T* yr = yo + r * n;
        for (int64_t i = 0; i < n; ++i) yr[i] = xr[i] * inv;
    }
    auto ys = out.storage();
    auto xsl = x.slot();
    attach<T>(out, {&x}, [=](const T* g) {
        if (!xsl) return;
        T* gi = xsl->ensure();
        const T* y = ys->data();
#pragma omp parallel for schedule(static)
        for (int64_t r = 0; r < rows; ++r) {
            const T* yr = y + r * n;
            const T* gr = g + r * n;
            T dot = T(0);
            for (int64_t i = 0; i < n; ++i) dot += gr[i] * yr[i];
            const T inv = T(1) / (*sums)[static_cast<size_t>(r)];
            T* gir = gi + r * n;
            for (int64_t i = 0; i < n; ++i) gir[i] += (gr[i] - dot) * inv;
        }
    });
    return out;
}

template <typename T>
Tensor<T> nearest_upsample_attention(const Tensor<T>& x, int64_t s) {
    expect_rank(x, 4, "nearest_upsample_attention", "input");
    expect(x.dim(2) == x.dim(3), "nearest_upsample_attention: slices must be square, got " + shape_str(x.shape()));
    expect(s >= 1, "nearest_upsample_attention: factor must be >= 1");
    const int64_t B = x.dim(0), H = x.dim(1), W = x.dim(2);
    const int64_t Ho = H * s, Wo = W * s;
    Tensor<T> out(Shape{B, Ho, Wo, Wo});
    const T* xi = x.data();
    T* yo = out.data();
    const int64_t n = out.numel();
#pragma omp parallel for schedule(static)
    for (int64_t idx = 0; idx < n; ++idx) {
        const int64_t j = idx % Wo;
        const int64_t i = (idx / Wo) % Wo;
        const int64_t h = (idx / (Wo * Wo)) % Ho;
        const int64_t b = idx / (Wo * Wo * Ho);
        yo[idx] = xi[((b * H + h / s) * W + i / s) * W + j / s];
    }
    auto xsl = x.slot();
    attach<T>(out, {&x}, [=](const T* g) {
        if (!xsl) return;
        T* gi = xsl->ensure();
        const int64_t ni = B * H * W * W;
#pragma omp parallel for schedule(static)
        for (int64_t idx = 0; idx < ni; ++idx) {
            const int64_t j = idx % W;
            const int64_t i = (idx / W) % W;
            const int64_t h = (idx / (W * W)) % H;
            const int64_t b = idx / (W * W * H);
            T acc = T(0);
            for (int64_t dh = 0; dh < s; ++dh)
                for (int64_t di = 0; di < s; ++di)
                    for (int64_t dj = 0; dj < s; ++dj)
                        acc += g[((b * Ho + h * s + dh) * Wo + i * s + di) * Wo + j * s + dj];
            gi[idx] += acc;
        }
    });
    return out;
}

template <typename T>
Tensor<T> nearest_upsample_plane(const Tensor<T>& x, int64_t s) {
    expect_rank(x, 4, "nearest_upsample_plane", "input");
    expect(s >= 1, "nearest_upsample_plane: factor must be >= 1");
    const int64_t B = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
    const int64_t Ho = H * s, Wo = W * s;
    Tensor<T> out(Shape{B, C, Ho, Wo});
    const T* xi = x.data();
    T* yo = out.data();
    const int64_t n = out.numel();
#pragma omp parallel for schedule(static)
    for (int64_t idx = 0; idx < n; ++idx) {
        const int64_t ow = idx % Wo;
        const int64_t oh = (idx / Wo) % Ho;
        const int64_t p = idx / (Wo * Ho);
        yo[idx] = xi[(p * H + oh / s) * W + ow / s];
    }
    return out;
}

template <typename T>
Tensor<T> clamp01(const Tensor<T>& x) {
    Tensor<T> out(x.shape());
    const T* xi = x.data();
    T* yo = out.data();
    const int64_t n = x.numel();
#pragma omp parallel for schedule(static)
    for (int64_t i = 0; i < n; ++i) yo[i] = std::min(T(1), std::max(T(0), xi[i]));
    return out;
}

#define CCSBESR_OPS_INSTANTIATE(T)                                                              \
    template Tensor<T> conv2d<T>(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&,         \
                                 int64_t, int64_t, int64_t);                                    \
    template Tensor<T> global_pool_spatial<T>(const Tensor<T>&, PoolMode);                      \
    template Tensor<T> pool_across_channels<T>(const Tensor<T>&, PoolMode);                     \
    template Tensor<T> sigmoid<T>(const Tensor<T>&);                                            \
    template Tensor<T> relu<T>(const Tensor<T>&);                                               \
    template Tensor<T> leaky_relu<T>(const Tensor<T>&, T);                                      \
    template Tensor<T> add<T>(const Tensor<T>&, const Tensor<T>&);                              \
    template Tensor<T> sub<T>(const Tensor<T>&, const Tensor<T>&);                              \
    template Tensor<T> mul<T>(const Tensor<T>&, const Tensor<T>&);                              \
    template Tensor<T> scale<T>(const Tensor<T>&, T);                                           \
    template Tensor<T> abs<T>(const Tensor<T>&);                                                \
    template Tensor<T> sum_all<T>(const Tensor<T>&);                                            \
    template Tensor<T> mean_all<T>(const Tensor<T>&);                                           \
    template Tensor<T> concat_channels<T>(const std::vector<Tensor<T>>&);                       \
    template Tensor<T> batched_width_scores<T>(const Tensor<T>&, const Tensor<T>&);             \
    template Tensor<T> softmax_last_axis<T>(const Tensor<T>&);                                  \
    template Tensor<T> pixel_shuffle<T>(const Tensor<T>&, int64_t);                             \
    template Tensor<T> pixel_unshuffle<T>(const Tensor<T>&, int64_t);                           \
    template Tensor<T> transpose_last_two<T>(const Tensor<T>&);                                 \
    template Tensor<T> warp<T>(const Tensor<T>&, const Tensor<T>&);                             \
    template Tensor<T> batched_width_matmul<T>(const Tensor<T>&, const Tensor<T>&);             \
    template Tensor<T> diff_axis<T>(const Tensor<T>&, int);                                     \
    template Tensor<T> diag_diff<T>(const Tensor<T>&);                                          \
    template Tensor<T> normalize_last_axis<T>(const Tensor<T>&);                                \
    template Tensor<T> nearest_upsample_attention<T>(const Tensor<T>&, int64_t);                \
    template Tensor<T> nearest_upsample_plane<T>(const Tensor<T>&, int64_t);                    \
    template Tensor<T> clamp01<T>(const Tensor<T>&);

CCSBESR_OPS_INSTANTIATE(float)
CCSBESR_OPS_INSTANTIATE(double)

#undef CCSBESR_OPS_INSTANTIATE

}  // namespace ccsbesr::ops
