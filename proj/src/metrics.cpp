// Copyright 2026 ccsbesr contributors
// SPDX-License-Identifier: Apache-2.0

#include "ccsbesr/metrics.hpp"

#include <cmath>
#include <limits>
#include <vector>

namespace ccsbesr {

template <typename T>
double psnr(const Tensor<T>& a, const Tensor<T>& b, double peak) {
    if (a.shape() != b.shape())
        throw std::invalid_argument("psnr: shapes " + shape_str(a.shape()) + " and " + shape_str(b.shape()) +
                                    " differ");
    if (!(peak > 0.0)) throw std::invalid_argument("psnr: peak must be positive");
    const T* pa = a.data();
    const T* pb = b.data();
    const int64_t n = a.numel();
    double mse = 0.0;
    for (int64_t i = 0; i < n; ++i) {
        const double d = static_cast<double>(pa[i]) - static_cast<double>(pb[i]);
        mse += d * d;
    }
    mse /= static_cast<double>(n);
    if (mse == 0.0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(peak * peak / mse);
}

namespace {

constexpr int kWindow = 11;
constexpr double kSigma = 1.5;
constexpr double kK1 = 0.01;
constexpr double kK2 = 0.03;

// Normalized 1-D Gaussian taps; the separable window then sums to 1.
std::vector<double> gaussian_taps() {
    std::vector<double> g(kWindow);
    const int half = kWindow / 2;
    double sum = 0.0;
    for (int i = 0; i < kWindow; ++i) {
        const double d = static_cast<double>(i - half);
        g[static_cast<size_t>(i)] = std::exp(-(d * d) / (2.0 * kSigma * kSigma));
        sum += g[static_cast<size_t>(i)];
    }
    for (double& v : g) v /= sum;
    return g;
}

// Valid-region separable Gaussian filter: in is H x W, out is
// (H-10) x (W-10).
void gauss_filter(const std::vector<double>& in, int64_t h, int64_t w, std::vector<double>& out) {
    static const std::vector<double> taps = gaussian_taps();
    const int64_t wo = w - kWindow + 1;
    const int64_t ho = h - kWindow + 1;
    std::vector<double> mid(static_cast<size_t>(h * wo));
    for (int64_t y = 0; y < h; ++y)
        for (int64_t x = 0; x < wo; ++x) {
            double acc = 0.0;
            for (int t = 0; t < kWindow; ++t) acc += taps[static_cast<size_t>(t)] * in[static_cast<size_t>(y * w + x + t)];
            mid[static_cast<size_t>(y * wo + x)] = acc;
        }
    out.assign(static_cast<size_t>(ho * wo), 0.0);
    for (int64_t y = 0; y < ho; ++y)
        for (int64_t x = 0; x < wo; ++x) {
            double acc = 0.0;
            for (int t = 0; t < kWindow; ++t) acc += taps[static_cast<size_t>(t)] * mid[static_cast<size_t>((y + t) * wo + x)];
            out[static_cast<size_t>(y * wo + x)] = acc;
        }
}

template <typename T>
std::vector<double> to_plane(const Tensor<T>& t, int64_t& h, int64_t& w, const char* name) {
    if (t.ndim() == 2) {
        h = t.dim(0);
        w = t.dim(1);
        std::vector<double> p(static_cast<size_t>(h * w));
        for (int64_t i = 0; i < h * w; ++i) p[static_cast<size_t>(i)] = static_cast<double>(t.at(i));
        return p;
    }
    if (t.ndim() == 3) {
        const int64_t c = t.dim(0);
        h = t.dim(1);
        w = t.dim(2);
        std::vector<double> p(static_cast<size_t>(h * w), 0.0);
        for (int64_t ch = 0; ch < c; ++ch)
            for (int64_t i = 0; i < h * w; ++i)
                p[static_cast<size_t>(i)] += static_cast<double>(t.at(ch * h * w + i)) / static_cast<double>(c);
        return p;
    }
    throw std::invalid_argument(std::string("ssim: ") + name + " must be H x W or C x H x W, got shape " +
                                shape_str(t.shape()));
}

}  // namespace

template <typename T>
double ssim(const Tensor<T>& a, const Tensor<T>& b, double luminance_range) {
    if (a.shape() != b.shape())
        throw std::invalid_argument("ssim: shapes " + shape_str(a.shape()) + " and " + shape_str(b.shape()) +
                                    " differ");
    if (!(luminance_range > 0.0)) throw std::invalid_argument("ssim: luminance range must be positive");
    int64_t h = 0, w = 0;
    const std::vector<double> pa = to_plane(a, h, w, "first image");
    int64_t h2 = 0, w2 = 0;
    const std::vector<double> pb = to_plane(b, h2, w2, "second image");
    if (h < kWindow || w < kWindow)
        throw std::invalid_argument("ssim: image " + std::to_string(h) + "x" + std::to_string(w) +
                                    " is smaller than the 11x11 window");

    const double c1 = (kK1 * luminance_range) * (kK1 * luminance_range);
    const double c2 = (kK2 * luminance_range) * (kK2 * luminance_range);

    const int64_t n = h * w;
    std::vector<double> aa(static_cast<size_t>(n)), bb(static_cast<size_t>(n)), ab(static_cast<size_t>(n));
    for (int64_t i = 0; i < n; ++i) {
        aa[static_cast<size_t>(i)] = pa[static_cast<size_t>(i)] * pa[static_cast<size_t>(i)];
        bb[static_cast<size_t>(i)] = pb[static_cast<size_t>(i)] * pb[static_cast<size_t>(i)];
        ab[static_cast<size_t>(i)] = pa[static_cast<size_t>(i)] * pb[static_cast<size_t>(i)];
    }

    std::vector<double> mu_a, mu_b, m_aa, m_bb, m_ab;
    gauss_filter(pa, h, w, mu_a);
    gauss_filter(pb, h, w, mu_b);
    gauss_filter(aa, h, w, m_aa);
    gauss_filter(bb, h, w, m_bb);
    gauss_filter(ab, h, w, m_ab);

    double total = 0.0;
    for (size_t i = 0; i < mu_a.size(); ++i) {
        const double ma = mu_a[i], mb = mu_b[i];
        const double va = m_aa[i] - ma * ma;
        const double vb = m_bb[i] - mb * mb;
        const double cov = m_ab[i] - ma * mb;
        total += ((2.0 * ma * mb + c1) * (2.0 * cov + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
    }
    return total / static_cast<double>(mu_a.size());
}

template double psnr<float>(const Tensor<float>&, const Tensor<float>&, double);
template double psnr<double>(const Tensor<double>&, const Tensor<double>&, double);
template double ssim<float>(const Tensor<float>&, const Tensor<float>&, double);
template double ssim<double>(const Tensor<double>&, const Tensor<double>&, double);

}  // namespace ccsbesr
