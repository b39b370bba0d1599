// Copyright 2026 ccsbesr contributors
// SPDX-License-Identifier: Apache-2.0

// Times the OpenMP kernels against the serial reference implementation
// on training-sized problems and reports the largest output deviation.

#include <omp.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <vector>

#include "ccsbesr/kernels.hpp"
#include "ccsbesr/reference.hpp"
#include "ccsbesr/rng.hpp"

using ccsbesr::Rng;

namespace {

std::vector<float> random_vec(int64_t n, uint64_t seed) {
    std::vector<float> v(static_cast<size_t>(n));
    Rng rng(seed);
    for (auto& x : v) x = static_cast<float>(rng.uniform(-1.0, 1.0));
    return v;
}

template <typename F>
double time_ms(F&& fn, int reps) {
    fn();  // warm up
    auto t0 = std::chrono::steady_clock::now();
    for (int i = 0; i < reps; ++i) fn();
    auto t1 = std::chrono::steady_clock::now();
    return std::chrono::duration<double, std::milli>(t1 - t0).count() / reps;
}

double max_diff(const std::vector<float>& a, const std::vector<float>& b) {
    double m = 0.0;
    for (size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(static_cast<double>(a[i]) - b[i]));
    return m;
}

void report(const char* name, double serial_ms, double parallel_ms, double diff) {
    std::printf("%-14s serial %8.2f ms   parallel %8.2f ms   speedup %5.2fx   max |diff| %.3g\n", name, serial_ms,
                parallel_ms, serial_ms / parallel_ms, diff);
}

}  // namespace

int main() {
    std::printf("threads: %d\n", omp_get_max_threads());

    {
        const int64_t B = 2, C = 32, H = 64, W = 64, K = 3, pad = 1;
        auto in = random_vec(B * C * H * W, 1);
        auto w = random_vec(C * C * K * K, 2);
        auto bias = random_vec(C, 3);
        std::vector<float> out_p(static_cast<size_t>(B * C * H * W)), out_s(out_p.size());
        double tp = time_ms(
            [&] {
                ccsbesr::kernels::conv2d_forward(in.data(), w.data(), bias.data(), out_p.data(), B, C, H, W, C, K, 1,
                                                 pad, 1, H, W);
            },
            5);
        double ts = time_ms(
            [&] {
                ccsbesr::reference::conv2d_forward(in.data(), w.data(), bias.data(), out_s.data(), B, C, H, W, C, K, 1,
                                                   pad, 1, H, W);
            },
            2);
        report("conv2d 3x3", ts, tp, max_diff(out_p, out_s));
    }
    {
        const int64_t B = 2, C = 32, H = 32, W = 96;
        auto q = random_vec(B * C * H * W, 4);
        auto k = random_vec(B * C * H * W, 5);
        std::vector<float> out_p(static_cast<size_t>(B * H * W * W)), out_s(out_p.size());
        double tp = time_ms(
            [&] { ccsbesr::kernels::width_scores_forward(q.data(), k.data(), out_p.data(), B, C, H, W); }, 5);
        double ts = time_ms(
            [&] { ccsbesr::reference::width_scores_forward(q.data(), k.data(), out_s.data(), B, C, H, W); }, 2);
        report("width_scores", ts, tp, max_diff(out_p, out_s));
    }
    {
        const int64_t B = 2, C = 32, H = 32, W = 96;
        auto m = random_vec(B * H * W * W, 6);
        auto f = random_vec(B * C * H * W, 7);
        std::vector<float> out_p(static_cast<size_t>(B * C * H * W)), out_s(out_p.size());
        double tp = time_ms([&] { ccsbesr::kernels::warp_forward(m.data(), f.data(), out_p.data(), B, C, H, W); }, 5);
        double ts =
            time_ms([&] { ccsbesr::reference::warp_forward(m.data(), f.data(), out_s.data(), B, C, H, W); }, 2);
        report("warp", ts, tp, max_diff(out_p, out_s));
    }
    {
        const int64_t C = 3, Hin = 256, Win = 256, Hout = 512, Wout = 512;
        auto in = random_vec(C * Hin * Win, 8);
        std::vector<float> out_p(static_cast<size_t>(C * Hout * Wout)), out_s(out_p.size());
        double tp = time_ms(
            [&] { ccsbesr::kernels::bicubic_resample(in.data(), out_p.data(), C, Hin, Win, Hout, Wout); }, 5);
        double ts = time_ms(
            [&] { ccsbesr::reference::bicubic_resample(in.data(), out_s.data(), C, Hin, Win, Hout, Wout); }, 2);
        report("bicubic x2", ts, tp, max_diff(out_p, out_s));
    }
    return 0;
}
