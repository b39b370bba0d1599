// Copyright 2026 ccsbesr contributors
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <vector>

#include "ccsbesr/gradcheck.hpp"
#include "ccsbesr/ops.hpp"
#include "ccsbesr/pam.hpp"
#include "ccsbesr/reference.hpp"
#include "ccsbesr/rng.hpp"

using namespace ccsbesr;

namespace {

Tensor<double> rnd(Shape shape, uint64_t seed, double lo = -1.0, double hi = 1.0) {
    Tensor<double> t(std::move(shape));
    Rng rng(seed);
    for (int64_t i = 0; i < t.numel(); ++i) t.at(i) = rng.uniform(lo, hi);
    return t;
}

}  // namespace

TEST_CASE("swapping the input views exactly transposes the raw scores") {
    for (uint64_t trial = 0; trial < 8; ++trial) {
        SeedStream s{300 + trial};
        PAMParams<double> p = make_pam<double>(4, s);
        Tensor<double> fl = rnd({2, 4, 3, 4}, 400 + trial);
        Tensor<double> fr = rnd({2, 4, 3, 4}, 500 + trial);
        Tensor<double> fwd = pam_scores(fl, fr, p);
        Tensor<double> swapped = pam_scores(fr, fl, p);
        const int64_t B = fwd.dim(0), H = fwd.dim(1), W = fwd.dim(2);
        for (int64_t b = 0; b < B; ++b)
            for (int64_t h = 0; h < H; ++h)
                for (int64_t i = 0; i < W; ++i)
                    for (int64_t j = 0; j < W; ++j) {
                        const int64_t a = ((b * H + h) * W + i) * W + j;
                        const int64_t t = ((b * H + h) * W + j) * W + i;
                        CHECK(fwd.at(a) == swapped.at(t));
                    }
    }
}

TEST_CASE("attention maps are row-stochastic, cycles match naive matmul, masks match brute force") {
    // 1000 randomized trials at width <= 4.
    for (uint64_t trial = 0; trial < 1000; ++trial) {
        Rng shape_rng(9000 + trial);
        const int64_t B = 1 + shape_rng.uniform_int(0, 1);
        const int64_t H = 1 + shape_rng.uniform_int(0, 3);
        const int64_t W = 2 + shape_rng.uniform_int(0, 2);
        Tensor<double> scores = rnd({B, H, W, W}, 10000 + trial, -3.0, 3.0);
        auto [m_r2l, m_l2r] = attention_from_scores(scores);

        for (const Tensor<double>* m : {&m_r2l, &m_l2r}) {
            REQUIRE(m->shape() == Shape{B, H, W, W});
            for (int64_t row = 0; row < B * H * W; ++row) {
                double sum = 0.0;
                for (int64_t j = 0; j < W; ++j) {
                    double v = m->at(row * W + j);
                    CHECK(v >= 0.0);
                    sum += v;
                }
                CHECK(std::abs(sum - 1.0) <= 1e-5);
            }
        }

        auto [cycle_l, cycle_r] = cycle_maps(m_r2l, m_l2r);
        for (int64_t b = 0; b < B; ++b)
            for (int64_t h = 0; h < H; ++h)
                for (int64_t i = 0; i < W; ++i)
                    for (int64_t j = 0; j < W; ++j) {
                        double acc_l = 0.0, acc_r = 0.0;
                        for (int64_t k = 0; k < W; ++k) {
                            acc_l += m_r2l.at(((b * H + h) * W + i) * W + k) * m_l2r.at(((b * H + h) * W + k) * W + j);
                            acc_r += m_l2r.at(((b * H + h) * W + i) * W + k) * m_r2l.at(((b * H + h) * W + k) * W + j);
                        }
                        CHECK(std::abs(cycle_l.at(((b * H + h) * W + i) * W + j) - acc_l) <= 1e-6);
                        CHECK(std::abs(cycle_r.at(((b * H + h) * W + i) * W + j) - acc_r) <= 1e-6);
                    }

        const double tau = 0.1;
        Tensor<double> mask = valid_mask(m_r2l, tau);
        Tensor<double> expect({B, 1, H, W});
        reference::valid_mask(m_r2l.data(), expect.data(), B, H, W, tau);
        for (int64_t i = 0; i < mask.numel(); ++i) CHECK(mask.at(i) == expect.at(i));
    }
}

TEST_CASE("warping a constant image through any attention map preserves it") {
    for (uint64_t trial = 0; trial < 1000; ++trial) {
        Rng rng(20000 + trial);
        const int64_t B = 1 + rng.uniform_int(0, 1);
        const int64_t C = 1 + rng.uniform_int(0, 2);
        const int64_t H = 1 + rng.uniform_int(0, 3);
        const int64_t W = 2 + rng.uniform_int(0, 2);
        Tensor<double> scores = rnd({B, H, W, W}, 21000 + trial, -3.0, 3.0);
        auto [m, m_t] = attention_from_scores(scores);
        (void)m_t;
        Tensor<double> f({B, C, H, W});
        std::vector<double> levels(static_cast<size_t>(B * C));
        for (auto& v : levels) v = rng.uniform(-2.0, 2.0);
        for (int64_t b = 0; b < B; ++b)
            for (int64_t c = 0; c < C; ++c)
                for (int64_t i = 0; i < H * W; ++i)
                    f.at((b * C + c) * H * W + i) = levels[static_cast<size_t>(b * C + c)];
        Tensor<double> warped = ops::warp(m, f);
        REQUIRE(warped.shape() == f.shape());
        for (int64_t b = 0; b < B; ++b)
            for (int64_t c = 0; c < C; ++c)
                for (int64_t i = 0; i < H * W; ++i)
                    CHECK(std::abs(warped.at((b * C + c) * H * W + i) - levels[static_cast<size_t>(b * C + c)]) <=
                          1e-9);
    }
}

TEST_CASE("uniform scores give uniform maps, uniform cycles, and fully valid masks") {
    const int64_t B = 2, H = 3, W = 4;
    Tensor<double> scores({B, H, W, W});
    for (int64_t i = 0; i < scores.numel(); ++i) scores.at(i) = 1.7;
    auto [m_r2l, m_l2r] = attention_from_scores(scores);
    for (int64_t i = 0; i < m_r2l.numel(); ++i) {
        CHECK(m_r2l.at(i) == doctest::Approx(0.25).epsilon(1e-12));
        CHECK(m_l2r.at(i) == doctest::Approx(0.25).epsilon(1e-12));
    }
    auto [cycle_l, cycle_r] = cycle_maps(m_r2l, m_l2r);
    for (int64_t i = 0; i < cycle_l.numel(); ++i) {
        CHECK(cycle_l.at(i) == doctest::Approx(0.25).epsilon(1e-10));
        CHECK(cycle_r.at(i) == doctest::Approx(0.25).epsilon(1e-10));
    }
    Tensor<double> v = valid_mask(m_r2l, 0.1);
    for (int64_t i = 0; i < v.numel(); ++i) CHECK(v.at(i) == 1.0);
}

TEST_CASE("columns that receive no attention mass are flagged occluded") {
    const int64_t B = 1, H = 2, W = 4;
    Tensor<double> m({B, H, W, W});
    // Every row sends its full mass to column 0.
    for (int64_t h = 0; h < H; ++h)
        for (int64_t i = 0; i < W; ++i) m.at((h * W + i) * W + 0) = 1.0;
    Tensor<double> v = valid_mask(m, 0.1);
    REQUIRE(v.shape() == Shape{B, 1, H, W});
    for (int64_t h = 0; h < H; ++h) {
        CHECK(v.at(h * W + 0) == 1.0);
        for (int64_t j = 1; j < W; ++j) CHECK(v.at(h * W + j) == 0.0);
    }
}

TEST_CASE("the mask threshold is strict and the mask stays off the tape") {
    const int64_t W = 2;
    Tensor<double> m({1, 1, W, W});
    // Column sums exactly 0.1 and 1.9: only the strict exceedance passes.
    m.at(0) = 0.05;
    m.at(1) = 0.95;
    m.at(2) = 0.05;
    m.at(3) = 0.95;
    Tensor<double> v = valid_mask(m, 0.1);
    CHECK(v.at(0) == 0.0);
    CHECK(v.at(1) == 1.0);

    m.set_requires_grad(true);
    Tensor<double> v2 = valid_mask(m, 0.1);
    CHECK(!v2.tracked());

    CHECK_THROWS_AS(valid_mask(m, 0.0), std::invalid_argument);
    Tensor<double> bad({1, 2, 3, 4});
    CHECK_THROWS_AS(valid_mask(bad, 0.1), std::invalid_argument);
}

TEST_CASE("full attention pass: shapes, mask wiring, and view symmetry") {
    SeedStream s{88};
    PAMParams<double> p = make_pam<double>(4, s);
    Tensor<double> fl = rnd({2, 4, 3, 4}, 600);
    Tensor<double> fr = rnd({2, 4, 3, 4}, 601);
    PamOutput<double> out = pam_forward(fl, fr, p, 0.1);
    CHECK(out.f_left.shape() == fl.shape());
    CHECK(out.f_right.shape() == fr.shape());
    CHECK(out.maps.m_r2l.shape() == Shape{2, 3, 4, 4});
    CHECK(out.maps.m_l2r.shape() == Shape{2, 3, 4, 4});
    CHECK(out.maps.v_left.shape() == Shape{2, 1, 3, 4});
    CHECK(out.maps.v_right.shape() == Shape{2, 1, 3, 4});
    CHECK(out.maps.tau == 0.1);

    Tensor<double> mask_l({2, 1, 3, 4}), mask_r({2, 1, 3, 4});
    reference::valid_mask(out.maps.m_r2l.data(), mask_l.data(), 2, 3, 4, 0.1);
    reference::valid_mask(out.maps.m_l2r.data(), mask_r.data(), 2, 3, 4, 0.1);
    for (int64_t i = 0; i < mask_l.numel(); ++i) {
        CHECK(out.maps.v_left.at(i) == mask_l.at(i));
        CHECK(out.maps.v_right.at(i) == mask_r.at(i));
    }

    // Swapping the input views swaps the fused outputs and transposes the maps.
    PamOutput<double> swp = pam_forward(fr, fl, p, 0.1);
    for (int64_t i = 0; i < out.f_left.numel(); ++i) {
        CHECK(swp.f_left.at(i) == out.f_right.at(i));
        CHECK(swp.f_right.at(i) == out.f_left.at(i));
    }
}

TEST_CASE("pam gradients pass a finite-difference check") {
    SeedStream s{89};
    PAMParams<double> p = make_pam<double>(3, s);
    Tensor<double> fl = rnd({1, 3, 3, 4}, 700);
    Tensor<double> fr = rnd({1, 3, 3, 4}, 701);
    std::vector<Tensor<double>*> leaves;
    visit_params<double>(p, "pam", [&](const std::string&, Tensor<double>& t) { leaves.push_back(&t); });
    leaves.push_back(&fl);
    leaves.push_back(&fr);
    GradCheckStats st = check_gradients<double>(
        [&]() {
            PamOutput<double> o = pam_forward(fl, fr, p, 0.1);
            return ops::concat_channels<double>({o.f_left, o.f_right});
        },
        leaves, 1e-3, 702);
    CHECK(st.max_rel_err < 1e-4);
}
