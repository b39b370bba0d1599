// Copyright 2026 ccsbesr contributors
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "ccsbesr/gradcheck.hpp"
#include "ccsbesr/ops.hpp"
#include "ccsbesr/rng.hpp"

using namespace ccsbesr;

namespace {

constexpr double kEps = 1e-3;
constexpr double kTol = 1e-4;

Tensor<double> rnd(Shape shape, uint64_t seed, double lo = -1.0, double hi = 1.0) {
    Tensor<double> t(std::move(shape));
    Rng rng(seed);
    for (int64_t i = 0; i < t.numel(); ++i) t.at(i) = rng.uniform(lo, hi);
    return t;
}

// Values in +-[0.3, 1]: no element sits near an activation kink.
Tensor<double> rnd_away_from_zero(Shape shape, uint64_t seed) {
    Tensor<double> t(std::move(shape));
    Rng rng(seed);
    for (int64_t i = 0; i < t.numel(); ++i) {
        double v = rng.uniform(0.3, 1.0);
        t.at(i) = (rng.next_u64() & 1) ? v : -v;
    }
    return t;
}

}  // namespace

TEST_CASE("conv2d gradients: plain, strided, dilated") {
    Tensor<double> in = rnd({2, 2, 5, 5}, 1);
    Tensor<double> w = rnd({3, 2, 3, 3}, 2);
    Tensor<double> b = rnd({3}, 3);
    auto run = [&](int64_t stride, int64_t pad, int64_t dil, uint64_t seed) {
        GradCheckStats st =
            check_gradients<double>([&]() { return ops::conv2d(in, w, b, stride, pad, dil); }, {&in, &w, &b}, kEps, seed);
        CHECK(st.max_rel_err < kTol);
    };
    run(1, 1, 1, 10);
    run(2, 1, 1, 11);
    run(1, 2, 2, 12);
}

TEST_CASE("pooling gradients") {
    Tensor<double> x = rnd({2, 3, 4, 4}, 20);
    for (auto mode : {ops::PoolMode::kMax, ops::PoolMode::kMean}) {
        GradCheckStats st =
            check_gradients<double>([&]() { return ops::global_pool_spatial(x, mode); }, {&x}, kEps, 21);
        CHECK(st.max_rel_err < kTol);
        GradCheckStats st2 =
            check_gradients<double>([&]() { return ops::pool_across_channels(x, mode); }, {&x}, kEps, 22);
        CHECK(st2.max_rel_err < kTol);
    }
}

TEST_CASE("elementwise gradients") {
    Tensor<double> x = rnd_away_from_zero({2, 3, 2, 2}, 30);
    Tensor<double> y = rnd({2, 3, 2, 2}, 31);
    Tensor<double> gate = rnd({2, 3, 1, 1}, 32);
    CHECK(check_gradients<double>([&]() { return ops::sigmoid(x); }, {&x}, kEps, 40).max_rel_err < kTol);
    CHECK(check_gradients<double>([&]() { return ops::relu(x); }, {&x}, kEps, 41).max_rel_err < kTol);
    CHECK(check_gradients<double>([&]() { return ops::leaky_relu(x, 0.1); }, {&x}, kEps, 42).max_rel_err < kTol);
    CHECK(check_gradients<double>([&]() { return ops::abs(x); }, {&x}, kEps, 43).max_rel_err < kTol);
    CHECK(check_gradients<double>([&]() { return ops::add(x, y); }, {&x, &y}, kEps, 44).max_rel_err < kTol);
    CHECK(check_gradients<double>([&]() { return ops::sub(x, y); }, {&x, &y}, kEps, 45).max_rel_err < kTol);
    CHECK(check_gradients<double>([&]() { return ops::mul(x, y); }, {&x, &y}, kEps, 46).max_rel_err < kTol);
    CHECK(check_gradients<double>([&]() { return ops::mul(x, gate); }, {&x, &gate}, kEps, 47).max_rel_err < kTol);
    CHECK(check_gradients<double>([&]() { return ops::scale(x, -2.5); }, {&x}, kEps, 48).max_rel_err < kTol);
    CHECK(check_gradients<double>([&]() { return ops::mean_all(x); }, {&x}, kEps, 49).max_rel_err < kTol);
}

TEST_CASE("reduction and reshaping gradients") {
    Tensor<double> a = rnd({1, 2, 3, 3}, 50);
    Tensor<double> b = rnd({1, 1, 3, 3}, 51);
    CHECK(check_gradients<double>([&]() { return ops::concat_channels<double>({a, b}); }, {&a, &b}, kEps, 52)
              .max_rel_err < kTol);
    Tensor<double> q = rnd({1, 8, 2, 2}, 53);
    CHECK(check_gradients<double>([&]() { return ops::pixel_shuffle(q, 2); }, {&q}, kEps, 54).max_rel_err < kTol);
    Tensor<double> r = rnd({1, 2, 4, 4}, 55);
    CHECK(check_gradients<double>([&]() { return ops::pixel_unshuffle(r, 2); }, {&r}, kEps, 56).max_rel_err < kTol);
    Tensor<double> s = rnd({1, 2, 3, 3}, 57);
    CHECK(check_gradients<double>([&]() { return ops::transpose_last_two(s); }, {&s}, kEps, 58).max_rel_err < kTol);
}

TEST_CASE("attention op gradients") {
    Tensor<double> q = rnd({1, 2, 3, 4}, 60);
    Tensor<double> k = rnd({1, 2, 3, 4}, 61);
    CHECK(check_gradients<double>([&]() { return ops::batched_width_scores(q, k); }, {&q, &k}, kEps, 62).max_rel_err <
          kTol);
    Tensor<double> logits = rnd({1, 3, 4, 4}, 63);
    CHECK(check_gradients<double>([&]() { return ops::softmax_last_axis(logits); }, {&logits}, kEps, 64).max_rel_err <
          kTol);
    Tensor<double> m = rnd({1, 3, 4, 4}, 65);
    Tensor<double> f = rnd({1, 2, 3, 4}, 66);
    CHECK(check_gradients<double>([&]() { return ops::warp(m, f); }, {&m, &f}, kEps, 67).max_rel_err < kTol);
    Tensor<double> m2 = rnd({1, 3, 4, 4}, 68);
    CHECK(check_gradients<double>([&]() { return ops::batched_width_matmul(m, m2); }, {&m, &m2}, kEps, 69)
              .max_rel_err < kTol);
    Tensor<double> pos = rnd({1, 2, 3, 3}, 70, 0.2, 1.0);
    CHECK(check_gradients<double>([&]() { return ops::normalize_last_axis(pos); }, {&pos}, kEps, 71).max_rel_err <
          kTol);
    CHECK(check_gradients<double>([&]() { return ops::nearest_upsample_attention(m, 2); }, {&m}, kEps, 72)
              .max_rel_err < kTol);
    CHECK(check_gradients<double>([&]() { return ops::diff_axis(m, 1); }, {&m}, kEps, 73).max_rel_err < kTol);
    CHECK(check_gradients<double>([&]() { return ops::diff_axis(m, 2); }, {&m}, kEps, 74).max_rel_err < kTol);
    CHECK(check_gradients<double>([&]() { return ops::diag_diff(m); }, {&m}, kEps, 75).max_rel_err < kTol);
}

TEST_CASE("negative control: a corrupted adjoint fails the check") {
    Tensor<double> x = rnd({2, 3}, 80);
    GradCheckStats st = check_gradients<double>([&]() { return ops::sigmoid(x); }, {&x}, kEps, 81,
                                                /*corrupt_first_adjoint=*/true);
    CHECK(st.max_rel_err > kTol);
}

TEST_CASE("float instantiation agrees with double on a small conv") {
    Tensor<double> in_d = rnd({1, 1, 3, 3}, 90);
    Tensor<double> w_d = rnd({1, 1, 3, 3}, 91);
    Tensor<float> in_f({1, 1, 3, 3});
    Tensor<float> w_f({1, 1, 3, 3});
    for (int64_t i = 0; i < 9; ++i) {
        in_f.at(i) = static_cast<float>(in_d.at(i));
        w_f.at(i) = static_cast<float>(w_d.at(i));
    }
    Tensor<double> bias_d({1});
    Tensor<float> bias_f({1});
    Tensor<double> out_d = ops::conv2d(in_d, w_d, bias_d, 1, 1, 1);
    Tensor<float> out_f = ops::conv2d(in_f, w_f, bias_f, 1, 1, 1);
    for (int64_t i = 0; i < out_d.numel(); ++i)
        CHECK(static_cast<double>(out_f.at(i)) == doctest::Approx(out_d.at(i)).epsilon(1e-5));
}
