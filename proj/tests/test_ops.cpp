// Copyright 2026 ccsbesr contributors
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <vector>

#include "ccsbesr/kernels.hpp"
#include "ccsbesr/ops.hpp"
#include "ccsbesr/reference.hpp"
#include "ccsbesr/rng.hpp"

using namespace ccsbesr;

namespace {

Tensor<double> random_tensor(Shape shape, uint64_t seed, double lo = -1.0, double hi = 1.0) {
    Tensor<double> t(std::move(shape));
    Rng rng(seed);
    for (int64_t i = 0; i < t.numel(); ++i) t.at(i) = rng.uniform(lo, hi);
    return t;
}

double max_abs_diff(const Tensor<double>& a, const Tensor<double>& b) {
    double m = 0.0;
    for (int64_t i = 0; i < a.numel(); ++i) m = std::max(m, std::abs(a.at(i) - b.at(i)));
    return m;
}

}  // namespace

TEST_CASE("conv2d dilated 3x3 over a 5x5 ramp picks every other sample") {
    Tensor<double> in({1, 1, 5, 5});
    for (int64_t i = 0; i < 25; ++i) in.at(i) = static_cast<double>(i + 1);
    Tensor<double> w = Tensor<double>::full({1, 1, 3, 3}, 1.0);
    Tensor<double> b({1});
    Tensor<double> out = ops::conv2d(in, w, b, 1, 0, 2);
    CHECK(out.shape() == Shape{1, 1, 1, 1});
    CHECK(out.item() == doctest::Approx(117.0));  // 1+3+5+11+13+15+21+23+25
}

TEST_CASE("conv2d equals the zero-inflated-kernel form of dilation") {
    Tensor<double> in = random_tensor({1, 2, 7, 7}, 11);
    Tensor<double> w = random_tensor({3, 2, 3, 3}, 12);
    Tensor<double> b = random_tensor({3}, 13);
    Tensor<double> inflated({3, 2, 5, 5});
    for (int64_t oc = 0; oc < 3; ++oc)
        for (int64_t ic = 0; ic < 2; ++ic)
            for (int64_t kh = 0; kh < 3; ++kh)
                for (int64_t kw = 0; kw < 3; ++kw)
                    inflated.at(((oc * 2 + ic) * 5 + kh * 2) * 5 + kw * 2) = w.at(((oc * 2 + ic) * 3 + kh) * 3 + kw);
    Tensor<double> dilated = ops::conv2d(in, w, b, 1, 2, 2);
    Tensor<double> plain = ops::conv2d(in, inflated, b, 1, 2, 1);
    CHECK(dilated.shape() == plain.shape());
    CHECK(max_abs_diff(dilated, plain) < 1e-12);
}

TEST_CASE("conv2d matches the serial reference on random instances") {
    Rng rng(21);
    for (int trial = 0; trial < 20; ++trial) {
        const int64_t B = rng.uniform_int(1, 2), Cin = rng.uniform_int(1, 3), Cout = rng.uniform_int(1, 3);
        const int64_t K = 2 * rng.uniform_int(0, 1) + 1;
        const int64_t stride = rng.uniform_int(1, 2), dil = rng.uniform_int(1, 2);
        const int64_t pad = rng.uniform_int(0, 2 + dil);
        const int64_t span = dil * (K - 1) + 1;
        const int64_t H = span + rng.uniform_int(0, 4) + (span > 1 ? 0 : 1);
        const int64_t W = span + rng.uniform_int(0, 4) + (span > 1 ? 0 : 1);
        if (H + 2 * pad < span || W + 2 * pad < span) continue;
        Tensor<double> in = random_tensor({B, Cin, H, W}, 100 + static_cast<uint64_t>(trial));
        Tensor<double> w = random_tensor({Cout, Cin, K, K}, 200 + static_cast<uint64_t>(trial));
        Tensor<double> b = random_tensor({Cout}, 300 + static_cast<uint64_t>(trial));
        Tensor<double> out = ops::conv2d(in, w, b, stride, pad, dil);
        Tensor<double> ref(out.shape());
        reference::conv2d_forward(in.data(), w.data(), b.data(), ref.data(), B, Cin, H, W, Cout, K, stride, pad, dil,
                                  out.dim(2), out.dim(3));
        CHECK(max_abs_diff(out, ref) < 1e-12);
    }
}

TEST_CASE("conv2d validates its contract") {
    Tensor<double> in({1, 2, 5, 5});
    Tensor<double> w({3, 2, 3, 3});
    Tensor<double> b({3});
    CHECK_THROWS_AS(ops::conv2d(in, Tensor<double>({3, 1, 3, 3}), b), std::invalid_argument);  // channel mismatch
    CHECK_THROWS_AS(ops::conv2d(in, Tensor<double>({3, 2, 2, 2}), b), std::invalid_argument);  // even kernel
    CHECK_THROWS_AS(ops::conv2d(in, Tensor<double>({3, 2, 3, 1}), b), std::invalid_argument);  // non-square
    CHECK_THROWS_AS(ops::conv2d(in, w, Tensor<double>({2})), std::invalid_argument);           // bias size
    CHECK_THROWS_AS(ops::conv2d(in, w, b, 0), std::invalid_argument);                          // stride
    CHECK_THROWS_AS(ops::conv2d(in, w, b, 1, -1), std::invalid_argument);                      // padding
    CHECK_THROWS_AS(ops::conv2d(in, w, b, 1, 0, 0), std::invalid_argument);                    // dilation
    CHECK_THROWS_AS(ops::conv2d(in, w, b, 1, 0, 3), std::invalid_argument);                    // span exceeds input
}

TEST_CASE("global pooling oracles") {
    Tensor<double> x({1, 2, 2, 2}, {1, 5, 3, 3, -2, -8, -4, -6});
    Tensor<double> mx = ops::global_pool_spatial(x, ops::PoolMode::kMax);
    Tensor<double> mn = ops::global_pool_spatial(x, ops::PoolMode::kMean);
    CHECK(mx.shape() == Shape{1, 2, 1, 1});
    CHECK(mx.at(0) == 5.0);
    CHECK(mx.at(1) == -2.0);
    CHECK(mn.at(0) == doctest::Approx(3.0));
    CHECK(mn.at(1) == doctest::Approx(-5.0));
}

TEST_CASE("channel pooling oracles") {
    Tensor<double> x({1, 3, 1, 2}, {1, 6, 5, 2, 3, 4});
    Tensor<double> mx = ops::pool_across_channels(x, ops::PoolMode::kMax);
    Tensor<double> mn = ops::pool_across_channels(x, ops::PoolMode::kMean);
    CHECK(mx.shape() == Shape{1, 1, 1, 2});
    CHECK(mx.at(0) == 5.0);
    CHECK(mx.at(1) == 6.0);
    CHECK(mn.at(0) == doctest::Approx(3.0));
    CHECK(mn.at(1) == doctest::Approx(4.0));
}

TEST_CASE("activation values") {
    Tensor<double> x({4}, {-2.0, 0.0, 0.5, 3.0});
    Tensor<double> r = ops::relu(x);
    CHECK(r.at(0) == 0.0);
    CHECK(r.at(2) == 0.5);
    Tensor<double> l = ops::leaky_relu(x, 0.1);
    CHECK(l.at(0) == doctest::Approx(-0.2));
    CHECK(l.at(3) == doctest::Approx(3.0));
    Tensor<double> s = ops::sigmoid(x);
    CHECK(s.at(1) == doctest::Approx(0.5));
    CHECK(s.at(3) == doctest::Approx(1.0 / (1.0 + std::exp(-3.0))));
}

TEST_CASE("add and sub demand identical shapes") {
    Tensor<double> a({2, 2}, {1, 2, 3, 4});
    Tensor<double> b({2, 2}, {4, 3, 2, 1});
    CHECK(ops::add(a, b).at(0) == 5.0);
    CHECK(ops::sub(a, b).at(0) == -3.0);
    CHECK_THROWS_AS(ops::add(a, Tensor<double>({4})), std::invalid_argument);
}

TEST_CASE("mul broadcasts singleton axes of the gate") {
    Tensor<double> x({1, 2, 2, 2}, {1, 2, 3, 4, 5, 6, 7, 8});
    Tensor<double> gate({1, 2, 1, 1}, {2, 10});
    Tensor<double> y = ops::mul(x, gate);
    CHECK(y.at(0) == 2.0);
    CHECK(y.at(3) == 8.0);
    CHECK(y.at(4) == 50.0);
    CHECK(y.at(7) == 80.0);
    CHECK_THROWS_AS(ops::mul(x, Tensor<double>({1, 3, 1, 1})), std::invalid_argument);
}

TEST_CASE("pixel_shuffle places the channel quartet as a 2x2 block") {
    Tensor<double> x({1, 4, 1, 1}, {1, 2, 3, 4});
    Tensor<double> y = ops::pixel_shuffle(x, 2);
    CHECK(y.shape() == Shape{1, 1, 2, 2});
    CHECK(y.at(0) == 1.0);
    CHECK(y.at(1) == 2.0);
    CHECK(y.at(2) == 3.0);
    CHECK(y.at(3) == 4.0);
}

TEST_CASE("pixel_shuffle and pixel_unshuffle are inverse bijections") {
    for (int64_t s : {1, 2, 3, 4}) {
        Tensor<double> x = random_tensor({2, 3 * s * s, 2, 3}, 40 + static_cast<uint64_t>(s));
        Tensor<double> roundtrip = ops::pixel_unshuffle(ops::pixel_shuffle(x, s), s);
        CHECK(roundtrip.shape() == x.shape());
        CHECK(max_abs_diff(roundtrip, x) == 0.0);
    }
    CHECK_THROWS_AS(ops::pixel_shuffle(Tensor<double>({1, 3, 2, 2}), 2), std::invalid_argument);
}

TEST_CASE("softmax oracle: logits x and x + ln 3 split 1:3") {
    Tensor<double> x({1, 2}, {0.4, 0.4 + std::log(3.0)});
    Tensor<double> y = ops::softmax_last_axis(x);
    CHECK(y.at(0) == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(y.at(1) == doctest::Approx(0.75).epsilon(1e-12));
}

TEST_CASE("softmax rows are stochastic and shift-invariant") {
    Tensor<double> x = random_tensor({3, 4, 5}, 50, -30.0, 30.0);
    Tensor<double> y = ops::softmax_last_axis(x);
    for (int64_t r = 0; r < 12; ++r) {
        double sum = 0.0;
        for (int64_t j = 0; j < 5; ++j) {
            CHECK(y.at(r * 5 + j) >= 0.0);
            sum += y.at(r * 5 + j);
        }
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
    }
    Tensor<double> shifted = ops::softmax_last_axis(ops::add(x, Tensor<double>::full(x.shape(), 100.0)));
    CHECK(max_abs_diff(y, shifted) < 1e-12);
}

TEST_CASE("batched width ops match the serial reference") {
    const int64_t B = 2, C = 3, H = 4, W = 5;
    Tensor<double> q = random_tensor({B, C, H, W}, 60);
    Tensor<double> k = random_tensor({B, C, H, W}, 61);
    Tensor<double> scores = ops::batched_width_scores(q, k);
    Tensor<double> ref_s({B, H, W, W});
    reference::width_scores_forward(q.data(), k.data(), ref_s.data(), B, C, H, W);
    CHECK(max_abs_diff(scores, ref_s) < 1e-12);

    Tensor<double> m = random_tensor({B, H, W, W}, 62);
    Tensor<double> f = random_tensor({B, C, H, W}, 63);
    Tensor<double> warped = ops::warp(m, f);
    Tensor<double> ref_w({B, C, H, W});
    reference::warp_forward(m.data(), f.data(), ref_w.data(), B, C, H, W);
    CHECK(max_abs_diff(warped, ref_w) < 1e-12);

    Tensor<double> a = random_tensor({B, H, W, W}, 64);
    Tensor<double> prod = ops::batched_width_matmul(m, a);
    Tensor<double> ref_p({B, H, W, W});
    reference::width_matmul_forward(m.data(), a.data(), ref_p.data(), B, H, W);
    CHECK(max_abs_diff(prod, ref_p) < 1e-12);
}

TEST_CASE("transpose_last_two is an involution that swaps indices") {
    Tensor<double> x = random_tensor({2, 3, 4, 4}, 70);
    Tensor<double> t = ops::transpose_last_two(x);
    for (int64_t b = 0; b < 2; ++b)
        for (int64_t h = 0; h < 3; ++h)
            for (int64_t i = 0; i < 4; ++i)
                for (int64_t j = 0; j < 4; ++j)
                    CHECK(t.at(((b * 3 + h) * 4 + i) * 4 + j) == x.at(((b * 3 + h) * 4 + j) * 4 + i));
    CHECK(max_abs_diff(ops::transpose_last_two(t), x) == 0.0);
}

TEST_CASE("diff_axis and diag_diff index correctly") {
    Tensor<double> x({1, 2, 3, 3}, {0, 1, 2, 3, 4, 5, 6, 7, 8, 0, 2, 4, 6, 8, 10, 12, 14, 16});
    Tensor<double> d1 = ops::diff_axis(x, 1);
    CHECK(d1.shape() == Shape{1, 1, 3, 3});
    CHECK(d1.at(0) == 0.0);
    CHECK(d1.at(1) == 1.0);
    CHECK(d1.at(8) == 8.0);
    Tensor<double> d2 = ops::diff_axis(x, 2);
    CHECK(d2.shape() == Shape{1, 2, 2, 3});
    CHECK(d2.at(0) == 3.0);
    Tensor<double> dd = ops::diag_diff(x);
    CHECK(dd.shape() == Shape{1, 2, 2, 2});
    CHECK(dd.at(0) == 4.0);   // x[0,0,1,1] - x[0,0,0,0]
    CHECK(dd.at(3) == 4.0);   // x[0,0,2,2] - x[0,0,1,1]
    CHECK(dd.at(4) == 8.0);   // second slice steps by 2
}

TEST_CASE("normalize_last_axis produces unit row sums") {
    Tensor<double> x = random_tensor({2, 3, 4}, 80, 0.1, 2.0);
    Tensor<double> y = ops::normalize_last_axis(x);
    for (int64_t r = 0; r < 6; ++r) {
        double sum = 0.0;
        for (int64_t j = 0; j < 4; ++j) sum += y.at(r * 4 + j);
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("nearest upsampling replicates blocks") {
    Tensor<double> att({1, 1, 2, 2}, {1, 2, 3, 4});
    Tensor<double> up = ops::nearest_upsample_attention(att, 2);
    CHECK(up.shape() == Shape{1, 2, 4, 4});
    CHECK(up.at(0) == 1.0);   // [h=0,i=0,j=0]
    CHECK(up.at(1) == 1.0);   // j=1 still copies source j=0
    CHECK(up.at(2) == 2.0);
    CHECK(up.at(4) == 1.0);   // i=1 copies source i=0
    CHECK(up.at(16) == 1.0);  // second h slice repeats the first

    Tensor<double> plane({1, 1, 1, 2}, {5, 6});
    Tensor<double> p = ops::nearest_upsample_plane(plane, 2);
    CHECK(p.shape() == Shape{1, 1, 2, 4});
    CHECK(p.at(0) == 5.0);
    CHECK(p.at(1) == 5.0);
    CHECK(p.at(2) == 6.0);
    CHECK(p.at(5) == 5.0);
}

TEST_CASE("clamp01 clips and detaches") {
    Tensor<double> x({3}, {-0.5, 0.25, 1.5});
    x.set_requires_grad(true);
    Tensor<double> y = ops::clamp01(x);
    CHECK(y.at(0) == 0.0);
    CHECK(y.at(1) == 0.25);
    CHECK(y.at(2) == 1.0);
    CHECK_FALSE(y.tracked());
}

TEST_CASE("concat_channels stacks along the channel axis") {
    Tensor<double> a({1, 1, 1, 2}, {1, 2});
    Tensor<double> b({1, 2, 1, 2}, {3, 4, 5, 6});
    Tensor<double> c = ops::concat_channels<double>({a, b});
    CHECK(c.shape() == Shape{1, 3, 1, 2});
    CHECK(c.at(0) == 1.0);
    CHECK(c.at(2) == 3.0);
    CHECK(c.at(5) == 6.0);
    CHECK_THROWS_AS(ops::concat_channels<double>({a, Tensor<double>({1, 1, 2, 2})}), std::invalid_argument);
}

TEST_CASE("parallel bicubic matches the scalar reference to 1e-6") {
    Tensor<double> ramp({1, 8, 8});
    for (int64_t i = 0; i < 64; ++i) ramp.at(i) = static_cast<double>(i) / 63.0;
    Tensor<double> rnd = random_tensor({3, 8, 8}, 90, 0.0, 1.0);
    for (auto [oh, ow] : std::vector<std::pair<int64_t, int64_t>>{{16, 16}, {4, 4}, {5, 11}, {8, 8}}) {
        for (const Tensor<double>* img : {&ramp, &rnd}) {
            const int64_t C = img->dim(0);
            Tensor<double> par({C, oh, ow}), ser({C, oh, ow});
            kernels::bicubic_resample(img->data(), par.data(), C, 8, 8, oh, ow);
            reference::bicubic_resample(img->data(), ser.data(), C, 8, 8, oh, ow);
            CHECK(max_abs_diff(par, ser) < 1e-6);
        }
    }
}

TEST_CASE("bicubic preserves constants at every sampled phase") {
    Tensor<double> c = Tensor<double>::full({1, 4, 4}, 0.37);
    int64_t phases = 0;
    for (int64_t ow = 3; ow <= 103; ++ow) {
        Tensor<double> out({1, 4, ow});
        kernels::bicubic_resample(c.data(), out.data(), 1, 4, 4, 4, ow);
        for (int64_t i = 0; i < out.numel(); ++i) CHECK(out.at(i) == doctest::Approx(0.37).epsilon(1e-6));
        phases += ow;
    }
    CHECK(phases > 1000);  // kernel weights summed to 1 at over 1000 phases
}
