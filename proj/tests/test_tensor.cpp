// Copyright 2026 ccsbesr contributors
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "ccsbesr/ops.hpp"
#include "ccsbesr/tensor.hpp"

using namespace ccsbesr;

TEST_CASE("shape_numel rejects non-positive extents") {
    CHECK(shape_numel({2, 3, 4}) == 24);
    CHECK(shape_numel({1}) == 1);
    CHECK_THROWS_AS(shape_numel({2, 0, 4}), std::invalid_argument);
    CHECK_THROWS_AS(shape_numel({-1}), std::invalid_argument);
}

TEST_CASE("construction zero-fills and validates data length") {
    Tensor<float> t({2, 3});
    CHECK(t.numel() == 6);
    for (int64_t i = 0; i < 6; ++i) CHECK(t.at(i) == 0.0f);
    CHECK_THROWS_AS(Tensor<float>({2, 3}, {1.0f, 2.0f}), std::invalid_argument);
    Tensor<float> f = Tensor<float>::full({2, 2}, 7.0f);
    CHECK(f.at(3) == 7.0f);
    CHECK(Tensor<float>::scalar(3.0f).item() == 3.0f);
}

TEST_CASE("item demands a single element") {
    Tensor<double> t({2, 2});
    CHECK_THROWS_AS(t.item(), std::invalid_argument);
}

TEST_CASE("copies share storage") {
    Tensor<float> a({4}, {1, 2, 3, 4});
    Tensor<float> b = a;
    b.at(0) = 9.0f;
    CHECK(a.at(0) == 9.0f);
    CHECK(a.storage() == b.storage());
}

TEST_CASE("reshaped shares storage and checks the element count") {
    Tensor<float> a({2, 3}, {1, 2, 3, 4, 5, 6});
    Tensor<float> b = a.reshaped({3, 2});
    CHECK(b.storage() == a.storage());
    CHECK(b.dim(0) == 3);
    CHECK_THROWS_AS(a.reshaped({4, 2}), std::invalid_argument);
    a.set_requires_grad(true);
    CHECK_THROWS_AS(a.reshaped({6}), std::logic_error);
}

TEST_CASE("requires_grad is a leaf-only property") {
    Tensor<double> x({2}, {1, 2});
    x.set_requires_grad(true);
    CHECK(x.requires_grad());
    Tensor<double> y = ops::relu(x);
    CHECK(y.tracked());
    CHECK_FALSE(y.requires_grad());
    CHECK_THROWS_AS(y.set_requires_grad(true), std::logic_error);
    CHECK_THROWS_AS(y.set_requires_grad(false), std::logic_error);
    x.set_requires_grad(false);
    CHECK_FALSE(x.tracked());
}

TEST_CASE("grad on an untracked tensor throws") {
    Tensor<double> x({2}, {1, 2});
    CHECK_THROWS_AS(x.grad(), std::logic_error);
}

TEST_CASE("backward demands a tracked scalar") {
    Tensor<double> x({2}, {1, 2});
    x.set_requires_grad(true);
    Tensor<double> y = ops::relu(x);
    CHECK_THROWS_AS(backward(y), std::invalid_argument);  // not scalar
    Tensor<double> free_scalar = Tensor<double>::scalar(1.0);
    CHECK_THROWS_AS(backward(free_scalar), std::runtime_error);  // not on tape
}

TEST_CASE("chain rule through mul and sum") {
    Tensor<double> x({3}, {1, 2, 3});
    Tensor<double> y({3}, {4, 5, 6});
    x.set_requires_grad(true);
    y.set_requires_grad(true);
    backward(ops::sum_all(ops::mul(x, y)));
    for (int64_t i = 0; i < 3; ++i) {
        CHECK(x.grad().at(i) == doctest::Approx(y.at(i)));
        CHECK(y.grad().at(i) == doctest::Approx(x.at(i)));
    }
}

TEST_CASE("fan-out accumulates into one leaf") {
    Tensor<double> x({2}, {3, -4});
    x.set_requires_grad(true);
    backward(ops::sum_all(ops::mul(x, x)));
    CHECK(x.grad().at(0) == doctest::Approx(6.0));
    CHECK(x.grad().at(1) == doctest::Approx(-8.0));
}

TEST_CASE("leaf gradients accumulate across backward calls until zeroed") {
    Tensor<double> x({2}, {1, 1});
    x.set_requires_grad(true);
    backward(ops::sum_all(ops::scale(x, 2.0)));
    backward(ops::sum_all(ops::scale(x, 3.0)));
    CHECK(x.grad().at(0) == doctest::Approx(5.0));
    x.zero_grad();
    backward(ops::sum_all(ops::scale(x, 3.0)));
    CHECK(x.grad().at(0) == doctest::Approx(3.0));
}

TEST_CASE("NoGradGuard suppresses taping") {
    Tensor<double> x({2}, {1, 2});
    x.set_requires_grad(true);
    {
        NoGradGuard ng;
        CHECK_FALSE(grad_enabled());
        Tensor<double> y = ops::relu(x);
        CHECK_FALSE(y.tracked());
    }
    CHECK(grad_enabled());
}

TEST_CASE("detached shares data without the tape") {
    Tensor<double> x({2}, {1, 2});
    x.set_requires_grad(true);
    Tensor<double> y = ops::relu(x);
    Tensor<double> d = y.detached();
    CHECK_FALSE(d.tracked());
    CHECK(d.storage() == y.storage());
}

TEST_CASE("interior gradients reset per backward, leaves persist") {
    Tensor<double> x({2}, {1, 2});
    x.set_requires_grad(true);
    Tensor<double> y = ops::scale(x, 2.0);
    Tensor<double> s = ops::sum_all(y);
    backward(s);
    backward(s);  // same tape twice
    // Each walk seeds the interior afresh, so the leaf sees 2 + 2.
    CHECK(x.grad().at(0) == doctest::Approx(4.0));
}
