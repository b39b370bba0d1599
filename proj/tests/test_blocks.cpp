// Copyright 2026 ccsbesr contributors
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <set>
#include <vector>

#include "ccsbesr/blocks.hpp"
#include "ccsbesr/gradcheck.hpp"
#include "ccsbesr/ops.hpp"
#include "ccsbesr/rng.hpp"

using namespace ccsbesr;

namespace {

Tensor<double> rnd(Shape shape, uint64_t seed) {
    Tensor<double> t(std::move(shape));
    Rng rng(seed);
    for (int64_t i = 0; i < t.numel(); ++i) t.at(i) = rng.uniform(-1.0, 1.0);
    return t;
}

template <typename P>
void zero_all(P& params) {
    visit_params<double>(params, "p", [](const std::string&, Tensor<double>& t) {
        for (int64_t i = 0; i < t.numel(); ++i) t.at(i) = 0.0;
    });
}

}  // namespace

TEST_CASE("conv layer construction: shapes, zero bias, xavier bound, determinism") {
    SeedStream s1{42};
    ConvLayer<double> l = make_conv_layer<double>(8, 4, 3, s1);
    CHECK(l.w.shape() == Shape{8, 4, 3, 3});
    CHECK(l.b.shape() == Shape{8});
    for (int64_t i = 0; i < l.b.numel(); ++i) CHECK(l.b.at(i) == 0.0);

    const double bound = std::sqrt(6.0 / ((4 + 8) * 9.0));
    double max_abs = 0.0;
    for (int64_t i = 0; i < l.w.numel(); ++i) max_abs = std::max(max_abs, std::abs(l.w.at(i)));
    CHECK(max_abs <= bound);
    CHECK(max_abs > 0.1 * bound);

    SeedStream s2{42};
    ConvLayer<double> l2 = make_conv_layer<double>(8, 4, 3, s2);
    for (int64_t i = 0; i < l.w.numel(); ++i) CHECK(l.w.at(i) == l2.w.at(i));

    SeedStream s3{43};
    ConvLayer<double> l3 = make_conv_layer<double>(8, 4, 3, s3);
    bool differs = false;
    for (int64_t i = 0; i < l.w.numel(); ++i) differs |= (l.w.at(i) != l3.w.at(i));
    CHECK(differs);
}

TEST_CASE("channel attention with zero parameters halves the input") {
    SeedStream s{1};
    CABParams<double> p = make_cab<double>(8, 4, s);
    zero_all(p);
    Tensor<double> x = rnd({2, 8, 3, 5}, 7);
    Tensor<double> y = channel_attention(x, p);
    REQUIRE(y.shape() == x.shape());
    for (int64_t i = 0; i < x.numel(); ++i) CHECK(y.at(i) == doctest::Approx(0.5 * x.at(i)).epsilon(1e-12));
}

TEST_CASE("channel attention with a saturated gate is the identity") {
    SeedStream s{2};
    CABParams<double> p = make_cab<double>(8, 4, s);
    zero_all(p);
    for (int64_t i = 0; i < p.fc2.b.numel(); ++i) p.fc2.b.at(i) = 40.0;
    Tensor<double> x = rnd({1, 8, 4, 4}, 8);
    Tensor<double> y = channel_attention(x, p);
    for (int64_t i = 0; i < x.numel(); ++i) CHECK(y.at(i) == doctest::Approx(x.at(i)).epsilon(1e-9));
}

TEST_CASE("channel attention gate strictly contracts magnitudes") {
    SeedStream s{3};
    CABParams<double> p = make_cab<double>(4, 2, s);
    Tensor<double> x = rnd({2, 4, 3, 3}, 9);
    Tensor<double> y = channel_attention(x, p);
    for (int64_t i = 0; i < x.numel(); ++i) {
        CHECK(std::abs(y.at(i)) <= std::abs(x.at(i)));
        CHECK(y.at(i) * x.at(i) >= 0.0);
    }
}

TEST_CASE("channel attention rejects mismatched channel count") {
    SeedStream s{4};
    CABParams<double> p = make_cab<double>(8, 4, s);
    Tensor<double> x({1, 4, 3, 3});
    CHECK_THROWS_AS(channel_attention(x, p), std::invalid_argument);
}

TEST_CASE("spatial attention with zero parameters halves the input") {
    SeedStream s{5};
    SABParams<double> p = make_sab<double>(s);
    zero_all(p);
    Tensor<double> x = rnd({2, 3, 4, 6}, 10);
    Tensor<double> y = spatial_attention(x, p);
    REQUIRE(y.shape() == x.shape());
    for (int64_t i = 0; i < x.numel(); ++i) CHECK(y.at(i) == doctest::Approx(0.5 * x.at(i)).epsilon(1e-12));
}

TEST_CASE("spatial attention with a saturated gate is the identity") {
    SeedStream s{6};
    SABParams<double> p = make_sab<double>(s);
    zero_all(p);
    p.conv.b.at(0) = 40.0;
    Tensor<double> x = rnd({1, 5, 3, 3}, 11);
    Tensor<double> y = spatial_attention(x, p);
    for (int64_t i = 0; i < x.numel(); ++i) CHECK(y.at(i) == doctest::Approx(x.at(i)).epsilon(1e-9));
}

TEST_CASE("combined block equals spatial attention applied after channel attention") {
    SeedStream s{7};
    CCSBParams<double> p = make_ccsb<double>(6, 2, s);
    Tensor<double> x = rnd({2, 6, 4, 5}, 12);
    Tensor<double> combined = ccsb(x, p);
    Tensor<double> chained = spatial_attention(channel_attention(x, p.cab), p.sab);
    REQUIRE(combined.shape() == chained.shape());
    for (int64_t i = 0; i < combined.numel(); ++i) CHECK(combined.at(i) == chained.at(i));
}

TEST_CASE("combined block with zero parameters quarters the input") {
    SeedStream s{8};
    CCSBParams<double> p = make_ccsb<double>(4, 2, s);
    zero_all(p);
    Tensor<double> x = rnd({1, 4, 3, 3}, 13);
    Tensor<double> y = ccsb(x, p);
    for (int64_t i = 0; i < x.numel(); ++i) CHECK(y.at(i) == doctest::Approx(0.25 * x.at(i)).epsilon(1e-12));
}

TEST_CASE("dilated group with zero parameters passes the input through") {
    SeedStream s{9};
    ASPPGroupParams<double> p = make_aspp_group<double>(4, s);
    zero_all(p);
    Tensor<double> x = rnd({2, 4, 9, 9}, 14);
    Tensor<double> y = aspp_group(x, p);
    for (int64_t i = 0; i < x.numel(); ++i) CHECK(y.at(i) == x.at(i));
}

TEST_CASE("dilated group preserves spatial extents") {
    SeedStream s{10};
    ASPPGroupParams<double> p = make_aspp_group<double>(3, s);
    Tensor<double> x = rnd({1, 3, 5, 7}, 15);
    Tensor<double> y = aspp_group(x, p);
    CHECK(y.shape() == x.shape());
}

TEST_CASE("residual dilated block is the cascade of its groups") {
    SeedStream s{11};
    ResASPPBlockParams<double> p = make_res_aspp_block<double>(3, 3, s);
    REQUIRE(p.groups.size() == 3);
    Tensor<double> x = rnd({1, 3, 6, 8}, 16);
    Tensor<double> block = res_aspp_block(x, p);
    Tensor<double> manual = aspp_group(aspp_group(aspp_group(x, p.groups[0]), p.groups[1]), p.groups[2]);
    REQUIRE(block.shape() == manual.shape());
    for (int64_t i = 0; i < block.numel(); ++i) CHECK(block.at(i) == manual.at(i));
}

TEST_CASE("residual dilated block with zero parameters is the identity") {
    SeedStream s{12};
    ResASPPBlockParams<double> p = make_res_aspp_block<double>(4, 2, s);
    zero_all(p);
    Tensor<double> x = rnd({1, 4, 9, 9}, 17);
    Tensor<double> y = res_aspp_block(x, p);
    for (int64_t i = 0; i < x.numel(); ++i) CHECK(y.at(i) == x.at(i));
}

TEST_CASE("plain residual block with zero parameters is the identity") {
    SeedStream s{13};
    ResBlockParams<double> p = make_res_block<double>(4, s);
    zero_all(p);
    Tensor<double> x = rnd({2, 4, 4, 4}, 18);
    Tensor<double> y = res_block(x, p);
    for (int64_t i = 0; i < x.numel(); ++i) CHECK(y.at(i) == x.at(i));
}

TEST_CASE("feature extractor maps B x 3 x H x W to B x C x H x W") {
    SeedStream s{14};
    ExtractorParams<double> p = make_extractor<double>(8, 4, 2, 2, s);
    Tensor<double> x = rnd({2, 3, 6, 10}, 19);
    Tensor<double> f = feature_extractor(x, p);
    CHECK(f.shape() == Shape{2, 8, 6, 10});

    Tensor<double> bad({1, 4, 6, 6});
    CHECK_THROWS_AS(feature_extractor(bad, p), std::invalid_argument);
}

TEST_CASE("feature extractor is deterministic in its seed") {
    SeedStream sa{77};
    SeedStream sb{77};
    ExtractorParams<double> pa = make_extractor<double>(6, 2, 1, 1, sa);
    ExtractorParams<double> pb = make_extractor<double>(6, 2, 1, 1, sb);
    Tensor<double> x = rnd({1, 3, 5, 5}, 20);
    Tensor<double> fa = feature_extractor(x, pa);
    Tensor<double> fb = feature_extractor(x, pb);
    for (int64_t i = 0; i < fa.numel(); ++i) CHECK(fa.at(i) == fb.at(i));
}

TEST_CASE("parameter visitation yields unique dotted names covering every tensor") {
    SeedStream s{15};
    ExtractorParams<double> p = make_extractor<double>(8, 4, 2, 2, s);
    std::set<std::string> names;
    int64_t count = 0;
    visit_params<double>(p, "extractor", [&](const std::string& name, Tensor<double>&) {
        names.insert(name);
        ++count;
    });
    // stem 2, ccsb 6, per pair: 2 groups x 8 + res 4 = 20.
    CHECK(count == 2 + 6 + 2 * 20);
    CHECK(static_cast<int64_t>(names.size()) == count);
    CHECK(names.count("extractor.stem.weight") == 1);
    CHECK(names.count("extractor.ccsb.cab.fc1.weight") == 1);
    CHECK(names.count("extractor.ccsb.sab.conv.bias") == 1);
    CHECK(names.count("extractor.pair1.aspp.group0.d4.weight") == 1);
    CHECK(names.count("extractor.pair0.res.c2.bias") == 1);
}

TEST_CASE("extractor gradients pass a finite-difference check") {
    SeedStream s{16};
    ExtractorParams<double> p = make_extractor<double>(4, 2, 1, 1, s);
    Tensor<double> x = rnd({1, 3, 5, 6}, 21);
    std::vector<Tensor<double>*> leaves;
    visit_params<double>(p, "e", [&](const std::string&, Tensor<double>& t) { leaves.push_back(&t); });
    leaves.push_back(&x);
    GradCheckStats st =
        check_gradients<double>([&]() { return feature_extractor(x, p); }, leaves, 1e-3, 22);
    CHECK(st.max_rel_err < 1e-4);
}
