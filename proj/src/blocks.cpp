// Copyright 2026 ccsbesr contributors
// SPDX-License-Identifier: Apache-2.0

#include "ccsbesr/blocks.hpp"

#include "ccsbesr/init.hpp"
#include "ccsbesr/ops.hpp"

namespace ccsbesr {

namespace {
constexpr double kLeakySlope = 0.1;
}

template <typename T>
ConvLayer<T> make_conv_layer(int64_t out_ch, int64_t in_ch, int64_t k, SeedStream& seeds) {
    ConvLayer<T> l;
    l.w = xavier_init<T>({out_ch, in_ch, k, k}, seeds.next());
    l.b = Tensor<T>(Shape{out_ch});
    return l;
}

template <typename T>
CABParams<T> make_cab(int64_t channels, int64_t reduction, SeedStream& seeds) {
    if (reduction < 1 || channels % reduction != 0)
        throw std::invalid_argument("make_cab: reduction " + std::to_string(reduction) +
                                    " must divide channel count " + std::to_string(channels));
    CABParams<T> p;
    p.reduction = reduction;
    p.fc1 = make_conv_layer<T>(channels / reduction, channels, 1, seeds);
    p.fc2 = make_conv_layer<T>(channels, channels / reduction, 1, seeds);
    // The shared MLP is applied to both pooled descriptors, so a bias of 1
    // puts the initial gate near sigmoid(2): attention starts open and the
    // stacked blocks do not mute the signal before training begins.
    for (int64_t i = 0; i < p.fc2.b.numel(); ++i) p.fc2.b.at(i) = T(1);
    return p;
}

template <typename T>
SABParams<T> make_sab(SeedStream& seeds) {
    SABParams<T> p;
    p.conv = make_conv_layer<T>(1, 2, 3, seeds);
    // Same open-gate start as the channel branch: sigmoid(2) at init.
    for (int64_t i = 0; i < p.conv.b.numel(); ++i) p.conv.b.at(i) = T(2);
    return p;
}

template <typename T>
CCSBParams<T> make_ccsb(int64_t channels, int64_t reduction, SeedStream& seeds) {
    CCSBParams<T> p;
    p.cab = make_cab<T>(channels, reduction, seeds);
    p.sab = make_sab<T>(seeds);
    return p;
}

template <typename T>
ASPPGroupParams<T> make_aspp_group(int64_t channels, SeedStream& seeds) {
    ASPPGroupParams<T> p;
    p.d1 = make_conv_layer<T>(channels, channels, 3, seeds);
    p.d4 = make_conv_layer<T>(channels, channels, 3, seeds);
    p.d8 = make_conv_layer<T>(channels, channels, 3, seeds);
    p.fuse = make_conv_layer<T>(channels, 3 * channels, 1, seeds);
    return p;
}

template <typename T>
ResASPPBlockParams<T> make_res_aspp_block(int64_t channels, int64_t groups, SeedStream& seeds) {
    if (groups < 1) throw std::invalid_argument("make_res_aspp_block: group count must be >= 1");
    ResASPPBlockParams<T> p;
    for (int64_t g = 0; g < groups; ++g) p.groups.push_back(make_aspp_group<T>(channels, seeds));
    return p;
}

template <typename T>
ResBlockParams<T> make_res_block(int64_t channels, SeedStream& seeds) {
    ResBlockParams<T> p;
    p.c1 = make_conv_layer<T>(channels, channels, 3, seeds);
    p.c2 = make_conv_layer<T>(channels, channels, 3, seeds);
    return p;
}

template <typename T>
ExtractorParams<T> make_extractor(int64_t channels, int64_t reduction, int64_t aspp_groups, int64_t pairs,
                                  SeedStream& seeds) {
    if (pairs < 1) throw std::invalid_argument("make_extractor: pair count must be >= 1");
    ExtractorParams<T> p;
    p.stem = make_conv_layer<T>(channels, 3, 3, seeds);
    p.ccsb = make_ccsb<T>(channels, reduction, seeds);
    for (int64_t i = 0; i < pairs; ++i) {
        ExtractorPairParams<T> pair;
        pair.aspp = make_res_aspp_block<T>(channels, aspp_groups, seeds);
        pair.res = make_res_block<T>(channels, seeds);
        p.pairs.push_back(std::move(pair));
    }
    return p;
}

template <typename T>
void visit_params(ConvLayer<T>& p, const std::string& prefix, const ParamVisitor<T>& fn) {
    fn(prefix + ".weight", p.w);
    fn(prefix + ".bias", p.b);
}

template <typename T>
void visit_params(CABParams<T>& p, const std::string& prefix, const ParamVisitor<T>& fn) {
    visit_params(p.fc1, prefix + ".fc1", fn);
    visit_params(p.fc2, prefix + ".fc2", fn);
}

template <typename T>
void visit_params(SABParams<T>& p, const std::string& prefix, const ParamVisitor<T>& fn) {
    visit_params(p.conv, prefix + ".conv", fn);
}

template <typename T>
void visit_params(CCSBParams<T>& p, const std::string& prefix, const ParamVisitor<T>& fn) {
    visit_params(p.cab, prefix + ".cab", fn);
    visit_params(p.sab, prefix + ".sab", fn);
}

template <typename T>
void visit_params(ASPPGroupParams<T>& p, const std::string& prefix, const ParamVisitor<T>& fn) {
    visit_params(p.d1, prefix + ".d1", fn);
    visit_params(p.d4, prefix + ".d4", fn);
    visit_params(p.d8, prefix + ".d8", fn);
    visit_params(p.fuse, prefix + ".fuse", fn);
}

template <typename T>
void visit_params(ResASPPBlockParams<T>& p, const std::string& prefix, const ParamVisitor<T>& fn) {
    for (size_t g = 0; g < p.groups.size(); ++g)
        visit_params(p.groups[g], prefix + ".group" + std::to_string(g), fn);
}

template <typename T>
void visit_params(ResBlockParams<T>& p, const std::string& prefix, const ParamVisitor<T>& fn) {
    visit_params(p.c1, prefix + ".c1", fn);
    visit_params(p.c2, prefix + ".c2", fn);
}

template <typename T>
void visit_params(ExtractorParams<T>& p, const std::string& prefix, const ParamVisitor<T>& fn) {
    visit_params(p.stem, prefix + ".stem", fn);
    visit_params(p.ccsb, prefix + ".ccsb", fn);
    for (size_t i = 0; i < p.pairs.size(); ++i) {
        visit_params(p.pairs[i].aspp, prefix + ".pair" + std::to_string(i) + ".aspp", fn);
        visit_params(p.pairs[i].res, prefix + ".pair" + std::to_string(i) + ".res", fn);
    }
}

template <typename T>
Tensor<T> channel_attention(const Tensor<T>& f, const CABParams<T>& p) {
    if (f.ndim() != 4 || f.dim(1) != p.fc1.w.dim(1))
        throw std::invalid_argument("channel_attention: input " + shape_str(f.shape()) + " does not carry " +
                                    std::to_string(p.fc1.w.dim(1)) + " channels");
    auto mlp = [&](const Tensor<T>& v) {
        return ops::conv2d(ops::relu(ops::conv2d(v, p.fc1.w, p.fc1.b)), p.fc2.w, p.fc2.b);
    };
    Tensor<T> avg = ops::global_pool_spatial(f, ops::PoolMode::kMean);
    Tensor<T> mx = ops::global_pool_spatial(f, ops::PoolMode::kMax);
    Tensor<T> gate = ops::sigmoid(ops::add(mlp(avg), mlp(mx)));
    return ops::mul(f, gate);
}

template <typename T>
Tensor<T> spatial_attention(const Tensor<T>& f, const SABParams<T>& p) {
    Tensor<T> mx = ops::pool_across_channels(f, ops::PoolMode::kMax);
    Tensor<T> mn = ops::pool_across_channels(f, ops::PoolMode::kMean);
    Tensor<T> map = ops::sigmoid(ops::conv2d(ops::concat_channels<T>({mx, mn}), p.conv.w, p.conv.b, 1, 1, 1));
    return ops::mul(f, map);
}

template <typename T>
Tensor<T> ccsb(const Tensor<T>& f, const CCSBParams<T>& p) {
    return spatial_attention(channel_attention(f, p.cab), p.sab);
}

template <typename T>
Tensor<T> aspp_group(const Tensor<T>& f, const ASPPGroupParams<T>& p) {
    const T slope = static_cast<T>(kLeakySlope);
    Tensor<T> b1 = ops::leaky_relu(ops::conv2d(f, p.d1.w, p.d1.b, 1, 1, 1), slope);
    Tensor<T> b4 = ops::leaky_relu(ops::conv2d(f, p.d4.w, p.d4.b, 1, 4, 4), slope);
    Tensor<T> b8 = ops::leaky_relu(ops::conv2d(f, p.d8.w, p.d8.b, 1, 8, 8), slope);
    Tensor<T> fused = ops::conv2d(ops::concat_channels<T>({b1, b4, b8}), p.fuse.w, p.fuse.b);
    return ops::add(f, fused);
}

template <typename T>
Tensor<T> res_aspp_block(const Tensor<T>& f, const ResASPPBlockParams<T>& p) {
    Tensor<T> cur = f;
    for (const auto& g : p.groups) cur = aspp_group(cur, g);
    return cur;
}

template <typename T>
Tensor<T> res_block(const Tensor<T>& f, const ResBlockParams<T>& p) {
    const T slope = static_cast<T>(kLeakySlope);
    Tensor<T> h = ops::leaky_relu(ops::conv2d(f, p.c1.w, p.c1.b, 1, 1, 1), slope);
    Tensor<T> out = ops::conv2d(h, p.c2.w, p.c2.b, 1, 1, 1);
    return ops::add(f, out);
}

template <typename T>
Tensor<T> feature_extractor(const Tensor<T>& image, const ExtractorParams<T>& p) {
    if (image.ndim() != 4 || image.dim(1) != 3)
        throw std::invalid_argument("feature_extractor: expected B x 3 x H x W input, got " +
                                    shape_str(image.shape()));
    Tensor<T> f = ops::conv2d(image, p.stem.w, p.stem.b, 1, 1, 1);
    f = ccsb(f, p.ccsb);
    for (const auto& pair : p.pairs) {
        f = res_aspp_block(f, pair.aspp);
        f = res_block(f, pair.res);
    }
    return f;
}

#define CCSBESR_BLOCKS_INSTANTIATE(T)                                                                     \
    template ConvLayer<T> make_conv_layer<T>(int64_t, int64_t, int64_t, SeedStream&);                     \
    template CABParams<T> make_cab<T>(int64_t, int64_t, SeedStream&);                                     \
    template SABParams<T> make_sab<T>(SeedStream&);                                                       \
    template CCSBParams<T> make_ccsb<T>(int64_t, int64_t, SeedStream&);                                   \
    template ASPPGroupParams<T> make_aspp_group<T>(int64_t, SeedStream&);                                 \
    template ResASPPBlockParams<T> make_res_aspp_block<T>(int64_t, int64_t, SeedStream&);                 \
    template ResBlockParams<T> make_res_block<T>(int64_t, SeedStream&);                                   \
    template ExtractorParams<T> make_extractor<T>(int64_t, int64_t, int64_t, int64_t, SeedStream&);       \
    template void visit_params<T>(ConvLayer<T>&, const std::string&, const ParamVisitor<T>&);             \
    template void visit_params<T>(CABParams<T>&, const std::string&, const ParamVisitor<T>&);             \
    template void visit_params<T>(SABParams<T>&, const std::string&, const ParamVisitor<T>&);             \
    template void visit_params<T>(CCSBParams<T>&, const std::string&, const ParamVisitor<T>&);            \
    template void visit_params<T>(ASPPGroupParams<T>&, const std::string&, const ParamVisitor<T>&);       \
    template void visit_params<T>(ResASPPBlockParams<T>&, const std::string&, const ParamVisitor<T>&);    \
    template void visit_params<T>(ResBlockParams<T>&, const std::string&, const ParamVisitor<T>&);        \
    template void visit_params<T>(ExtractorParams<T>&, const std::string&, const ParamVisitor<T>&);       \
    template Tensor<T> channel_attention<T>(const Tensor<T>&, const CABParams<T>&);                       \
    template Tensor<T> spatial_attention<T>(const Tensor<T>&, const SABParams<T>&);                       \
    template Tensor<T> ccsb<T>(const Tensor<T>&, const CCSBParams<T>&);                                   \
    template Tensor<T> aspp_group<T>(const Tensor<T>&, const ASPPGroupParams<T>&);                        \
    template Tensor<T> res_aspp_block<T>(const Tensor<T>&, const ResASPPBlockParams<T>&);                 \
    template Tensor<T> res_block<T>(const Tensor<T>&, const ResBlockParams<T>&);                          \
    template Tensor<T> feature_extractor<T>(const Tensor<T>&, const ExtractorParams<T>&);

CCSBESR_BLOCKS_INSTANTIATE(float)
CCSBESR_BLOCKS_INSTANTIATE(double)

#undef CCSBESR_BLOCKS_INSTANTIATE

}  // namespace ccsbesr
