// Copyright 2026 ccsbesr contributors
// SPDX-License-Identifier: Apache-2.0

#ifndef CCSBESR_BLOCKS_HPP
#define CCSBESR_BLOCKS_HPP

#include <functional>
#include <string>
#include <vector>

#include "ccsbesr/rng.hpp"
#include "ccsbesr/tensor.hpp"

namespace ccsbesr {

// Draws one derived seed per parameter tensor so that every tensor gets
// an independent deterministic stream.
struct SeedStream {
    uint64_t base;
    uint64_t index = 0;
    uint64_t next() { return Rng::derive(base, index++); }
};

template <typename T>
using ParamVisitor = std::function<void(const std::string&, Tensor<T>&)>;

// One convolution layer: weight Cout x Cin x K x K plus bias Cout.
template <typename T>
struct ConvLayer {
    Tensor<T> w;
    Tensor<T> b;
};

// Channel attention: a bottleneck MLP (stored as 1x1 convolutions) shared
// between the avg- and max-pooled descriptors.
template <typename T>
struct CABParams {
    int64_t reduction = 16;
    ConvLayer<T> fc1;  // C/r x C x 1 x 1
    ConvLayer<T> fc2;  // C x C/r x 1 x 1
};

// Spatial attention: 3x3 convolution from the 2-channel pooled map to 1.
template <typename T>
struct SABParams {
    ConvLayer<T> conv;
};

template <typename T>
struct CCSBParams {
    CABParams<T> cab;
    SABParams<T> sab;
};

// Three parallel 3x3 convolutions with dilations 1, 4, 8, fused by a 1x1
// convolution; the group output adds back its input.
template <typename T>
struct ASPPGroupParams {
    ConvLayer<T> d1;
    ConvLayer<T> d4;
    ConvLayer<T> d8;
    ConvLayer<T> fuse;  // C x 3C x 1 x 1
};

// Cascade of ASPP groups. Each group carries its own residual, so the
// input already survives to the output; with all weights zero the whole
// block is the identity.
template <typename T>
struct ResASPPBlockParams {
    std::vector<ASPPGroupParams<T>> groups;
};

template <typename T>
struct ResBlockParams {
    ConvLayer<T> c1;
    ConvLayer<T> c2;
};

template <typename T>
struct ExtractorPairParams {
    ResASPPBlockParams<T> aspp;
    ResBlockParams<T> res;
};

// Stem conv (3 -> C), one CCSB, then `pairs` cascades of residual ASPP
// block followed by a residual block. Both views share one instance.
template <typename T>
struct ExtractorParams {
    ConvLayer<T> stem;
    CCSBParams<T> ccsb;
    std::vector<ExtractorPairParams<T>> pairs;
};

template <typename T>
ConvLayer<T> make_conv_layer(int64_t out_ch, int64_t in_ch, int64_t k, SeedStream& seeds);

template <typename T>
CABParams<T> make_cab(int64_t channels, int64_t reduction, SeedStream& seeds);

template <typename T>
SABParams<T> make_sab(SeedStream& seeds);

template <typename T>
CCSBParams<T> make_ccsb(int64_t channels, int64_t reduction, SeedStream& seeds);

template <typename T>
ASPPGroupParams<T> make_aspp_group(int64_t channels, SeedStream& seeds);

template <typename T>
ResASPPBlockParams<T> make_res_aspp_block(int64_t channels, int64_t groups, SeedStream& seeds);

template <typename T>
ResBlockParams<T> make_res_block(int64_t channels, SeedStream& seeds);

template <typename T>
ExtractorParams<T> make_extractor(int64_t channels, int64_t reduction, int64_t aspp_groups, int64_t pairs,
                                  SeedStream& seeds);

template <typename T>
void visit_params(ConvLayer<T>& p, const std::string& prefix, const ParamVisitor<T>& fn);
template <typename T>
void visit_params(CABParams<T>& p, const std::string& prefix, const ParamVisitor<T>& fn);
template <typename T>
void visit_params(SABParams<T>& p, const std::string& prefix, const ParamVisitor<T>& fn);
template <typename T>
void visit_params(CCSBParams<T>& p, const std::string& prefix, const ParamVisitor<T>& fn);
template <typename T>
void visit_params(ASPPGroupParams<T>& p, const std::string& prefix, const ParamVisitor<T>& fn);
template <typename T>
void visit_params(ResASPPBlockParams<T>& p, const std::string& prefix, const ParamVisitor<T>& fn);
template <typename T>
void visit_params(ResBlockParams<T>& p, const std::string& prefix, const ParamVisitor<T>& fn);
template <typename T>
void visit_params(ExtractorParams<T>& p, const std::string& prefix, const ParamVisitor<T>& fn);

// gate = sigmoid(MLP(avgpool(F)) + MLP(maxpool(F))), output F * gate.
template <typename T>
Tensor<T> channel_attention(const Tensor<T>& f, const CABParams<T>& p);

// map = sigmoid(conv3x3(concat[max over C, mean over C])), output F * map.
template <typename T>
Tensor<T> spatial_attention(const Tensor<T>& f, const SABParams<T>& p);

template <typename T>
Tensor<T> ccsb(const Tensor<T>& f, const CCSBParams<T>& p);

template <typename T>
Tensor<T> aspp_group(const Tensor<T>& f, const ASPPGroupParams<T>& p);

template <typename T>
Tensor<T> res_aspp_block(const Tensor<T>& f, const ResASPPBlockParams<T>& p);

template <typename T>
Tensor<T> res_block(const Tensor<T>& f, const ResBlockParams<T>& p);

template <typename T>
Tensor<T> feature_extractor(const Tensor<T>& image, const ExtractorParams<T>& p);

}  // namespace ccsbesr

#endif
