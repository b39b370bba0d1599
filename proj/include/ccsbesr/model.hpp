// Copyright 2026 ccsbesr contributors
// SPDX-License-Identifier: Apache-2.0

#ifndef CCSBESR_MODEL_HPP
#define CCSBESR_MODEL_HPP

#include <string>
#include <vector>

#include "ccsbesr/pam.hpp"

namespace ccsbesr {

struct ModelConfig {
    int64_t scale = 2;             // 2 or 4
    int64_t channels = 64;         // feature width C
    int64_t reduction = 16;        // channel-attention bottleneck ratio
    double tau = 0.1;              // valid-mask threshold
    int64_t aspp_groups = 3;       // groups per residual ASPP block
    int64_t extraction_pairs = 2;  // (res_aspp_block, res_block) pairs
    int64_t upsampler_blocks = 4;  // CCSBs ahead of the shuffle stages
    uint64_t seed = 0;
};

bool operator==(const ModelConfig& a, const ModelConfig& b);

// Throws invalid_argument describing the first violated constraint.
void validate_config(const ModelConfig& config);

// Canonical key = value block, one key per line, round-trip exact.
std::string serialize_model_config(const ModelConfig& config);

// Parses the model keys out of a key = value block, ignoring unknown
// keys (a run configuration embeds these among its own).
ModelConfig parse_model_config(const std::string& text);

template <typename T>
struct UpsamplerParams {
    std::vector<CCSBParams<T>> blocks;
    std::vector<ConvLayer<T>> stage_convs;  // one 4C-out conv per x2 stage
    ConvLayer<T> out_conv;                  // 3 x C x 3 x 3
};

template <typename T>
struct CCSBESRParams {
    ExtractorParams<T> extractor;
    PAMParams<T> pam;
    UpsamplerParams<T> upsampler;
};

template <typename T>
struct ModelOutput {
    Tensor<T> sr_left;
    Tensor<T> sr_right;
    AttentionMaps<T> maps;
};

template <typename T>
void visit_params(UpsamplerParams<T>& p, const std::string& prefix, const ParamVisitor<T>& fn);
template <typename T>
void visit_params(CCSBESRParams<T>& p, const std::string& prefix, const ParamVisitor<T>& fn);

// Xavier weights drawn deterministically from config.seed. Biases start
// at zero except the attention gates (channel MLP 1, spatial conv 2), so
// every gate opens near sigmoid(2) and depth does not mute the signal.
template <typename T>
CCSBESRParams<T> init_model(const ModelConfig& config);

// Four CCSBs, conv + pixel-shuffle per x2 stage, 3x3 conv to RGB.
// Clamping to [0,1] is the caller's choice: on for inference, off while
// the result feeds a loss.
template <typename T>
Tensor<T> upsampler(const Tensor<T>& f, const UpsamplerParams<T>& p, int64_t scale, bool clamp_output);

template <typename T>
ModelOutput<T> forward(const CCSBESRParams<T>& params, const ModelConfig& config,
                       const Tensor<T>& lr_left, const Tensor<T>& lr_right, bool clamp_output);

// Little-endian container: magic, format version, config text, tensor
// manifest (name, shape, element type, offsets), raw payloads.
template <typename T>
void save_checkpoint(const CCSBESRParams<T>& params, const ModelConfig& config, const std::string& path);

// Same container with a caller-supplied config block (the trainer embeds
// its full run configuration; the model keys must be present).
template <typename T>
void save_checkpoint_raw(const CCSBESRParams<T>& params, const std::string& config_text,
                         const std::string& path);

template <typename T>
struct LoadedCheckpoint {
    CCSBESRParams<T> params;
    ModelConfig config;
    std::string config_text;  // verbatim embedded block
};

template <typename T>
LoadedCheckpoint<T> load_checkpoint(const std::string& path);

}  // namespace ccsbesr

#endif
