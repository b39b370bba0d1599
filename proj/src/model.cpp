// Copyright 2026 ccsbesr contributors
// SPDX-License-Identifier: Apache-2.0

#include "ccsbesr/model.hpp"

#include <charconv>
#include <cstdlib>

#include "ccsbesr/ops.hpp"

namespace ccsbesr {

bool operator==(const ModelConfig& a, const ModelConfig& b) {
    return a.scale == b.scale && a.channels == b.channels && a.reduction == b.reduction && a.tau == b.tau &&
           a.aspp_groups == b.aspp_groups && a.extraction_pairs == b.extraction_pairs &&
           a.upsampler_blocks == b.upsampler_blocks && a.seed == b.seed;
}

void validate_config(const ModelConfig& c) {
    if (c.scale != 2 && c.scale != 4)
        throw std::invalid_argument("config: scale must be 2 or 4, got " + std::to_string(c.scale));
    if (c.channels < 1) throw std::invalid_argument("config: channels must be >= 1");
    if (c.reduction < 1 || c.channels % c.reduction != 0)
        throw std::invalid_argument("config: reduction " + std::to_string(c.reduction) +
                                    " must divide channels " + std::to_string(c.channels));
    if (!(c.tau > 0.0)) throw std::invalid_argument("config: tau must be positive");
    if (c.aspp_groups < 1) throw std::invalid_argument("config: aspp_groups must be >= 1");
    if (c.extraction_pairs < 1) throw std::invalid_argument("config: extraction_pairs must be >= 1");
    if (c.upsampler_blocks < 1) throw std::invalid_argument("config: upsampler_blocks must be >= 1");
}

namespace {

std::string fmt_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

int64_t parse_i64(const std::string& key, const std::string& v) {
    int64_t out = 0;
    auto res = std::from_chars(v.data(), v.data() + v.size(), out);
    if (res.ec != std::errc() || res.ptr != v.data() + v.size())
        throw std::invalid_argument("config: key '" + key + "' has non-integer value '" + v + "'");
    return out;
}

uint64_t parse_u64(const std::string& key, const std::string& v) {
    uint64_t out = 0;
    auto res = std::from_chars(v.data(), v.data() + v.size(), out);
    if (res.ec != std::errc() || res.ptr != v.data() + v.size())
        throw std::invalid_argument("config: key '" + key + "' has non-integer value '" + v + "'");
    return out;
}

double parse_f64(const std::string& key, const std::string& v) {
    char* end = nullptr;
    const double out = std::strtod(v.c_str(), &end);
    if (end != v.c_str() + v.size() || v.empty())
        throw std::invalid_argument("config: key '" + key + "' has non-numeric value '" + v + "'");
    return out;
}

}  // namespace

std::string serialize_model_config(const ModelConfig& c) {
    std::string out;
    out += "scale = " + std::to_string(c.scale) + "\n";
    out += "channels = " + std::to_string(c.channels) + "\n";
    out += "reduction = " + std::to_string(c.reduction) + "\n";
    out += "tau = " + fmt_double(c.tau) + "\n";
    out += "aspp_groups = " + std::to_string(c.aspp_groups) + "\n";
    out += "extraction_pairs = " + std::to_string(c.extraction_pairs) + "\n";
    out += "upsampler_blocks = " + std::to_string(c.upsampler_blocks) + "\n";
    out += "seed = " + std::to_string(c.seed) + "\n";
    return out;
}

ModelConfig parse_model_config(const std::string& text) {
    ModelConfig c;
    size_t pos = 0;
    while (pos <= text.size()) {
        const size_t nl = text.find('\n', pos);
        const std::string line = trim(text.substr(pos, nl == std::string::npos ? std::string::npos : nl - pos));
        pos = nl == std::string::npos ? text.size() + 1 : nl + 1;
        if (line.empty() || line[0] == '#') continue;
        const size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config: line '" + line + "' is not of the form key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string val = trim(line.substr(eq + 1));
        if (key == "scale")
            c.scale = parse_i64(key, val);
        else if (key == "channels")
            c.channels = parse_i64(key, val);
        else if (key == "reduction")
            c.reduction = parse_i64(key, val);
        else if (key == "tau")
            c.tau = parse_f64(key, val);
        else if (key == "aspp_groups")
            c.aspp_groups = parse_i64(key, val);
        else if (key == "extraction_pairs")
            c.extraction_pairs = parse_i64(key, val);
        else if (key == "upsampler_blocks")
            c.upsampler_blocks = parse_i64(key, val);
        else if (key == "seed")
            c.seed = parse_u64(key, val);
        // Unknown keys belong to the run configuration and are skipped.
    }
    validate_config(c);
    return c;
}

template <typename T>
void visit_params(UpsamplerParams<T>& p, const std::string& prefix, const ParamVisitor<T>& fn) {
    for (size_t i = 0; i < p.blocks.size(); ++i)
        visit_params(p.blocks[i], prefix + ".ccsb" + std::to_string(i), fn);
    for (size_t i = 0; i < p.stage_convs.size(); ++i)
        visit_params(p.stage_convs[i], prefix + ".stage" + std::to_string(i), fn);
    visit_params(p.out_conv, prefix + ".out", fn);
}

template <typename T>
void visit_params(CCSBESRParams<T>& p, const std::string& prefix, const ParamVisitor<T>& fn) {
    visit_params(p.extractor, prefix + ".extractor", fn);
    visit_params(p.pam, prefix + ".pam", fn);
    visit_params(p.upsampler, prefix + ".upsampler", fn);
}

template <typename T>
CCSBESRParams<T> init_model(const ModelConfig& config) {
    validate_config(config);
    SeedStream seeds{config.seed};
    CCSBESRParams<T> p;
    p.extractor = make_extractor<T>(config.channels, config.reduction, config.aspp_groups,
                                    config.extraction_pairs, seeds);
    p.pam = make_pam<T>(config.channels, seeds);
    for (int64_t i = 0; i < config.upsampler_blocks; ++i)
        p.upsampler.blocks.push_back(make_ccsb<T>(config.channels, config.reduction, seeds));
    const int64_t stages = config.scale == 4 ? 2 : 1;
    for (int64_t i = 0; i < stages; ++i)
        p.upsampler.stage_convs.push_back(make_conv_layer<T>(4 * config.channels, config.channels, 3, seeds));
    p.upsampler.out_conv = make_conv_layer<T>(3, config.channels, 3, seeds);
    return p;
}

template <typename T>
Tensor<T> upsampler(const Tensor<T>& f, const UpsamplerParams<T>& p, int64_t scale, bool clamp_output) {
    if (scale != 2 && scale != 4)
        throw std::invalid_argument("upsampler: scale must be 2 or 4, got " + std::to_string(scale));
    const size_t stages = scale == 4 ? 2 : 1;
    if (p.stage_convs.size() != stages)
        throw std::invalid_argument("upsampler: parameters carry " + std::to_string(p.stage_convs.size()) +
                                    " shuffle stages but scale " + std::to_string(scale) + " needs " +
                                    std::to_string(stages));
    Tensor<T> cur = f;
    for (const auto& block : p.blocks) cur = ccsb(cur, block);
    for (size_t i = 0; i < stages; ++i) {
        cur = ops::conv2d(cur, p.stage_convs[i].w, p.stage_convs[i].b, 1, 1, 1);
        cur = ops::pixel_shuffle(cur, 2);
    }
    cur = ops::conv2d(cur, p.out_conv.w, p.out_conv.b, 1, 1, 1);
    return clamp_output ? ops::clamp01(cur) : cur;
}

template <typename T>
ModelOutput<T> forward(const CCSBESRParams<T>& params, const ModelConfig& config,
                       const Tensor<T>& lr_left, const Tensor<T>& lr_right, bool clamp_output) {
    validate_config(config);
    if (lr_left.ndim() != 4 || lr_right.ndim() != 4 || lr_left.shape() != lr_right.shape() ||
        lr_left.dim(1) != 3)
        throw std::invalid_argument("forward: expected matching B x 3 x H x W views, got " +
                                    shape_str(lr_left.shape()) + " and " + shape_str(lr_right.shape()));
    if (lr_left.dim(2) < 8 || lr_left.dim(3) < 8)
        throw std::invalid_argument("forward: input extents must be >= 8, got " + shape_str(lr_left.shape()));

    Tensor<T> feat_l = feature_extractor(lr_left, params.extractor);
    Tensor<T> feat_r = feature_extractor(lr_right, params.extractor);
    PamOutput<T> pam_out = pam_forward(feat_l, feat_r, params.pam, static_cast<T>(config.tau));

    ModelOutput<T> out;
    out.sr_left = upsampler(pam_out.f_left, params.upsampler, config.scale, clamp_output);
    out.sr_right = upsampler(pam_out.f_right, params.upsampler, config.scale, clamp_output);
    out.maps = std::move(pam_out.maps);
    return out;
}

#define CCSBESR_MODEL_INSTANTIATE(T)                                                                         \
    template void visit_params<T>(UpsamplerParams<T>&, const std::string&, const ParamVisitor<T>&);          \
    template void visit_params<T>(CCSBESRParams<T>&, const std::string&, const ParamVisitor<T>&);            \
    template CCSBESRParams<T> init_model<T>(const ModelConfig&);                                             \
    template Tensor<T> upsampler<T>(const Tensor<T>&, const UpsamplerParams<T>&, int64_t, bool);             \
    template ModelOutput<T> forward<T>(const CCSBESRParams<T>&, const ModelConfig&, const Tensor<T>&,        \
                                       const Tensor<T>&, bool);

CCSBESR_MODEL_INSTANTIATE(float)
CCSBESR_MODEL_INSTANTIATE(double)

#undef CCSBESR_MODEL_INSTANTIATE

}  // namespace ccsbesr
