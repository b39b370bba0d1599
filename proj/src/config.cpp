// Copyright 2026 ccsbesr contributors
// SPDX-License-Identifier: Apache-2.0

#include "ccsbesr/config.hpp"

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace ccsbesr {

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
    double out = std::strtod(v.c_str(), &end);
    if (end != v.c_str() + v.size() || v.empty())
        throw std::invalid_argument("config: key '" + key + "' has non-numeric value '" + v + "'");
    return out;
}

bool parse_bool(const std::string& key, const std::string& v) {
    if (v == "1" || v == "true") return true;
    if (v == "0" || v == "false") return false;
    throw std::invalid_argument("config: key '" + key + "' has non-boolean value '" + v + "'");
}

}  // namespace

int64_t effective_batch_size(const RunConfig& c) {
    if (c.batch_size > 0) return c.batch_size;
    return c.model.scale == 4 ? 2 : 8;
}

void validate_run_config(const RunConfig& c) {
    validate_config(c.model);
    if (c.epochs < 1) throw std::invalid_argument("config: epochs must be at least 1");
    if (c.batch_size < 0) throw std::invalid_argument("config: batch_size must be non-negative");
    if (!(c.lr > 0.0)) throw std::invalid_argument("config: lr must be positive");
    if (!(c.beta1 >= 0.0 && c.beta1 < 1.0)) throw std::invalid_argument("config: beta1 must be in [0, 1)");
    if (!(c.beta2 >= 0.0 && c.beta2 < 1.0)) throw std::invalid_argument("config: beta2 must be in [0, 1)");
    if (c.weights.sr < 0.0 || c.weights.photometric < 0.0 || c.weights.smooth < 0.0 || c.weights.cycle < 0.0 ||
        c.weights.stereo < 0.0)
        throw std::invalid_argument("config: loss weights must be non-negative");
    if (c.patch_h < 8 || c.patch_w < 8) throw std::invalid_argument("config: LR patch extents must be at least 8");
    if (c.patch_stride < 0) throw std::invalid_argument("config: patch_stride must be non-negative");
    if (c.synthetic_count < 1) throw std::invalid_argument("config: synthetic_count must be at least 1");
    if (c.synthetic_hr_height < 8 * c.model.scale || c.synthetic_hr_width < 8 * c.model.scale)
        throw std::invalid_argument("config: synthetic HR extents must be at least 8 x scale");
    if (c.synthetic_max_disparity < 0) throw std::invalid_argument("config: synthetic_max_disparity must be non-negative");
    if (c.synthetic_max_disparity >= c.synthetic_hr_width / 4)
        throw std::invalid_argument("config: synthetic_max_disparity must be below a quarter of the HR width");
    if (c.max_steps < 0) throw std::invalid_argument("config: max_steps must be non-negative");
    if (c.threads < 0) throw std::invalid_argument("config: threads must be non-negative");
    if (c.val_every < 1) throw std::invalid_argument("config: val_every must be at least 1");
    if (c.out_dir.empty()) throw std::invalid_argument("config: out_dir must not be empty");
}

std::string serialize_run_config(const RunConfig& c) {
    std::string out = serialize_model_config(c.model);
    out += "epochs = " + std::to_string(c.epochs) + "\n";
    out += "batch_size = " + std::to_string(c.batch_size) + "\n";
    out += "lr = " + fmt_double(c.lr) + "\n";
    out += "beta1 = " + fmt_double(c.beta1) + "\n";
    out += "beta2 = " + fmt_double(c.beta2) + "\n";
    out += "w_sr = " + fmt_double(c.weights.sr) + "\n";
    out += "w_photometric = " + fmt_double(c.weights.photometric) + "\n";
    out += "w_smooth = " + fmt_double(c.weights.smooth) + "\n";
    out += "w_cycle = " + fmt_double(c.weights.cycle) + "\n";
    out += "w_stereo = " + fmt_double(c.weights.stereo) + "\n";
    out += "data_root = " + c.data_root + "\n";
    out += "train_split = " + c.train_split + "\n";
    out += "val_split = " + c.val_split + "\n";
    out += "patch_h = " + std::to_string(c.patch_h) + "\n";
    out += "patch_w = " + std::to_string(c.patch_w) + "\n";
    out += "patch_stride = " + std::to_string(c.patch_stride) + "\n";
    out += "augment = " + std::string(c.augment ? "1" : "0") + "\n";
    out += "synthetic = " + std::string(c.synthetic ? "1" : "0") + "\n";
    out += "synthetic_count = " + std::to_string(c.synthetic_count) + "\n";
    out += "synthetic_hr_height = " + std::to_string(c.synthetic_hr_height) + "\n";
    out += "synthetic_hr_width = " + std::to_string(c.synthetic_hr_width) + "\n";
    out += "synthetic_max_disparity = " + std::to_string(c.synthetic_max_disparity) + "\n";
    out += "max_steps = " + std::to_string(c.max_steps) + "\n";
    out += "threads = " + std::to_string(c.threads) + "\n";
    out += "out_dir = " + c.out_dir + "\n";
    out += "resume = " + c.resume + "\n";
    out += "val_every = " + std::to_string(c.val_every) + "\n";
    return out;
}

RunConfig parse_run_config(const std::string& text) {
    RunConfig c;
    std::istringstream in(text);
    std::string raw;
    while (std::getline(in, raw)) {
        const std::string line = trim(raw);
        if (line.empty() || line[0] == '#') continue;
        const size_t eq = line.find('=');
        if (eq == std::string::npos) throw std::invalid_argument("config: malformed line '" + line + "'");
        const std::string key = trim(line.substr(0, eq));
        const std::string val = trim(line.substr(eq + 1));
        if (key == "scale") c.model.scale = parse_i64(key, val);
        else if (key == "channels") c.model.channels = parse_i64(key, val);
        else if (key == "reduction") c.model.reduction = parse_i64(key, val);
        else if (key == "tau") c.model.tau = parse_f64(key, val);
        else if (key == "aspp_groups") c.model.aspp_groups = parse_i64(key, val);
        else if (key == "extraction_pairs") c.model.extraction_pairs = parse_i64(key, val);
        else if (key == "upsampler_blocks") c.model.upsampler_blocks = parse_i64(key, val);
        else if (key == "seed") c.model.seed = parse_u64(key, val);
        else if (key == "epochs") c.epochs = parse_i64(key, val);
        else if (key == "batch_size") c.batch_size = parse_i64(key, val);
        else if (key == "lr") c.lr = parse_f64(key, val);
        else if (key == "beta1") c.beta1 = parse_f64(key, val);
        else if (key == "beta2") c.beta2 = parse_f64(key, val);
        else if (key == "w_sr") c.weights.sr = parse_f64(key, val);
        else if (key == "w_photometric") c.weights.photometric = parse_f64(key, val);
        else if (key == "w_smooth") c.weights.smooth = parse_f64(key, val);
        else if (key == "w_cycle") c.weights.cycle = parse_f64(key, val);
        else if (key == "w_stereo") c.weights.stereo = parse_f64(key, val);
        else if (key == "data_root") c.data_root = val;
        else if (key == "train_split") c.train_split = val;
        else if (key == "val_split") c.val_split = val;
        else if (key == "patch_h") c.patch_h = parse_i64(key, val);
        else if (key == "patch_w") c.patch_w = parse_i64(key, val);
        else if (key == "patch_stride") c.patch_stride = parse_i64(key, val);
        else if (key == "augment") c.augment = parse_bool(key, val);
        else if (key == "synthetic") c.synthetic = parse_bool(key, val);
        else if (key == "synthetic_count") c.synthetic_count = parse_i64(key, val);
        else if (key == "synthetic_hr_height") c.synthetic_hr_height = parse_i64(key, val);
        else if (key == "synthetic_hr_width") c.synthetic_hr_width = parse_i64(key, val);
        else if (key == "synthetic_max_disparity") c.synthetic_max_disparity = parse_i64(key, val);
        else if (key == "max_steps") c.max_steps = parse_i64(key, val);
        else if (key == "threads") c.threads = parse_i64(key, val);
        else if (key == "out_dir") c.out_dir = val;
        else if (key == "resume") c.resume = val;
        else if (key == "val_every") c.val_every = parse_i64(key, val);
        else throw std::invalid_argument("config: unknown key '" + key + "'");
    }
    validate_run_config(c);
    return c;
}

RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("config: cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_run_config(buf.str());
}

}  // namespace ccsbesr
