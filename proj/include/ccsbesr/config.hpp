// Copyright 2026 ccsbesr contributors
// SPDX-License-Identifier: Apache-2.0

#ifndef CCSBESR_CONFIG_HPP
#define CCSBESR_CONFIG_HPP

#include <string>

#include "ccsbesr/losses.hpp"
#include "ccsbesr/model.hpp"

namespace ccsbesr {

// Full run configuration: the model block plus training, data, and
// output settings. Serialized as flat `key = value` text, embedded
// verbatim into checkpoints and log headers.
struct RunConfig {
    ModelConfig model;

    int64_t epochs = 40;
    int64_t batch_size = 0;  // 0 = 8 at scale 2, 2 at scale 4
    double lr = 3e-4;
    double beta1 = 0.9;      // Adam first-moment decay
    double beta2 = 0.999;    // Adam second-moment decay
    LossWeights weights;

    std::string data_root;
    std::string train_split = "train";
    std::string val_split = "val";
    int64_t patch_h = 32;        // LR-resolution patch extents
    int64_t patch_w = 96;
    int64_t patch_stride = 0;    // LR units; 0 = non-overlapping tiling
    bool augment = true;

    bool synthetic = false;      // generate the dataset instead of loading
    int64_t synthetic_count = 2;
    int64_t synthetic_hr_height = 64;
    int64_t synthetic_hr_width = 192;
    int64_t synthetic_max_disparity = 6;

    int64_t max_steps = 0;       // 0 = no step cap
    int64_t threads = 0;         // 0 = library default
    std::string out_dir = "out";
    std::string resume;          // checkpoint path; empty = fresh start
    int64_t val_every = 1;       // epochs between validation passes
};

int64_t effective_batch_size(const RunConfig& c);

// Throws invalid_argument naming the first violated constraint.
void validate_run_config(const RunConfig& c);

// Canonical text form; one key per line, model keys first.
std::string serialize_run_config(const RunConfig& c);

// Parses every documented key; an unknown key is an error. Blank lines
// and '#' comments are skipped. Validates before returning.
RunConfig parse_run_config(const std::string& text);

// Reads and parses a config file.
RunConfig load_run_config(const std::string& path);

}  // namespace ccsbesr

#endif
