// Copyright 2026 ccsbesr contributors
// SPDX-License-Identifier: Apache-2.0

#ifndef CCSBESR_TRAINER_HPP
#define CCSBESR_TRAINER_HPP

#include <iosfwd>
#include <string>
#include <vector>

#include "ccsbesr/config.hpp"
#include "ccsbesr/data.hpp"
#include "ccsbesr/model.hpp"

namespace ccsbesr {

struct TrainResult {
    int64_t steps_run = 0;
    int64_t epochs_run = 0;
    double first_l_sr = 0.0;   // step-1 value of the SR term
    double final_l_sr = 0.0;   // last-step value
    double first_total = 0.0;
    double final_total = 0.0;
    double best_val_psnr = 0.0;
    double best_val_ssim = 0.0;
    std::string best_checkpoint;   // highest validation PSNR
    std::string final_checkpoint;  // end-of-run weights
    std::string train_log_path;
    std::string val_log_path;
};

// Builds the dataset described by the config (loaded or synthetic),
// trains with seeded shuffling and Adam, logs one CSV row per step and
// one validation row per cadence, and writes per-epoch, best, and final
// checkpoints under out_dir. `console`, when non-null, receives one
// progress line per epoch.
template <typename T>
TrainResult train(const RunConfig& config, std::ostream* console);

// Assembles the dataset the training config describes. Synthetic mode
// renders `synthetic_count` seeded pairs; otherwise the split manifest
// is loaded eagerly. Throws runtime_error when the dataset is empty.
template <typename T>
std::vector<StereoSample<T>> build_dataset(const RunConfig& config, const std::string& split);

// Mean of (left, right) PSNR / SSIM over full-frame forwards, clamped
// output, unit peak.
template <typename T>
std::pair<double, double> validate(const CCSBESRParams<T>& params, const ModelConfig& config,
                                   const std::vector<StereoSample<T>>& samples);

extern template TrainResult train<float>(const RunConfig&, std::ostream*);
extern template std::vector<StereoSample<float>> build_dataset<float>(const RunConfig&, const std::string&);
extern template std::vector<StereoSample<double>> build_dataset<double>(const RunConfig&, const std::string&);
extern template std::pair<double, double> validate<float>(const CCSBESRParams<float>&, const ModelConfig&,
                                                          const std::vector<StereoSample<float>>&);

}  // namespace ccsbesr

#endif
