// Copyright 2026 ccsbesr contributors
// SPDX-License-Identifier: Apache-2.0

#include "ccsbesr/trainer.hpp"

#include <omp.h>

#include <algorithm>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <stdexcept>

#include "ccsbesr/adam.hpp"
#include "ccsbesr/losses.hpp"
#include "ccsbesr/metrics.hpp"
#include "ccsbesr/rng.hpp"

namespace fs = std::filesystem;

namespace ccsbesr {

namespace {

// Shortest round-trip decimal form; identical doubles give identical
// rows, which the determinism contract leans on.
std::string fmt(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

template <typename T>
void stack_into(Tensor<T>& dst, const Tensor<T>& src, int64_t index) {
    const int64_t n = src.numel();
    std::copy(src.data(), src.data() + n, dst.data() + index * n);
}

template <typename T>
struct Batch {
    Tensor<T> lr_l, lr_r, hr_l, hr_r;
};

template <typename T>
Batch<T> assemble(const std::vector<StereoSample<T>>& pool, const std::vector<int64_t>& ids, bool do_augment,
                  Rng& aug_rng) {
    const int64_t B = static_cast<int64_t>(ids.size());
    const auto& first = pool[static_cast<size_t>(ids[0])];
    const int64_t h = first.lr_left.dim(1), w = first.lr_left.dim(2);
    const int64_t s = first.scale;
    Batch<T> b{Tensor<T>({B, 3, h, w}), Tensor<T>({B, 3, h, w}), Tensor<T>({B, 3, h * s, w * s}),
               Tensor<T>({B, 3, h * s, w * s})};
    for (int64_t i = 0; i < B; ++i) {
        const StereoSample<T>& p = pool[static_cast<size_t>(ids[i])];
        if (p.lr_left.dim(1) != h || p.lr_left.dim(2) != w)
            throw std::runtime_error("train: mixed patch extents in one batch");
        StereoSample<T> q = do_augment ? augment(p, aug_rng) : p;
        stack_into(b.lr_l, q.lr_left, i);
        stack_into(b.lr_r, q.lr_right, i);
        stack_into(b.hr_l, q.hr_left, i);
        stack_into(b.hr_r, q.hr_right, i);
    }
    return b;
}

std::string checkpoint_name(int64_t epoch) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "epoch_%04lld.ckpt", static_cast<long long>(epoch));
    return buf;
}

}  // namespace

template <typename T>
std::vector<StereoSample<T>> build_dataset(const RunConfig& config, const std::string& split) {
    std::vector<StereoSample<T>> samples;
    if (config.synthetic) {
        const int64_t maxd = config.synthetic_max_disparity;
        for (int64_t i = 0; i < config.synthetic_count; ++i) {
            int64_t d = maxd >= 1 ? maxd - (i % maxd) : 0;
            // Whole-pixel shifts at the input resolution: integer column
            // attention cannot represent a sub-pixel disparity.
            d -= d % config.model.scale;
            samples.push_back(synthetic_stereo<T>(Rng::derive(config.model.seed, 9000 + static_cast<uint64_t>(i)),
                                                  config.synthetic_hr_height, config.synthetic_hr_width, d,
                                                  config.model.scale));
        }
        return samples;
    }
    if (config.data_root.empty()) throw std::runtime_error("train: data_root is empty and synthetic mode is off");
    DatasetManifest m = load_manifest(config.data_root, split);
    if (m.size() == 0) throw std::runtime_error("train: dataset '" + split + "' under " + config.data_root + " is empty");
    for (int64_t i = 0; i < m.size(); ++i) samples.push_back(load_sample<T>(m, i, config.model.scale));
    return samples;
}

template <typename T>
std::pair<double, double> validate(const CCSBESRParams<T>& params, const ModelConfig& config,
                                   const std::vector<StereoSample<T>>& samples) {
    NoGradGuard ng;
    double psnr_sum = 0.0, ssim_sum = 0.0;
    for (const auto& s : samples) {
        Tensor<T> ll = s.lr_left, lr = s.lr_right;
        Tensor<T> bl({1, 3, ll.dim(1), ll.dim(2)});
        Tensor<T> br({1, 3, ll.dim(1), ll.dim(2)});
        std::copy(ll.data(), ll.data() + ll.numel(), bl.data());
        std::copy(lr.data(), lr.data() + lr.numel(), br.data());
        ModelOutput<T> out = forward(params, config, bl, br, /*clamp_output=*/true);
        Tensor<T> sl = out.sr_left.detached().reshaped({3, s.hr_left.dim(1), s.hr_left.dim(2)});
        Tensor<T> sr = out.sr_right.detached().reshaped({3, s.hr_right.dim(1), s.hr_right.dim(2)});
        psnr_sum += 0.5 * (psnr(sl, s.hr_left, 1.0) + psnr(sr, s.hr_right, 1.0));
        ssim_sum += 0.5 * (ssim(sl, s.hr_left, 1.0) + ssim(sr, s.hr_right, 1.0));
    }
    const double n = static_cast<double>(samples.size());
    return {psnr_sum / n, ssim_sum / n};
}

template <typename T>
TrainResult train(const RunConfig& config, std::ostream* console) {
    validate_run_config(config);
    if (config.threads > 0) omp_set_num_threads(static_cast<int>(config.threads));

    std::vector<StereoSample<T>> train_samples = build_dataset<T>(config, config.train_split);
    std::vector<StereoSample<T>> val_samples;
    if (config.synthetic) {
        val_samples = train_samples;
    } else {
        DatasetManifest vm = load_manifest(config.data_root, config.val_split);
        if (vm.size() == 0) {
            val_samples = train_samples;  // no held-out split; validate on train
        } else {
            for (int64_t i = 0; i < vm.size(); ++i) val_samples.push_back(load_sample<T>(vm, i, config.model.scale));
        }
    }

    // Patch extents: LR config units scaled to HR, clamped to the frame.
    const int64_t s = config.model.scale;
    int64_t min_h = train_samples[0].lr_left.dim(1), min_w = train_samples[0].lr_left.dim(2);
    for (const auto& smp : train_samples) {
        min_h = std::min(min_h, smp.lr_left.dim(1));
        min_w = std::min(min_w, smp.lr_left.dim(2));
    }
    const int64_t ph = std::min(config.patch_h, min_h) * s;
    const int64_t pw = std::min(config.patch_w, min_w) * s;
    const int64_t stride_h = (config.patch_stride > 0 ? config.patch_stride * s : std::min(ph, pw));
    std::vector<StereoSample<T>> pool;
    for (const auto& smp : train_samples) {
        auto patches = extract_patches(smp, ph, pw, stride_h, nullptr);
        for (auto& p : patches) pool.push_back(std::move(p));
    }

    CCSBESRParams<T> params;
    if (!config.resume.empty()) {
        LoadedCheckpoint<T> loaded = load_checkpoint<T>(config.resume);
        if (!(loaded.config == config.model))
            throw std::runtime_error("train: resume checkpoint " + config.resume +
                                     " has an incompatible model configuration");
        params = loaded.params;
    } else {
        params = init_model<T>(config.model);
    }

    std::vector<Tensor<T>*> leaves;
    visit_params(params, "", ParamVisitor<T>([&](const std::string&, Tensor<T>& t) {
                     t.set_requires_grad(true);
                     leaves.push_back(&t);
                 }));
    AdamState<T> opt = make_adam_state(leaves);
    AdamConfig adam;
    adam.lr = config.lr;
    adam.beta1 = config.beta1;
    adam.beta2 = config.beta2;

    fs::create_directories(config.out_dir);
    const std::string config_text = serialize_run_config(config);
    TrainResult result;
    result.train_log_path = (fs::path(config.out_dir) / "train_log.csv").string();
    result.val_log_path = (fs::path(config.out_dir) / "val_log.csv").string();
    std::ofstream tlog(result.train_log_path, std::ios::binary);
    std::ofstream vlog(result.val_log_path, std::ios::binary);
    if (!tlog || !vlog) throw std::runtime_error("train: cannot open log files under " + config.out_dir);
    auto write_header = [&](std::ofstream& f) {
        size_t pos = 0;
        while (pos < config_text.size()) {
            size_t nl = config_text.find('\n', pos);
            f << "# " << config_text.substr(pos, nl - pos) << "\n";
            pos = nl + 1;
        }
    };
    write_header(tlog);
    write_header(vlog);
    tlog << "step,l_sr,l_photometric,l_smooth,l_cycle,l_stereo,total\n";
    vlog << "epoch,step,psnr,ssim\n";

    const int64_t bs = effective_batch_size(config);
    int64_t step = 0;
    bool done = false;
    result.best_val_psnr = -1.0;

    auto run_validation = [&](int64_t epoch) {
        auto [vp, vs] = validate(params, config.model, val_samples);
        vlog << epoch << "," << step << "," << fmt(vp) << "," << fmt(vs) << "\n";
        vlog.flush();
        if (vp > result.best_val_psnr) {
            result.best_val_psnr = vp;
            result.best_val_ssim = vs;
            result.best_checkpoint = (fs::path(config.out_dir) / "best.ckpt").string();
            save_checkpoint_raw(params, config_text, result.best_checkpoint);
        }
        return std::make_pair(vp, vs);
    };

    for (int64_t epoch = 1; epoch <= config.epochs && !done; ++epoch) {
        Rng order_rng(Rng::derive(config.model.seed, 100 + static_cast<uint64_t>(epoch)));
        Rng aug_rng(Rng::derive(config.model.seed, 500 + static_cast<uint64_t>(epoch)));
        std::vector<int64_t> order(pool.size());
        for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int64_t>(i);
        for (int64_t i = static_cast<int64_t>(order.size()) - 1; i > 0; --i)
            std::swap(order[static_cast<size_t>(i)], order[static_cast<size_t>(order_rng.uniform_int(0, i))]);

        for (size_t base = 0; base < order.size() && !done; base += static_cast<size_t>(bs)) {
            std::vector<int64_t> ids(order.begin() + static_cast<int64_t>(base),
                                     order.begin() + std::min(order.size(), base + static_cast<size_t>(bs)));
            Batch<T> b = assemble(pool, ids, config.augment, aug_rng);
            for (Tensor<T>* p : leaves) p->zero_grad();
            ModelOutput<T> out = forward(params, config.model, b.lr_l, b.lr_r, /*clamp_output=*/false);
            LossResult<T> loss = total_loss(out, b.hr_l, b.hr_r, b.lr_l, b.lr_r, config.weights);
            backward(loss.total);
            std::vector<Tensor<T>> grads;
            grads.reserve(leaves.size());
            for (Tensor<T>* p : leaves) grads.push_back(p->grad());
            adam_step(leaves, grads, opt, adam);
            ++step;
            const LossBreakdown& lb = loss.breakdown;
            tlog << step << "," << fmt(lb.l_sr) << "," << fmt(lb.l_photometric) << "," << fmt(lb.l_smooth) << ","
                 << fmt(lb.l_cycle) << "," << fmt(lb.l_stereo) << "," << fmt(lb.total) << "\n";
            if (step == 1) {
                result.first_l_sr = lb.l_sr;
                result.first_total = lb.total;
            }
            result.final_l_sr = lb.l_sr;
            result.final_total = lb.total;
            if (config.max_steps > 0 && step >= config.max_steps) done = true;
        }
        tlog.flush();
        result.epochs_run = epoch;

        save_checkpoint_raw(params, config_text, (fs::path(config.out_dir) / checkpoint_name(epoch)).string());
        if (epoch % config.val_every == 0 || epoch == config.epochs || done) {
            auto [vp, vs] = run_validation(epoch);
            if (console)
                *console << "epoch " << epoch << " step " << step << " total " << fmt(result.final_total)
                         << " val_psnr " << fmt(vp) << " val_ssim " << fmt(vs) << "\n";
        } else if (console) {
            *console << "epoch " << epoch << " step " << step << " total " << fmt(result.final_total) << "\n";
        }
    }

    result.steps_run = step;
    result.final_checkpoint = (fs::path(config.out_dir) / "final.ckpt").string();
    save_checkpoint_raw(params, config_text, result.final_checkpoint);
    return result;
}

template TrainResult train<float>(const RunConfig&, std::ostream*);
template std::vector<StereoSample<float>> build_dataset<float>(const RunConfig&, const std::string&);
template std::vector<StereoSample<double>> build_dataset<double>(const RunConfig&, const std::string&);
template std::pair<double, double> validate<float>(const CCSBESRParams<float>&, const ModelConfig&,
                                                   const std::vector<StereoSample<float>>&);

}  // namespace ccsbesr
