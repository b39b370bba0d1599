// Copyright 2026 ccsbesr contributors
// SPDX-License-Identifier: Apache-2.0

#include <omp.h>

#include <charconv>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "ccsbesr/config.hpp"
#include "ccsbesr/data.hpp"
#include "ccsbesr/gradcheck.hpp"
#include "ccsbesr/image.hpp"
#include "ccsbesr/metrics.hpp"
#include "ccsbesr/model.hpp"
#include "ccsbesr/trainer.hpp"

namespace fs = std::filesystem;
using namespace ccsbesr;

namespace {

std::string fmt(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

void apply_thread_cap() {
    const char* env = std::getenv("CCSBESR_THREADS");
    if (!env) return;
    char* end = nullptr;
    long n = std::strtol(env, &end, 10);
    if (end == env || *end != '\0' || n < 1)
        throw std::runtime_error("CCSBESR_THREADS must be a positive integer, got '" + std::string(env) + "'");
    if (n < omp_get_max_threads()) omp_set_num_threads(static_cast<int>(n));
}

struct CommonFlags {
    std::string config_path;
    uint64_t seed = 0;
    int64_t scale = 0;
    std::string out;
    bool synthetic = false;
    CLI::Option* seed_opt = nullptr;
    CLI::Option* scale_opt = nullptr;
    CLI::Option* out_opt = nullptr;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
    cmd->add_option("--config", f.config_path, "run configuration file (key = value lines)");
    f.seed_opt = cmd->add_option("--seed", f.seed, "override the configured seed");
    f.scale_opt = cmd->add_option("--scale", f.scale, "override the configured scale")->check(CLI::IsMember({2, 4}));
    f.out_opt = cmd->add_option("--out", f.out, "output directory");
    cmd->add_flag("--synthetic", f.synthetic, "use the seeded synthetic dataset");
}

RunConfig resolve_config(const CommonFlags& f) {
    RunConfig cfg = f.config_path.empty() ? RunConfig{} : load_run_config(f.config_path);
    if (f.seed_opt && f.seed_opt->count() > 0) cfg.model.seed = f.seed;
    if (f.scale_opt && f.scale_opt->count() > 0) cfg.model.scale = f.scale;
    if (f.out_opt && f.out_opt->count() > 0) cfg.out_dir = f.out;
    if (f.synthetic) cfg.synthetic = true;
    validate_run_config(cfg);
    return cfg;
}

int run_train(const CommonFlags& f) {
    RunConfig cfg = resolve_config(f);
    TrainResult r = train<float>(cfg, &std::cout);
    std::cout << "trained " << r.steps_run << " steps over " << r.epochs_run << " epochs; best val psnr "
              << fmt(r.best_val_psnr) << " ssim " << fmt(r.best_val_ssim) << "\n";
    std::cout << "checkpoints: " << r.best_checkpoint << " (best), " << r.final_checkpoint << " (final)\n";
    return 0;
}

int run_eval(const CommonFlags& f, const std::string& ckpt_path) {
    LoadedCheckpoint<float> ck = load_checkpoint<float>(ckpt_path);
    RunConfig cfg = f.config_path.empty() ? RunConfig{} : load_run_config(f.config_path);
    if (f.seed_opt && f.seed_opt->count() > 0) cfg.model.seed = f.seed;
    if (f.synthetic) cfg.synthetic = true;
    if (f.out_opt && f.out_opt->count() > 0) cfg.out_dir = f.out;
    if (f.scale_opt && f.scale_opt->count() > 0 && f.scale != ck.config.scale)
        throw std::runtime_error("scale mismatch: checkpoint is x" + std::to_string(ck.config.scale) +
                                 " but --scale requests x" + std::to_string(f.scale));
    if (!f.config_path.empty() && cfg.model.scale != ck.config.scale)
        throw std::runtime_error("scale mismatch: checkpoint is x" + std::to_string(ck.config.scale) +
                                 " but the config requests x" + std::to_string(cfg.model.scale));
    cfg.model = ck.config;  // the checkpoint defines the model
    std::vector<StereoSample<float>> samples = build_dataset<float>(cfg, cfg.val_split);

    fs::create_directories(cfg.out_dir);
    const std::string report_path = (fs::path(cfg.out_dir) / "eval_report.csv").string();
    std::ofstream report(report_path, std::ios::binary);
    if (!report) throw std::runtime_error("eval: cannot open " + report_path);
    report << "id,psnr,ssim,psnr_bicubic,ssim_bicubic\n";
    double ps = 0, ss = 0, pb = 0, sb = 0;
    NoGradGuard ng;
    for (const auto& s : samples) {
        Tensor<float> bl({1, 3, s.lr_left.dim(1), s.lr_left.dim(2)});
        Tensor<float> br(bl.shape());
        std::copy(s.lr_left.data(), s.lr_left.data() + s.lr_left.numel(), bl.data());
        std::copy(s.lr_right.data(), s.lr_right.data() + s.lr_right.numel(), br.data());
        ModelOutput<float> out = forward(ck.params, ck.config, bl, br, /*clamp_output=*/true);
        const int64_t H = s.hr_left.dim(1), W = s.hr_left.dim(2);
        Tensor<float> sl = out.sr_left.detached().reshaped({3, H, W});
        Tensor<float> sr = out.sr_right.detached().reshaped({3, H, W});
        Tensor<float> ul = bicubic_resample(s.lr_left, H, W);
        Tensor<float> ur = bicubic_resample(s.lr_right, H, W);
        const double p = 0.5 * (psnr(sl, s.hr_left, 1.0) + psnr(sr, s.hr_right, 1.0));
        const double q = 0.5 * (ssim(sl, s.hr_left, 1.0) + ssim(sr, s.hr_right, 1.0));
        const double p0 = 0.5 * (psnr(ul, s.hr_left, 1.0) + psnr(ur, s.hr_right, 1.0));
        const double q0 = 0.5 * (ssim(ul, s.hr_left, 1.0) + ssim(ur, s.hr_right, 1.0));
        report << s.id << "," << fmt(p) << "," << fmt(q) << "," << fmt(p0) << "," << fmt(q0) << "\n";
        ps += p;
        ss += q;
        pb += p0;
        sb += q0;
    }
    const double n = static_cast<double>(samples.size());
    report << "mean," << fmt(ps / n) << "," << fmt(ss / n) << "," << fmt(pb / n) << "," << fmt(sb / n) << "\n";
    std::cout << "eval: " << samples.size() << " pairs at x" << ck.config.scale << " | model psnr " << fmt(ps / n)
              << " ssim " << fmt(ss / n) << " | bicubic psnr " << fmt(pb / n) << " ssim " << fmt(sb / n) << "\n";
    std::cout << "report: " << report_path << "\n";
    return 0;
}

int run_infer(const std::string& ckpt_path, const std::string& left_path, const std::string& right_path,
              const std::string& out_dir) {
    LoadedCheckpoint<float> ck = load_checkpoint<float>(ckpt_path);
    Tensor<float> left = read_png<float>(left_path);
    Tensor<float> right = read_png<float>(right_path);
    if (left.shape() != right.shape())
        throw std::runtime_error("infer: " + left_path + " and " + right_path + " have different extents");
    Tensor<float> bl({1, 3, left.dim(1), left.dim(2)});
    Tensor<float> br(bl.shape());
    std::copy(left.data(), left.data() + left.numel(), bl.data());
    std::copy(right.data(), right.data() + right.numel(), br.data());
    NoGradGuard ng;
    ModelOutput<float> out = forward(ck.params, ck.config, bl, br, /*clamp_output=*/true);
    fs::create_directories(out_dir);
    const int64_t H = out.sr_left.dim(2), W = out.sr_left.dim(3);
    write_png(out.sr_left.detached().reshaped({3, H, W}), (fs::path(out_dir) / "sr_left.png").string());
    write_png(out.sr_right.detached().reshaped({3, H, W}), (fs::path(out_dir) / "sr_right.png").string());
    std::cout << "wrote " << (fs::path(out_dir) / "sr_left.png").string() << " and "
              << (fs::path(out_dir) / "sr_right.png").string() << " (" << H << " x " << W << ")\n";
    return 0;
}

int run_gradcheck(uint64_t seed) {
    std::vector<BlockCheck> report = run_gradcheck_suite(seed);
    bool all_pass = true;
    for (const auto& r : report) {
        std::cout << r.name << ": max rel err " << fmt(r.max_rel_err) << " over " << r.checked << " grads: "
                  << (r.pass ? "PASS" : "FAIL") << "\n";
        all_pass &= r.pass;
    }
    std::cout << (all_pass ? "gradcheck PASS" : "gradcheck FAIL") << "\n";
    return all_pass ? 0 : 1;
}

int run_make_synthetic(uint64_t seed, int64_t count, const std::string& out_dir, int64_t scale, int64_t height,
                       int64_t width, int64_t max_disparity) {
    RunConfig cfg;
    cfg.synthetic = true;
    cfg.model.seed = seed;
    cfg.model.scale = scale;
    cfg.synthetic_count = count;
    cfg.synthetic_hr_height = height;
    cfg.synthetic_hr_width = width;
    cfg.synthetic_max_disparity = max_disparity;
    validate_run_config(cfg);
    std::vector<StereoSample<float>> samples = build_dataset<float>(cfg, "train");
    fs::create_directories(fs::path(out_dir) / "left");
    fs::create_directories(fs::path(out_dir) / "right");
    std::ofstream manifest((fs::path(out_dir) / "manifest.tsv").string(), std::ios::binary);
    if (!manifest) throw std::runtime_error("make-synthetic: cannot write manifest under " + out_dir);
    for (const auto& s : samples) {
        const std::string left_rel = "left/" + s.id + ".png";
        const std::string right_rel = "right/" + s.id + ".png";
        write_png(s.hr_left, (fs::path(out_dir) / left_rel).string());
        write_png(s.hr_right, (fs::path(out_dir) / right_rel).string());
        manifest << s.id << "\t" << left_rel << "\t" << right_rel << "\n";
    }
    std::cout << "wrote " << samples.size() << " pairs under " << out_dir << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"ccsbesr: stereo endoscopic image super-resolution"};
    app.require_subcommand(1);

    CommonFlags train_flags;
    CLI::App* train_cmd = app.add_subcommand("train", "train a model");
    add_common(train_cmd, train_flags);

    CommonFlags eval_flags;
    std::string eval_ckpt;
    CLI::App* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint against a dataset split");
    add_common(eval_cmd, eval_flags);
    eval_cmd->add_option("--checkpoint", eval_ckpt, "checkpoint to evaluate")->required();

    std::string infer_ckpt, infer_left, infer_right, infer_out = ".";
    CLI::App* infer_cmd = app.add_subcommand("infer", "super-resolve one stereo pair");
    infer_cmd->add_option("--checkpoint", infer_ckpt, "checkpoint to run")->required();
    infer_cmd->add_option("left", infer_left, "left LR image (PNG)")->required();
    infer_cmd->add_option("right", infer_right, "right LR image (PNG)")->required();
    infer_cmd->add_option("--out", infer_out, "output directory");

    uint64_t gradcheck_seed = 0;
    CLI::App* gradcheck_cmd = app.add_subcommand("gradcheck", "finite-difference check of every block");
    gradcheck_cmd->add_option("--seed", gradcheck_seed, "seed for inputs and projections");

    uint64_t make_seed = 0;
    int64_t make_count = 2, make_scale = 2, make_height = 64, make_width = 192, make_maxd = 6;
    std::string make_out;
    CLI::App* make_cmd = app.add_subcommand("make-synthetic", "write a synthetic stereo dataset");
    make_cmd->add_option("--seed", make_seed, "generator seed");
    make_cmd->add_option("--count", make_count, "number of pairs");
    make_cmd->add_option("--out", make_out, "dataset directory")->required();
    make_cmd->add_option("--scale", make_scale, "scale the dataset will be used at")->check(CLI::IsMember({2, 4}));
    make_cmd->add_option("--height", make_height, "HR height");
    make_cmd->add_option("--width", make_width, "HR width");
    make_cmd->add_option("--max-disparity", make_maxd, "largest disparity in pixels");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }

    try {
        apply_thread_cap();
        if (train_cmd->parsed()) return run_train(train_flags);
        if (eval_cmd->parsed()) return run_eval(eval_flags, eval_ckpt);
        if (infer_cmd->parsed()) return run_infer(infer_ckpt, infer_left, infer_right, infer_out);
        if (gradcheck_cmd->parsed()) return run_gradcheck(gradcheck_seed);
        if (make_cmd->parsed())
            return run_make_synthetic(make_seed, make_count, make_out, make_scale, make_height, make_width, make_maxd);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    std::cerr << "error: no command given\n";
    return 1;
}
