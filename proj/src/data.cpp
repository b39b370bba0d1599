// Copyright 2026 ccsbesr contributors
// SPDX-License-Identifier: Apache-2.0

#include "ccsbesr/data.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "ccsbesr/image.hpp"
#include "ccsbesr/kernels.hpp"

namespace fs = std::filesystem;

namespace ccsbesr {

template <typename T>
Tensor<T> bicubic_resample(const Tensor<T>& img, int64_t out_h, int64_t out_w) {
    if (img.ndim() != 3) throw std::invalid_argument("bicubic_resample: expected C x H x W, got " + shape_str(img.shape()));
    const int64_t C = img.dim(0), H = img.dim(1), W = img.dim(2);
    if (H < 4 || W < 4)
        throw std::invalid_argument("bicubic_resample: input extents " + std::to_string(H) + " x " +
                                    std::to_string(W) + " are below the 4-tap minimum");
    if (out_h < 1 || out_w < 1)
        throw std::invalid_argument("bicubic_resample: degenerate target extents " + std::to_string(out_h) + " x " +
                                    std::to_string(out_w));
    Tensor<T> out({C, out_h, out_w});
    kernels::bicubic_resample(img.data(), out.data(), C, H, W, out_h, out_w);
    return out;
}

namespace {

std::string resolve(const std::string& root, const std::string& path) {
    fs::path p(path);
    if (p.is_absolute()) return p.string();
    return (fs::path(root) / p).string();
}

DatasetManifest parse_manifest_file(const std::string& root, const std::string& split, const std::string& file) {
    std::ifstream in(file);
    if (!in) throw std::runtime_error("load_manifest: cannot open " + file);
    DatasetManifest m;
    m.root = root;
    m.split = split;
    std::string line;
    int64_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ls(line);
        std::string id, left, right;
        if (!std::getline(ls, id, '\t') || !std::getline(ls, left, '\t') || !std::getline(ls, right, '\t'))
            throw std::runtime_error("load_manifest: " + file + ":" + std::to_string(lineno) +
                                     ": expected id<TAB>left-path<TAB>right-path");
        m.entries.push_back({id, resolve(root, left), resolve(root, right)});
    }
    return m;
}

DatasetManifest scan_directory(const std::string& root, const std::string& split) {
    DatasetManifest m;
    m.root = root;
    m.split = split;
    fs::path left_dir = fs::path(root) / "left";
    fs::path right_dir = fs::path(root) / "right";
    if (!fs::is_directory(left_dir)) return m;  // empty dataset
    for (const auto& entry : fs::directory_iterator(left_dir)) {
        if (!entry.is_regular_file() || entry.path().extension() != ".png") continue;
        std::string id = entry.path().stem().string();
        fs::path right = right_dir / entry.path().filename();
        if (!fs::exists(right))
            throw std::runtime_error("load_manifest: missing right view for pair '" + id + "': " + right.string());
        m.entries.push_back({id, entry.path().string(), right.string()});
    }
    return m;
}

}  // namespace

DatasetManifest load_manifest(const std::string& root, const std::string& split) {
    DatasetManifest m;
    fs::path split_file = fs::path(root) / (split + ".tsv");
    fs::path shared_file = fs::path(root) / "manifest.tsv";
    if (fs::exists(split_file))
        m = parse_manifest_file(root, split, split_file.string());
    else if (fs::exists(shared_file))
        m = parse_manifest_file(root, split, shared_file.string());
    else
        m = scan_directory(root, split);
    std::sort(m.entries.begin(), m.entries.end(),
              [](const ManifestEntry& a, const ManifestEntry& b) { return a.id < b.id; });
    std::set<std::string> seen;
    for (const auto& e : m.entries) {
        if (!seen.insert(e.id).second) throw std::runtime_error("load_manifest: duplicate id '" + e.id + "'");
        if (!fs::exists(e.left_path)) throw std::runtime_error("load_manifest: missing file " + e.left_path);
        if (!fs::exists(e.right_path)) throw std::runtime_error("load_manifest: missing file " + e.right_path);
    }
    return m;
}

template <typename T>
StereoSample<T> load_sample(const DatasetManifest& manifest, int64_t index, int64_t scale) {
    if (index < 0 || index >= manifest.size())
        throw std::out_of_range("load_sample: index " + std::to_string(index) + " outside 0.." +
                                std::to_string(manifest.size() - 1));
    if (scale < 1) throw std::invalid_argument("load_sample: scale must be positive");
    const ManifestEntry& e = manifest.entries[static_cast<size_t>(index)];
    StereoSample<T> s;
    s.id = e.id;
    s.scale = scale;
    s.hr_left = read_png<T>(e.left_path);
    s.hr_right = read_png<T>(e.right_path);
    if (s.hr_left.shape() != s.hr_right.shape())
        throw std::runtime_error("load_sample: extents of " + e.left_path + " and " + e.right_path + " differ: " +
                                 shape_str(s.hr_left.shape()) + " vs " + shape_str(s.hr_right.shape()));
    const int64_t H = s.hr_left.dim(1), W = s.hr_left.dim(2);
    if (H % scale != 0 || W % scale != 0)
        throw std::runtime_error("load_sample: " + e.left_path + ": extents " + std::to_string(H) + " x " +
                                 std::to_string(W) + " are not divisible by scale " + std::to_string(scale));
    s.lr_left = bicubic_resample(s.hr_left, H / scale, W / scale);
    s.lr_right = bicubic_resample(s.hr_right, H / scale, W / scale);
    return s;
}

namespace {

template <typename T>
Tensor<T> crop3(const Tensor<T>& t, int64_t y, int64_t x, int64_t h, int64_t w) {
    const int64_t C = t.dim(0), W = t.dim(2);
    Tensor<T> out({C, h, w});
    const T* p = t.data();
    T* o = out.data();
    for (int64_t c = 0; c < C; ++c)
        for (int64_t i = 0; i < h; ++i)
            for (int64_t j = 0; j < w; ++j) o[(c * h + i) * w + j] = p[(c * t.dim(1) + y + i) * W + x + j];
    return out;
}

template <typename T>
Tensor<T> flip_axis3(const Tensor<T>& t, int axis) {
    const int64_t C = t.dim(0), H = t.dim(1), W = t.dim(2);
    Tensor<T> out({C, H, W});
    const T* p = t.data();
    T* o = out.data();
    for (int64_t c = 0; c < C; ++c)
        for (int64_t i = 0; i < H; ++i)
            for (int64_t j = 0; j < W; ++j) {
                int64_t si = axis == 1 ? H - 1 - i : i;
                int64_t sj = axis == 2 ? W - 1 - j : j;
                o[(c * H + i) * W + j] = p[(c * H + si) * W + sj];
            }
    return out;
}

}  // namespace

template <typename T>
std::vector<StereoSample<T>> extract_patches(const StereoSample<T>& sample, int64_t patch_h, int64_t patch_w,
                                             int64_t stride, Rng* rng) {
    const int64_t s = sample.scale;
    const int64_t H = sample.hr_left.dim(1), W = sample.hr_left.dim(2);
    if (patch_h % s != 0 || patch_w % s != 0)
        throw std::invalid_argument("extract_patches: patch extents must be divisible by scale " + std::to_string(s));
    if (patch_h < 8 * s || patch_w < 8 * s)
        throw std::invalid_argument("extract_patches: LR patch extents must be at least 8, got " +
                                    std::to_string(patch_h / s) + " x " + std::to_string(patch_w / s));
    if (stride < 1) throw std::invalid_argument("extract_patches: stride must be positive");
    if (patch_h > H || patch_w > W)
        throw std::invalid_argument("extract_patches: patch " + std::to_string(patch_h) + " x " +
                                    std::to_string(patch_w) + " exceeds image " + std::to_string(H) + " x " +
                                    std::to_string(W));
    auto count = [&](int64_t extent, int64_t patch) { return (extent - patch) / stride + 1; };
    const int64_t ny = count(H, patch_h), nx = count(W, patch_w);
    // Largest global offset that keeps the grid inside the image, snapped
    // to the LR pixel grid so LR crop coordinates stay integral.
    int64_t off_y = 0, off_x = 0;
    if (rng) {
        int64_t slack_y = (H - patch_h - (ny - 1) * stride) / s;
        int64_t slack_x = (W - patch_w - (nx - 1) * stride) / s;
        off_y = s * rng->uniform_int(0, slack_y);
        off_x = s * rng->uniform_int(0, slack_x);
    }
    std::vector<StereoSample<T>> patches;
    patches.reserve(static_cast<size_t>(ny * nx));
    for (int64_t iy = 0; iy < ny; ++iy)
        for (int64_t ix = 0; ix < nx; ++ix) {
            int64_t y = (off_y + iy * stride) / s * s;
            int64_t x = (off_x + ix * stride) / s * s;
            StereoSample<T> p;
            p.scale = s;
            p.id = sample.id + "_y" + std::to_string(y) + "x" + std::to_string(x);
            p.hr_left = crop3(sample.hr_left, y, x, patch_h, patch_w);
            p.hr_right = crop3(sample.hr_right, y, x, patch_h, patch_w);
            p.lr_left = crop3(sample.lr_left, y / s, x / s, patch_h / s, patch_w / s);
            p.lr_right = crop3(sample.lr_right, y / s, x / s, patch_h / s, patch_w / s);
            patches.push_back(std::move(p));
        }
    return patches;
}

template <typename T>
StereoSample<T> augment(const StereoSample<T>& sample, Rng& rng) {
    StereoSample<T> out = sample;
    if (rng.uniform() < 0.5) {
        out.hr_left = flip_axis3(out.hr_left, 1);
        out.hr_right = flip_axis3(out.hr_right, 1);
        out.lr_left = flip_axis3(out.lr_left, 1);
        out.lr_right = flip_axis3(out.lr_right, 1);
    }
    if (rng.uniform() < 0.5) {
        Tensor<T> hl = flip_axis3(out.hr_right, 2);
        Tensor<T> hr = flip_axis3(out.hr_left, 2);
        Tensor<T> ll = flip_axis3(out.lr_right, 2);
        Tensor<T> lr = flip_axis3(out.lr_left, 2);
        out.hr_left = hl;
        out.hr_right = hr;
        out.lr_left = ll;
        out.lr_right = lr;
    }
    return out;
}

template <typename T>
StereoSample<T> synthetic_stereo(uint64_t seed, int64_t h, int64_t w, int64_t disparity_px, int64_t scale) {
    if (scale < 1) throw std::invalid_argument("synthetic_stereo: scale must be positive");
    if (h % scale != 0 || w % scale != 0)
        throw std::invalid_argument("synthetic_stereo: extents must be divisible by scale");
    if (h < 4 * scale || w < 4 * scale) throw std::invalid_argument("synthetic_stereo: extents too small");
    if (disparity_px < 0 || disparity_px >= w / 4)
        throw std::invalid_argument("synthetic_stereo: disparity " + std::to_string(disparity_px) +
                                    " outside [0, " + std::to_string(w / 4) + ")");
    // Smooth random octaves carry the structure. On top sits a faint
    // checkerboard whose sign pattern lives exactly at the full-resolution
    // Nyquist rate: sampled at the half-pixel centres of the LR grid it
    // cancels to zero by kernel symmetry, so no interpolation of the LR
    // frame can reproduce it, while a sub-pixel upsampler represents it
    // directly in its phase channels. The mix stays inside [0,1] so the
    // clamp below never reshapes it.
    const int64_t divs[] = {16, 8, 4};
    const double weights[] = {0.45, 0.35, 0.25};
    Tensor<T> base({3, h, w});
    for (int o = 0; o < 3; ++o) {
        int64_t oh = std::max<int64_t>(4, h / divs[o]);
        int64_t ow = std::max<int64_t>(4, w / divs[o]);
        Rng rng(Rng::derive(seed, static_cast<uint64_t>(o)));
        Tensor<T> noise({3, oh, ow});
        for (int64_t i = 0; i < noise.numel(); ++i) noise.at(i) = static_cast<T>(rng.uniform());
        Tensor<T> up = bicubic_resample(noise, h, w);
        for (int64_t i = 0; i < base.numel(); ++i) base.at(i) += static_cast<T>(weights[o]) * up.at(i);
    }
    Rng amp_rng(Rng::derive(seed, 3));
    Tensor<T> right({3, h, w});
    for (int64_t c = 0; c < 3; ++c) {
        double amp = 0.10 + 0.04 * amp_rng.uniform();
        for (int64_t y = 0; y < h; ++y)
            for (int64_t x = 0; x < w; ++x) {
                int64_t i = (c * h + y) * w + x;
                double check = ((x + y) % 2 == 0) ? amp : -amp;
                right.at(i) = static_cast<T>(0.5 + 0.45 * (static_cast<double>(base.at(i)) - 0.525) + check);
            }
    }
    for (int64_t i = 0; i < right.numel(); ++i) {
        if (right.at(i) < T(0)) right.at(i) = T(0);
        if (right.at(i) > T(1)) right.at(i) = T(1);
    }
    Tensor<T> left({3, h, w});
    for (int64_t c = 0; c < 3; ++c)
        for (int64_t y = 0; y < h; ++y)
            for (int64_t x = 0; x < w; ++x) {
                int64_t src = std::max<int64_t>(0, x - disparity_px);
                left.at((c * h + y) * w + x) = right.at((c * h + y) * w + src);
            }
    StereoSample<T> s;
    s.id = "synth-s" + std::to_string(seed) + "-d" + std::to_string(disparity_px);
    s.scale = scale;
    s.hr_left = left;
    s.hr_right = right;
    s.lr_left = bicubic_resample(left, h / scale, w / scale);
    s.lr_right = bicubic_resample(right, h / scale, w / scale);
    return s;
}

template Tensor<float> bicubic_resample<float>(const Tensor<float>&, int64_t, int64_t);
template Tensor<double> bicubic_resample<double>(const Tensor<double>&, int64_t, int64_t);
template StereoSample<float> load_sample<float>(const DatasetManifest&, int64_t, int64_t);
template StereoSample<double> load_sample<double>(const DatasetManifest&, int64_t, int64_t);
template std::vector<StereoSample<float>> extract_patches<float>(const StereoSample<float>&, int64_t, int64_t, int64_t,
                                                                 Rng*);
template std::vector<StereoSample<double>> extract_patches<double>(const StereoSample<double>&, int64_t, int64_t,
                                                                   int64_t, Rng*);
template StereoSample<float> augment<float>(const StereoSample<float>&, Rng&);
template StereoSample<double> augment<double>(const StereoSample<double>&, Rng&);
template StereoSample<float> synthetic_stereo<float>(uint64_t, int64_t, int64_t, int64_t, int64_t);
template StereoSample<double> synthetic_stereo<double>(uint64_t, int64_t, int64_t, int64_t, int64_t);

}  // namespace ccsbesr
