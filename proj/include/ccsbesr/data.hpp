// Copyright 2026 ccsbesr contributors
// SPDX-License-Identifier: Apache-2.0

#ifndef CCSBESR_DATA_HPP
#define CCSBESR_DATA_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "ccsbesr/rng.hpp"
#include "ccsbesr/tensor.hpp"

namespace ccsbesr {

// One rectified stereo pair at both resolutions. All images are
// 3 x H x W in [0, 1]; LR extents are exactly the HR extents / scale.
template <typename T>
struct StereoSample {
    Tensor<T> hr_left;
    Tensor<T> hr_right;
    Tensor<T> lr_left;
    Tensor<T> lr_right;
    std::string id;
    int64_t scale = 1;
};

struct ManifestEntry {
    std::string id;
    std::string left_path;
    std::string right_path;
};

// Listing of a dataset split. Entries are sorted by id; every referenced
// file existed when the manifest was loaded.
struct DatasetManifest {
    std::string root;
    std::string split;
    std::vector<ManifestEntry> entries;

    int64_t size() const { return static_cast<int64_t>(entries.size()); }
};

// Separable Catmull-Rom (a = -0.5) resampling of a C x H x W image with
// half-pixel centre mapping and clamped edges. Both the HR -> LR
// degradation and the bicubic baseline upscaler go through here.
// Throws invalid_argument on input extents < 4 or target extents < 1.
template <typename T>
Tensor<T> bicubic_resample(const Tensor<T>& img, int64_t out_h, int64_t out_w);

// Loads `<root>/<split>.tsv`, else `<root>/manifest.tsv` (lines of
// id<TAB>left-path<TAB>right-path, paths relative to root), else scans
// `<root>/left/*.png` pairing each file with `<root>/right/<name>`.
// Throws runtime_error naming the offending file or id on a missing
// pair, a missing referenced file, or a duplicate id.
DatasetManifest load_manifest(const std::string& root, const std::string& split);

// Decodes the pair at `index` and derives the LR views on the fly.
// Throws on undecodable files, mismatched extents, or extents not
// divisible by scale, always naming the file.
template <typename T>
StereoSample<T> load_sample(const DatasetManifest& manifest, int64_t index, int64_t scale);

// Cuts aligned patches on a stride grid. patch_h/patch_w/stride are HR
// extents; patches must be divisible by scale and at least 8 x scale so
// the LR patch stays at or above 8. Left and right views share crop
// coordinates exactly. A non-null rng draws one global grid offset
// (snapped to the LR pixel grid) without changing the patch count;
// a null rng anchors the grid at the origin.
template <typename T>
std::vector<StereoSample<T>> extract_patches(const StereoSample<T>& sample, int64_t patch_h, int64_t patch_w,
                                             int64_t stride, Rng* rng);

// With probability 1/2 flips all four images vertically; independently
// with probability 1/2 flips horizontally, which also swaps the left and
// right views to keep the disparity sign valid.
template <typename T>
StereoSample<T> augment(const StereoSample<T>& sample, Rng& rng);

// Renders a seeded multi-octave smooth texture as the right HR view and
// shifts it right by disparity_px (edge-clamped) to form the left view,
// so right(x) = left(x + d) holds exactly away from the left border.
// LR views follow by bicubic downsampling. The id records the disparity.
template <typename T>
StereoSample<T> synthetic_stereo(uint64_t seed, int64_t h, int64_t w, int64_t disparity_px, int64_t scale);

extern template Tensor<float> bicubic_resample<float>(const Tensor<float>&, int64_t, int64_t);
extern template Tensor<double> bicubic_resample<double>(const Tensor<double>&, int64_t, int64_t);
extern template StereoSample<float> load_sample<float>(const DatasetManifest&, int64_t, int64_t);
extern template StereoSample<double> load_sample<double>(const DatasetManifest&, int64_t, int64_t);
extern template std::vector<StereoSample<float>> extract_patches<float>(const StereoSample<float>&, int64_t, int64_t,
                                                                        int64_t, Rng*);
extern template std::vector<StereoSample<double>> extract_patches<double>(const StereoSample<double>&, int64_t,
                                                                          int64_t, int64_t, Rng*);
extern template StereoSample<float> augment<float>(const StereoSample<float>&, Rng&);
extern template StereoSample<double> augment<double>(const StereoSample<double>&, Rng&);
extern template StereoSample<float> synthetic_stereo<float>(uint64_t, int64_t, int64_t, int64_t, int64_t);
extern template StereoSample<double> synthetic_stereo<double>(uint64_t, int64_t, int64_t, int64_t, int64_t);

}  // namespace ccsbesr

#endif
