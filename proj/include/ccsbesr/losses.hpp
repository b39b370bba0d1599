// Copyright 2026 ccsbesr contributors
// SPDX-License-Identifier: Apache-2.0

#ifndef CCSBESR_LOSSES_HPP
#define CCSBESR_LOSSES_HPP

#include "ccsbesr/model.hpp"

namespace ccsbesr {

struct LossWeights {
    double sr = 1.0;
    double photometric = 1.0;
    double smooth = 1.0;
    double cycle = 1.0;
    double stereo = 1.0;
};

// Weighted scalar contributions. l_pam = l_photometric + l_smooth +
// l_cycle and total = l_sr + l_pam + l_stereo hold by construction.
struct LossBreakdown {
    double l_sr = 0.0;
    double l_photometric = 0.0;
    double l_smooth = 0.0;
    double l_cycle = 0.0;
    double l_pam = 0.0;
    double l_stereo = 0.0;
    double total = 0.0;
};

// Mean squared error pooled over both views, all pixels and channels.
template <typename T>
Tensor<T> sr_loss(const Tensor<T>& sr_l, const Tensor<T>& sr_r, const Tensor<T>& hr_l, const Tensor<T>& hr_r);

template <typename T>
struct PamLossTerms {
    Tensor<T> photometric;
    Tensor<T> smooth;
    Tensor<T> cycle;
    bool left_mask_empty = false;
    bool right_mask_empty = false;
};

// photometric: masked mean absolute error between each LR view and the
// other view warped into it. smooth: mean absolute attention difference
// across adjacent rows and along adjacent target positions (the (i+1,
// j+1) diagonal, which is zero for any row-constant map such as the
// per-row identity). cycle: masked mean absolute deviation of the cycle
// maps from the per-row identity. An all-invalid mask zeroes the masked
// terms and emits a diagnostics warning on stderr.
template <typename T>
PamLossTerms<T> pam_loss(const AttentionMaps<T>& maps, const Tensor<T>& lr_l, const Tensor<T>& lr_r);

// Attention maps are replicated nearest-neighbour along all three
// positional axes to SR scale, renormalized to row-stochastic, and the
// masked warp comparison is repeated on the SR pair.
template <typename T>
Tensor<T> stereo_consistency_loss(const Tensor<T>& sr_l, const Tensor<T>& sr_r, const AttentionMaps<T>& maps);

template <typename T>
struct LossResult {
    Tensor<T> total;  // scalar on the tape, feeds backward()
    LossBreakdown breakdown;
    bool left_mask_empty = false;
    bool right_mask_empty = false;
};

template <typename T>
LossResult<T> total_loss(const ModelOutput<T>& out, const Tensor<T>& hr_l, const Tensor<T>& hr_r,
                         const Tensor<T>& lr_l, const Tensor<T>& lr_r, const LossWeights& weights);

// B x H x W x W constant holding the identity matrix in every slice.
template <typename T>
Tensor<T> identity_attention(int64_t b, int64_t h, int64_t w);

}  // namespace ccsbesr

#endif
