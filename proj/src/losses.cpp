// Copyright 2026 ccsbesr contributors
// SPDX-License-Identifier: Apache-2.0

#include "ccsbesr/losses.hpp"

#include <cstdio>

#include "ccsbesr/ops.hpp"

namespace ccsbesr {

namespace {

// Mean of |x| over the entries where the broadcast mask is 1. Returns a
// detached zero when the mask selects nothing, flagging `empty`.
template <typename T>
Tensor<T> masked_mean_abs(const Tensor<T>& diff, const Tensor<T>& mask, int64_t per_entry, bool* empty) {
    double count = 0.0;
    const T* mp = mask.data();
    for (int64_t i = 0; i < mask.numel(); ++i) count += static_cast<double>(mp[i]);
    if (count == 0.0) {
        *empty = true;
        return Tensor<T>::scalar(T(0));
    }
    Tensor<T> masked = ops::mul(ops::abs(diff), mask);
    return ops::scale(ops::sum_all(masked), static_cast<T>(1.0 / (count * static_cast<double>(per_entry))));
}

void warn_empty_mask(const char* which) {
    std::fprintf(stderr, "warning: %s valid mask selects no pixels; masked loss terms contribute 0\n", which);
}

}  // namespace

template <typename T>
Tensor<T> identity_attention(int64_t b, int64_t h, int64_t w) {
    Tensor<T> t(Shape{b, h, w, w});
    T* p = t.data();
    for (int64_t s = 0; s < b * h; ++s)
        for (int64_t i = 0; i < w; ++i) p[(s * w + i) * w + i] = T(1);
    return t;
}

template <typename T>
Tensor<T> sr_loss(const Tensor<T>& sr_l, const Tensor<T>& sr_r, const Tensor<T>& hr_l, const Tensor<T>& hr_r) {
    if (sr_l.shape() != hr_l.shape() || sr_r.shape() != hr_r.shape() || sr_l.shape() != sr_r.shape())
        throw std::invalid_argument("sr_loss: view shapes disagree: " + shape_str(sr_l.shape()) + " vs " +
                                    shape_str(hr_l.shape()) + ", " + shape_str(sr_r.shape()) + " vs " +
                                    shape_str(hr_r.shape()));
    Tensor<T> dl = ops::sub(sr_l, hr_l);
    Tensor<T> dr = ops::sub(sr_r, hr_r);
    Tensor<T> sq = ops::add(ops::sum_all(ops::mul(dl, dl)), ops::sum_all(ops::mul(dr, dr)));
    return ops::scale(sq, T(1) / static_cast<T>(2 * sr_l.numel()));
}

template <typename T>
PamLossTerms<T> pam_loss(const AttentionMaps<T>& maps, const Tensor<T>& lr_l, const Tensor<T>& lr_r) {
    if (lr_l.shape() != lr_r.shape() || lr_l.ndim() != 4)
        throw std::invalid_argument("pam_loss: LR views must share a B x C x H x W shape, got " +
                                    shape_str(lr_l.shape()) + " and " + shape_str(lr_r.shape()));
    if (maps.m_r2l.dim(0) != lr_l.dim(0) || maps.m_r2l.dim(1) != lr_l.dim(2) ||
        maps.m_r2l.dim(2) != lr_l.dim(3))
        throw std::invalid_argument("pam_loss: attention maps " + shape_str(maps.m_r2l.shape()) +
                                    " do not match LR extents " + shape_str(lr_l.shape()));

    const int64_t B = lr_l.dim(0), C = lr_l.dim(1), H = lr_l.dim(2), W = lr_l.dim(3);
    PamLossTerms<T> out;

    Tensor<T> photo_l = masked_mean_abs(ops::sub(ops::warp(maps.m_r2l, lr_r), lr_l), maps.v_left, C,
                                        &out.left_mask_empty);
    Tensor<T> photo_r = masked_mean_abs(ops::sub(ops::warp(maps.m_l2r, lr_l), lr_r), maps.v_right, C,
                                        &out.right_mask_empty);
    out.photometric = ops::add(photo_l, photo_r);

    // One pooled mean over every adjacent-row and adjacent-diagonal
    // difference of both directional maps.
    Tensor<T> smooth_sum = Tensor<T>::scalar(T(0));
    int64_t smooth_count = 0;
    for (const Tensor<T>* m : {&maps.m_r2l, &maps.m_l2r}) {
        if (H >= 2) {
            smooth_sum = ops::add(smooth_sum, ops::sum_all(ops::abs(ops::diff_axis(*m, 1))));
            smooth_count += B * (H - 1) * W * W;
        }
        if (W >= 2) {
            smooth_sum = ops::add(smooth_sum, ops::sum_all(ops::abs(ops::diag_diff(*m))));
            smooth_count += B * H * (W - 1) * (W - 1);
        }
    }
    out.smooth = smooth_count > 0 ? ops::scale(smooth_sum, T(1) / static_cast<T>(smooth_count))
                                  : Tensor<T>::scalar(T(0));

    // One pooled mean across both cycle maps: rows are weighted by their
    // view's validity, the denominator counts every masked entry once.
    Tensor<T> eye = identity_attention<T>(B, H, W);
    Tensor<T> row_mask_l = maps.v_left.reshaped({B, H, W, 1});
    Tensor<T> row_mask_r = maps.v_right.reshaped({B, H, W, 1});
    double rows_l = 0.0, rows_r = 0.0;
    for (int64_t i = 0; i < maps.v_left.numel(); ++i) rows_l += static_cast<double>(maps.v_left.at(i));
    for (int64_t i = 0; i < maps.v_right.numel(); ++i) rows_r += static_cast<double>(maps.v_right.at(i));
    if (rows_l + rows_r == 0.0) {
        out.cycle = Tensor<T>::scalar(T(0));
        out.left_mask_empty = true;
        out.right_mask_empty = true;
    } else {
        Tensor<T> sum_l = ops::sum_all(ops::mul(ops::abs(ops::sub(maps.cycle_l, eye)), row_mask_l));
        Tensor<T> sum_r = ops::sum_all(ops::mul(ops::abs(ops::sub(maps.cycle_r, eye)), row_mask_r));
        out.cycle = ops::scale(ops::add(sum_l, sum_r),
                               static_cast<T>(1.0 / ((rows_l + rows_r) * static_cast<double>(W))));
    }

    if (out.left_mask_empty) warn_empty_mask("left");
    if (out.right_mask_empty) warn_empty_mask("right");
    return out;
}

template <typename T>
Tensor<T> stereo_consistency_loss(const Tensor<T>& sr_l, const Tensor<T>& sr_r, const AttentionMaps<T>& maps) {
    if (sr_l.shape() != sr_r.shape() || sr_l.ndim() != 4)
        throw std::invalid_argument("stereo_consistency_loss: SR views must share a B x C x H x W shape, got " +
                                    shape_str(sr_l.shape()) + " and " + shape_str(sr_r.shape()));
    const int64_t B = sr_l.dim(0), C = sr_l.dim(1), Hs = sr_l.dim(2), Ws = sr_l.dim(3);
    const int64_t H = maps.m_r2l.dim(1), W = maps.m_r2l.dim(2);
    if (maps.m_r2l.dim(0) != B || Hs % H != 0 || Ws % W != 0 || Hs / H != Ws / W)
        throw std::invalid_argument("stereo_consistency_loss: SR shape " + shape_str(sr_l.shape()) +
                                    " is not an integer upscale of map shape " + shape_str(maps.m_r2l.shape()));
    const int64_t s = Hs / H;

    Tensor<T> up_r2l = ops::normalize_last_axis(ops::nearest_upsample_attention(maps.m_r2l, s));
    Tensor<T> up_l2r = ops::normalize_last_axis(ops::nearest_upsample_attention(maps.m_l2r, s));
    Tensor<T> up_v_l = ops::nearest_upsample_plane(maps.v_left, s);
    Tensor<T> up_v_r = ops::nearest_upsample_plane(maps.v_right, s);

    bool empty_l = false, empty_r = false;
    Tensor<T> term_l = masked_mean_abs(ops::sub(ops::warp(up_r2l, sr_r), sr_l), up_v_l, C, &empty_l);
    Tensor<T> term_r = masked_mean_abs(ops::sub(ops::warp(up_l2r, sr_l), sr_r), up_v_r, C, &empty_r);
    if (empty_l) warn_empty_mask("left");
    if (empty_r) warn_empty_mask("right");
    return ops::add(term_l, term_r);
}

template <typename T>
LossResult<T> total_loss(const ModelOutput<T>& out, const Tensor<T>& hr_l, const Tensor<T>& hr_r,
                         const Tensor<T>& lr_l, const Tensor<T>& lr_r, const LossWeights& weights) {
    LossResult<T> res;
    Tensor<T> sr = ops::scale(sr_loss(out.sr_left, out.sr_right, hr_l, hr_r), static_cast<T>(weights.sr));
    PamLossTerms<T> pam = pam_loss(out.maps, lr_l, lr_r);
    Tensor<T> photo = ops::scale(pam.photometric, static_cast<T>(weights.photometric));
    Tensor<T> smooth = ops::scale(pam.smooth, static_cast<T>(weights.smooth));
    Tensor<T> cycle = ops::scale(pam.cycle, static_cast<T>(weights.cycle));
    Tensor<T> stereo = ops::scale(stereo_consistency_loss(out.sr_left, out.sr_right, out.maps),
                                  static_cast<T>(weights.stereo));

    Tensor<T> total = ops::add(ops::add(sr, ops::add(photo, ops::add(smooth, cycle))), stereo);

    res.total = total;
    res.breakdown.l_sr = static_cast<double>(sr.item());
    res.breakdown.l_photometric = static_cast<double>(photo.item());
    res.breakdown.l_smooth = static_cast<double>(smooth.item());
    res.breakdown.l_cycle = static_cast<double>(cycle.item());
    res.breakdown.l_pam = res.breakdown.l_photometric + res.breakdown.l_smooth + res.breakdown.l_cycle;
    res.breakdown.l_stereo = static_cast<double>(stereo.item());
    res.breakdown.total = static_cast<double>(total.item());
    res.left_mask_empty = pam.left_mask_empty;
    res.right_mask_empty = pam.right_mask_empty;
    return res;
}

#define CCSBESR_LOSSES_INSTANTIATE(T)                                                                      \
    template Tensor<T> identity_attention<T>(int64_t, int64_t, int64_t);                                   \
    template Tensor<T> sr_loss<T>(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, const Tensor<T>&); \
    template PamLossTerms<T> pam_loss<T>(const AttentionMaps<T>&, const Tensor<T>&, const Tensor<T>&);     \
    template Tensor<T> stereo_consistency_loss<T>(const Tensor<T>&, const Tensor<T>&,                      \
                                                  const AttentionMaps<T>&);                                \
    template LossResult<T> total_loss<T>(const ModelOutput<T>&, const Tensor<T>&, const Tensor<T>&,        \
                                         const Tensor<T>&, const Tensor<T>&, const LossWeights&);

CCSBESR_LOSSES_INSTANTIATE(float)
CCSBESR_LOSSES_INSTANTIATE(double)

#undef CCSBESR_LOSSES_INSTANTIATE

}  // namespace ccsbesr
