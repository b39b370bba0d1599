// Copyright 2026 ccsbesr contributors
// SPDX-License-Identifier: Apache-2.0

#include "ccsbesr/pam.hpp"

#include "ccsbesr/ops.hpp"

namespace ccsbesr {

template <typename T>
PAMParams<T> make_pam(int64_t channels, SeedStream& seeds) {
    PAMParams<T> p;
    p.transition = make_res_block<T>(channels, seeds);
    p.proj = make_conv_layer<T>(channels, channels, 1, seeds);
    p.fuse = make_conv_layer<T>(channels, 2 * channels + 1, 1, seeds);
    return p;
}

template <typename T>
void visit_params(PAMParams<T>& p, const std::string& prefix, const ParamVisitor<T>& fn) {
    visit_params(p.transition, prefix + ".transition", fn);
    visit_params(p.proj, prefix + ".proj", fn);
    visit_params(p.fuse, prefix + ".fuse", fn);
}

template <typename T>
Tensor<T> pam_scores(const Tensor<T>& f_left, const Tensor<T>& f_right, const PAMParams<T>& p) {
    if (f_left.shape() != f_right.shape())
        throw std::invalid_argument("pam_scores: view shapes " + shape_str(f_left.shape()) + " and " +
                                    shape_str(f_right.shape()) + " differ");
    Tensor<T> q = ops::conv2d(res_block(f_left, p.transition), p.proj.w, p.proj.b);
    Tensor<T> k = ops::conv2d(res_block(f_right, p.transition), p.proj.w, p.proj.b);
    return ops::batched_width_scores(q, k);
}

template <typename T>
std::pair<Tensor<T>, Tensor<T>> attention_from_scores(const Tensor<T>& scores) {
    Tensor<T> m_r2l = ops::softmax_last_axis(scores);
    Tensor<T> m_l2r = ops::softmax_last_axis(ops::transpose_last_two(scores));
    return {std::move(m_r2l), std::move(m_l2r)};
}

template <typename T>
std::pair<Tensor<T>, Tensor<T>> cycle_maps(const Tensor<T>& m_r2l, const Tensor<T>& m_l2r) {
    Tensor<T> cycle_l = ops::batched_width_matmul(m_r2l, m_l2r);
    Tensor<T> cycle_r = ops::batched_width_matmul(m_l2r, m_r2l);
    return {std::move(cycle_l), std::move(cycle_r)};
}

template <typename T>
Tensor<T> valid_mask(const Tensor<T>& m, T tau) {
    if (m.ndim() != 4 || m.dim(2) != m.dim(3))
        throw std::invalid_argument("valid_mask: expected B x H x W x W map, got " + shape_str(m.shape()));
    if (!(tau > T(0))) throw std::invalid_argument("valid_mask: threshold must be positive");
    const int64_t B = m.dim(0), H = m.dim(1), W = m.dim(2);
    Tensor<T> mask(Shape{B, 1, H, W});
    const T* mp = m.data();
    T* vp = mask.data();
#pragma omp parallel for schedule(static)
    for (int64_t t = 0; t < B * H; ++t) {
        const T* slice = mp + t * W * W;
        T* out = vp + t * W;
        for (int64_t j = 0; j < W; ++j) {
            T sum = T(0);
            for (int64_t k = 0; k < W; ++k) sum += slice[k * W + j];
            out[j] = sum > tau ? T(1) : T(0);
        }
    }
    return mask;
}

template <typename T>
PamOutput<T> pam_forward(const Tensor<T>& f_left, const Tensor<T>& f_right, const PAMParams<T>& p, T tau) {
    Tensor<T> scores = pam_scores(f_left, f_right, p);
    auto [m_r2l, m_l2r] = attention_from_scores(scores);
    auto [cycle_l, cycle_r] = cycle_maps(m_r2l, m_l2r);
    Tensor<T> v_left = valid_mask(m_r2l, tau);
    Tensor<T> v_right = valid_mask(m_l2r, tau);

    Tensor<T> warped_right = ops::warp(m_r2l, f_right);  // right features seen from the left view
    Tensor<T> warped_left = ops::warp(m_l2r, f_left);

    PamOutput<T> out;
    out.f_left = ops::conv2d(ops::concat_channels<T>({f_left, warped_right, v_left}), p.fuse.w, p.fuse.b);
    out.f_right = ops::conv2d(ops::concat_channels<T>({f_right, warped_left, v_right}), p.fuse.w, p.fuse.b);
    out.maps.m_r2l = std::move(m_r2l);
    out.maps.m_l2r = std::move(m_l2r);
    out.maps.cycle_l = std::move(cycle_l);
    out.maps.cycle_r = std::move(cycle_r);
    out.maps.v_left = std::move(v_left);
    out.maps.v_right = std::move(v_right);
    out.maps.tau = tau;
    return out;
}

#define CCSBESR_PAM_INSTANTIATE(T)                                                                      \
    template struct PAMParams<T>;                                                                       \
    template PAMParams<T> make_pam<T>(int64_t, SeedStream&);                                            \
    template void visit_params<T>(PAMParams<T>&, const std::string&, const ParamVisitor<T>&);           \
    template Tensor<T> pam_scores<T>(const Tensor<T>&, const Tensor<T>&, const PAMParams<T>&);          \
    template std::pair<Tensor<T>, Tensor<T>> attention_from_scores<T>(const Tensor<T>&);                \
    template std::pair<Tensor<T>, Tensor<T>> cycle_maps<T>(const Tensor<T>&, const Tensor<T>&);         \
    template Tensor<T> valid_mask<T>(const Tensor<T>&, T);                                              \
    template PamOutput<T> pam_forward<T>(const Tensor<T>&, const Tensor<T>&, const PAMParams<T>&, T);

CCSBESR_PAM_INSTANTIATE(float)
CCSBESR_PAM_INSTANTIATE(double)

#undef CCSBESR_PAM_INSTANTIATE

}  // namespace ccsbesr
