// Copyright 2026 ccsbesr contributors
// SPDX-License-Identifier: Apache-2.0

#ifndef CCSBESR_PAM_HPP
#define CCSBESR_PAM_HPP

#include <utility>

#include "ccsbesr/blocks.hpp"
#include "ccsbesr/tensor.hpp"

namespace ccsbesr {

// Everything the loss terms need from one cross-view attention pass.
// Maps are B x H x W x W with row-stochastic last axes; masks are binary
// B x 1 x H x W constants kept off the gradient tape.
template <typename T>
struct AttentionMaps {
    Tensor<T> m_r2l;
    Tensor<T> m_l2r;
    Tensor<T> cycle_l;  // m_r2l composed with m_l2r
    Tensor<T> cycle_r;  // m_l2r composed with m_r2l
    Tensor<T> v_left;
    Tensor<T> v_right;
    T tau = T(0.1);
};

// The transition block and the score projection are shared between the
// two views: a single path guarantees that swapping the inputs exactly
// transposes the raw score matrix, which the view-symmetry contract of
// the full model relies on.
template <typename T>
struct PAMParams {
    ResBlockParams<T> transition;
    ConvLayer<T> proj;  // C x C x 1 x 1
    ConvLayer<T> fuse;  // C x (2C+1) x 1 x 1
};

template <typename T>
struct PamOutput {
    Tensor<T> f_left;
    Tensor<T> f_right;
    AttentionMaps<T> maps;
};

template <typename T>
PAMParams<T> make_pam(int64_t channels, SeedStream& seeds);

template <typename T>
void visit_params(PAMParams<T>& p, const std::string& prefix, const ParamVisitor<T>& fn);

// scores[b,h,i,j] relates left column i to right column j on row h.
template <typename T>
Tensor<T> pam_scores(const Tensor<T>& f_left, const Tensor<T>& f_right, const PAMParams<T>& p);

// Softmax along the last axis of the raw scores and of their transpose.
// The transpose happens before normalization so both maps come out
// row-stochastic.
template <typename T>
std::pair<Tensor<T>, Tensor<T>> attention_from_scores(const Tensor<T>& scores);

// cycle_l[b,h] = m_r2l[b,h] * m_l2r[b,h], cycle_r the other order.
template <typename T>
std::pair<Tensor<T>, Tensor<T>> cycle_maps(const Tensor<T>& m_r2l, const Tensor<T>& m_l2r);

// mask[b,0,h,j] = 1 iff the j-th column of m[b,h] sums above tau.
// Columns that receive almost no attention mass are flagged occluded.
// The result is a plain constant, never part of the tape.
template <typename T>
Tensor<T> valid_mask(const Tensor<T>& m, T tau);

template <typename T>
PamOutput<T> pam_forward(const Tensor<T>& f_left, const Tensor<T>& f_right, const PAMParams<T>& p, T tau);

}  // namespace ccsbesr

#endif
