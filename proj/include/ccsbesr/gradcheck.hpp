// Copyright 2026 ccsbesr contributors
// SPDX-License-Identifier: Apache-2.0

#ifndef CCSBESR_GRADCHECK_HPP
#define CCSBESR_GRADCHECK_HPP

#include <functional>
#include <string>
#include <vector>

#include "ccsbesr/tensor.hpp"

namespace ccsbesr {

struct GradCheckStats {
    double max_rel_err = 0.0;
    int64_t checked = 0;
    int64_t refined = 0;  // comparisons re-measured at a smaller step
};

// Compares reverse-mode gradients of sum(forward() * R) against central
// finite differences for every element of every leaf, where R is a
// seeded random projection. The relative error is |a - f| divided by
// max(1, |a|, |f|). An element whose +-eps interval straddles a
// non-differentiable point is re-measured at eps/16 then eps/64; a wrong
// adjoint keeps failing at every step and still reports as an error.
// corrupt_first_adjoint perturbs one analytic value before the
// comparison; it exists as the negative-control hook.
template <typename T>
GradCheckStats check_gradients(const std::function<Tensor<T>()>& forward_fn, const std::vector<Tensor<T>*>& leaves,
                               double eps, uint64_t seed, bool corrupt_first_adjoint = false);

struct BlockCheck {
    std::string name;
    double max_rel_err = 0.0;
    int64_t checked = 0;
    bool pass = false;
};

// 64-bit finite-difference sweep over every attention block, the ASPP
// blocks, the parallax stages, the upsampler, and the full model, all at
// extents of 8 or less. Tolerance 1e-4, step 1e-3.
std::vector<BlockCheck> run_gradcheck_suite(uint64_t seed);

extern template GradCheckStats check_gradients<float>(const std::function<Tensor<float>()>&,
                                                      const std::vector<Tensor<float>*>&, double, uint64_t, bool);
extern template GradCheckStats check_gradients<double>(const std::function<Tensor<double>()>&,
                                                       const std::vector<Tensor<double>*>&, double, uint64_t, bool);

}  // namespace ccsbesr

#endif
