// Copyright 2026 ccsbesr contributors
// SPDX-License-Identifier: Apache-2.0

#ifndef CCSBESR_IMAGE_HPP
#define CCSBESR_IMAGE_HPP

#include <string>

#include "ccsbesr/tensor.hpp"

namespace ccsbesr {

// Decodes an 8-bit PNG into a 3 x H x W tensor in [0, 1]. Grayscale,
// palette, and alpha variants are coerced to RGB; 16-bit depth is
// reduced to 8. Throws runtime_error naming the file on failure.
template <typename T>
Tensor<T> read_png(const std::string& path);

// Encodes a 3 x H x W tensor as an 8-bit RGB PNG. Values are clamped to
// [0, 1] and quantised round-half-up. Writing the same tensor twice
// produces byte-identical files.
template <typename T>
void write_png(const Tensor<T>& img, const std::string& path);

extern template Tensor<float> read_png<float>(const std::string&);
extern template Tensor<double> read_png<double>(const std::string&);
extern template void write_png<float>(const Tensor<float>&, const std::string&);
extern template void write_png<double>(const Tensor<double>&, const std::string&);

}  // namespace ccsbesr

#endif
