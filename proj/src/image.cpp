// Copyright 2026 ccsbesr contributors
// SPDX-License-Identifier: Apache-2.0

#include "ccsbesr/image.hpp"

#include <png.h>

#include <cmath>
#include <cstring>
#include <stdexcept>
#include <vector>

namespace ccsbesr {

template <typename T>
Tensor<T> read_png(const std::string& path) {
    png_image image;
    std::memset(&image, 0, sizeof(image));
    image.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_file(&image, path.c_str()))
        throw std::runtime_error("read_png: " + path + ": " + image.message);
    image.format = PNG_FORMAT_RGB;
    std::vector<unsigned char> row_major(PNG_IMAGE_SIZE(image));
    if (!png_image_finish_read(&image, nullptr, row_major.data(), 0, nullptr)) {
        std::string msg = image.message;
        png_image_free(&image);
        throw std::runtime_error("read_png: " + path + ": " + msg);
    }
    const int64_t H = image.height;
    const int64_t W = image.width;
    Tensor<T> out({3, H, W});
    T* o = out.data();
    for (int64_t c = 0; c < 3; ++c)
        for (int64_t h = 0; h < H; ++h)
            for (int64_t w = 0; w < W; ++w)
                o[(c * H + h) * W + w] = static_cast<T>(row_major[(h * W + w) * 3 + c]) / T(255);
    return out;
}

template <typename T>
void write_png(const Tensor<T>& img, const std::string& path) {
    if (img.ndim() != 3 || img.dim(0) != 3)
        throw std::invalid_argument("write_png: " + path + ": expected shape 3 x H x W, got " + shape_str(img.shape()));
    const int64_t H = img.dim(1);
    const int64_t W = img.dim(2);
    std::vector<unsigned char> row_major(static_cast<size_t>(3 * H * W));
    const T* p = img.data();
    for (int64_t c = 0; c < 3; ++c)
        for (int64_t h = 0; h < H; ++h)
            for (int64_t w = 0; w < W; ++w) {
                double v = static_cast<double>(p[(c * H + h) * W + w]);
                if (v < 0.0) v = 0.0;
                if (v > 1.0) v = 1.0;
                row_major[static_cast<size_t>((h * W + w) * 3 + c)] =
                    static_cast<unsigned char>(std::floor(v * 255.0 + 0.5));
            }
    png_image image;
    std::memset(&image, 0, sizeof(image));
    image.version = PNG_IMAGE_VERSION;
    image.width = static_cast<png_uint_32>(W);
    image.height = static_cast<png_uint_32>(H);
    image.format = PNG_FORMAT_RGB;
    if (!png_image_write_to_file(&image, path.c_str(), 0, row_major.data(), 0, nullptr))
        throw std::runtime_error("write_png: " + path + ": " + image.message);
}

template Tensor<float> read_png<float>(const std::string&);
template Tensor<double> read_png<double>(const std::string&);
template void write_png<float>(const Tensor<float>&, const std::string&);
template void write_png<double>(const Tensor<double>&, const std::string&);

}  // namespace ccsbesr
