// Copyright 2026 The cnnlens Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "cnnlens/matrix.hpp"
#include "cnnlens/matrix_io.hpp"

namespace cnnlens {

/// 8-bit interleaved RGB image.
struct RgbImage {
    std::size_t width = 0;
    std::size_t height = 0;
    std::vector<std::uint8_t> pixels;  // height * width * 3

    RgbImage() = default;
    RgbImage(std::size_t w, std::size_t h, std::uint8_t fill = 0)
        : width(w), height(h), pixels(w * h * 3, fill) {}

    std::uint8_t& at(std::size_t y, std::size_t x, std::size_t c) {
        return pixels[(y * width + x) * 3 + c];
    }
    std::uint8_t at(std::size_t y, std::size_t x, std::size_t c) const {
        return pixels[(y * width + x) * 3 + c];
    }

    friend bool operator==(const RgbImage&, const RgbImage&) = default;
};

/// Decodes PNG bytes (any bit depth / color type) into 8-bit RGB.
/// Throws UndecodableImage.
RgbImage decode_png(std::span<const std::uint8_t> bytes);
Bytes encode_png(const RgbImage& image);

RgbImage read_image(const std::filesystem::path& path);
void write_image(const std::filesystem::path& path, const RgbImage& image);

Bytes read_file(const std::filesystem::path& path);

enum class Interpolation { Nearest, Bilinear };

/// Half-pixel-center resampling (the convention of OpenCV / PyTorch with
/// align_corners=false). Bilinear output never leaves the input's value range.
Matrix resample(const Matrix& map, std::size_t rows, std::size_t cols,
                Interpolation mode = Interpolation::Bilinear);

/// Adjoint (transpose) of bilinear resample: maps a gradient on the
/// rows x cols output back onto the in_rows x in_cols source grid.
Matrix resample_adjoint(const Matrix& grad, std::size_t in_rows, std::size_t in_cols);

RgbImage resize_image(const RgbImage& image, std::size_t width, std::size_t height,
                      Interpolation mode = Interpolation::Bilinear);

}  // namespace cnnlens
