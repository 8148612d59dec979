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

#include <array>
#include <cstdint>

#include "cnnlens/image.hpp"
#include "cnnlens/matrix.hpp"
#include "cnnlens/saliency.hpp"

namespace cnnlens {

/// Jet colormap for v in [0, 1].
std::array<std::uint8_t, 3> jet(double v);

/// Heatmap blended over the image wherever attention >= threshold, with the
/// contour lines drawn on top. Small images are upscaled by an integer
/// factor so the longer side reaches at least `long_side` pixels.
RgbImage render_overlay(const RgbImage& image, const Matrix& attention, double threshold,
                        const ContourSet* contours = nullptr, std::size_t long_side = 128);

/// One colored square per matrix cell, values mapped from [lo, hi].
RgbImage render_heatmap(const Matrix& values, double lo, double hi, std::size_t cell = 24);

}  // namespace cnnlens
