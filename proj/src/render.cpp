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

#include "cnnlens/render.hpp"

#include <algorithm>
#include <cmath>

#include "cnnlens/error.hpp"

namespace cnnlens {

namespace {

std::uint8_t to_byte(double v) { return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0)); }

void draw_line(RgbImage& img, double x0, double y0, double x1, double y1, std::array<std::uint8_t, 3> color) {
    const double steps = std::max({std::abs(x1 - x0), std::abs(y1 - y0), 1.0});
    for (int s = 0; s <= static_cast<int>(std::ceil(steps)); ++s) {
        const double t = s / std::ceil(steps);
        const auto x = static_cast<long>(std::floor(x0 + t * (x1 - x0)));
        const auto y = static_cast<long>(std::floor(y0 + t * (y1 - y0)));
        if (x < 0 || y < 0 || x >= static_cast<long>(img.width) || y >= static_cast<long>(img.height)) continue;
        for (std::size_t c = 0; c < 3; ++c) img.at(y, x, c) = color[c];
    }
}

}  // namespace

std::array<std::uint8_t, 3> jet(double v) {
    v = std::clamp(v, 0.0, 1.0);
    auto channel = [v](double center) { return to_byte(1.5 - std::abs(4.0 * v - center)); };
    return {channel(3.0), channel(2.0), channel(1.0)};
}

RgbImage render_overlay(const RgbImage& image, const Matrix& attention, double threshold, const ContourSet* contours,
                        std::size_t long_side) {
    if (image.height != attention.rows() || image.width != attention.cols())
        throw Error(ErrorCode::ShapeMismatch, "image and attention shapes differ");
    const std::size_t longest = std::max<std::size_t>({image.width, image.height, 1});
    const std::size_t scale = std::max<std::size_t>(1, (long_side + longest - 1) / longest);
    RgbImage out(image.width * scale, image.height * scale);
    for (std::size_t y = 0; y < out.height; ++y)
        for (std::size_t x = 0; x < out.width; ++x) {
            const std::size_t sy = y / scale, sx = x / scale;
            const double a = attention(sy, sx);
            const auto heat = jet(a);
            for (std::size_t c = 0; c < 3; ++c) {
                const double base = image.at(sy, sx, c);
                out.at(y, x, c) = a >= threshold
                                      ? static_cast<std::uint8_t>(std::lround(0.5 * base + 0.5 * heat[c]))
                                      : image.at(sy, sx, c);
            }
        }
    if (contours) {
        const auto s = static_cast<double>(scale);
        for (const auto& level : contours->levels) {
            const std::uint8_t shade = to_byte(0.5 + 0.5 * level.level);
            for (const auto& path : level.polylines)
                for (std::size_t i = 0; i < path.size(); ++i) {
                    const auto& a = path[i];
                    const auto& b = path[(i + 1) % path.size()];
                    draw_line(out, a.x * s, a.y * s, b.x * s, b.y * s, {shade, shade, shade});
                }
        }
    }
    return out;
}

RgbImage render_heatmap(const Matrix& values, double lo, double hi, std::size_t cell) {
    RgbImage out(values.cols() * cell, values.rows() * cell);
    const double span = hi > lo ? hi - lo : 1.0;
    for (std::size_t y = 0; y < out.height; ++y)
        for (std::size_t x = 0; x < out.width; ++x) {
            const auto color = jet((values(y / cell, x / cell) - lo) / span);
            for (std::size_t c = 0; c < 3; ++c) out.at(y, x, c) = color[c];
        }
    return out;
}

}  // namespace cnnlens
