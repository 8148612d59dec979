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
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "cnnlens/image.hpp"
#include "cnnlens/matrix.hpp"

namespace cnnlens {

inline constexpr double kDefaultThreshold = 0.5;
inline constexpr std::array<double, 4> kDefaultContourLevels{0.2, 0.4, 0.6, 0.8};

/// Clamps to [0, 1], logging a warning when the input was outside.
double clamp_threshold(double t);

struct BinaryMask {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<std::uint8_t> bits;

    BinaryMask() = default;
    BinaryMask(std::size_t r, std::size_t c, std::uint8_t fill = 0) : rows(r), cols(c), bits(r * c, fill) {}

    [[nodiscard]] bool at(std::size_t r, std::size_t c) const { return bits[r * cols + c] != 0; }
    [[nodiscard]] std::size_t popcount() const;
};

/// mask = attention >= t.
BinaryMask threshold_mask(const Matrix& attention, double t);

struct ContourPoint {
    double x = 0.0;
    double y = 0.0;
};

using Polyline = std::vector<ContourPoint>;

struct ContourLevel {
    double level = 0.0;
    /// Closed paths; the last vertex connects back to the first.
    std::vector<Polyline> polylines;
};

struct ContourSet {
    std::vector<ContourLevel> levels;
    double threshold = kDefaultThreshold;
    std::size_t width = 0;
    std::size_t height = 0;

    [[nodiscard]] nlohmann::json to_json() const;
    static ContourSet from_json(const nlohmann::json& j);
};

/// Marching-squares iso-lines with sample (i, j) placed at pixel center
/// (j + 0.5, i + 0.5). The map is surrounded by a ring below every level,
/// sitting on the image border, so every contour is closed and inside
/// [0, W] x [0, H]. Levels below `threshold` are omitted.
/// Throws InvalidArgument unless levels are ascending and inside (0, 1].
ContourSet contour_bands(const Matrix& attention, std::span<const double> levels = kDefaultContourLevels,
                         double threshold = kDefaultThreshold);

/// Signed shoelace area of a closed polyline.
double polygon_area(const Polyline& path);

/// Pixels with attention < t become black. Throws ShapeMismatch.
RgbImage roi_filter(const RgbImage& image, const Matrix& attention, double t);

struct ColorIntensityHistogram {
    std::array<std::array<std::uint64_t, 256>, 3> bins{};
    std::size_t kept_pixels = 0;
    double threshold_used = 0.0;
    bool empty_roi = false;

    [[nodiscard]] nlohmann::json to_json() const;
};

/// Counts only pixels kept by `mask`. Throws ShapeMismatch.
ColorIntensityHistogram color_intensity_histogram(const RgbImage& image, const BinaryMask& mask,
                                                  double threshold_used = 0.0);

enum class Measure { L1, Mse, Ssim, Hash };

inline constexpr Measure kAllMeasures[] = {Measure::L1, Measure::Mse, Measure::Ssim, Measure::Hash};

std::string_view to_string(Measure measure) noexcept;
/// Throws InvalidArgument.
Measure parse_measure(std::string_view name);

/// 1 - mean |a - b|.
double l1_similarity(const Matrix& a, const Matrix& b);
/// 1 - mean (a - b)^2.
double mse_similarity(const Matrix& a, const Matrix& b);
/// Mean SSIM over valid windows. Gaussian window (sigma 1.5) of extent
/// min(11, size) along each axis; dynamic range 1.
double ssim(const Matrix& a, const Matrix& b);
/// 64-bit average hash: 8 x 8 area-mean downsample, bit = cell > mean of cells.
std::uint64_t average_hash(const Matrix& map);
/// 1 - hamming(hash(a), hash(b)) / 64.
double hash_similarity(const Matrix& a, const Matrix& b);

double similarity(const Matrix& a, const Matrix& b, Measure measure);

struct SimilarityMatrix {
    Matrix values;
    Measure measure = Measure::L1;
    std::vector<std::string> labels;

    [[nodiscard]] nlohmann::json to_json() const;
    static SimilarityMatrix from_json(const nlohmann::json& j);
};

/// Pairwise similarity over `maps`, all bilinearly resampled to
/// `rows` x `cols` first (0 means the shape of the first map).
/// Throws EmptyInput for an empty list.
SimilarityMatrix similarity_matrix(std::span<const Matrix> maps, Measure measure = Measure::L1,
                                   std::vector<std::string> labels = {}, std::size_t rows = 0,
                                   std::size_t cols = 0);

}  // namespace cnnlens
