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
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cnnlens/matrix.hpp"
#include "cnnlens/registry.hpp"

namespace cnnlens {

/// Symmetric N x N class dissimilarity derived from withheld confidence.
///
/// Classes without any image are marked absent: their rows and columns are
/// zero and they are left out of the projection.
struct DistanceMatrix {
    Matrix values;
    std::string model_id;
    std::vector<bool> populated;

    [[nodiscard]] std::size_t class_count() const noexcept { return values.rows(); }
    [[nodiscard]] std::vector<std::size_t> populated_classes() const;
};

/// For each populated class c and every d != c: mean over images of class c
/// of (1 - confidence assigned to d), then (D + D^T) / 2.
///
/// Throws ShapeMismatch when img_classes and conf_mat disagree, InvalidArgument
/// for out-of-range classes or confidences, and EmptyClass for an unpopulated
/// class only when `require_all_populated` is set.
DistanceMatrix build_distance_matrix(std::span<const std::size_t> img_classes, const Matrix& conf_mat,
                                     bool require_all_populated = false);

struct ProjectionOptions {
    std::uint64_t seed = 42;
    double perplexity = 30.0;
    std::size_t iterations = 1000;

    [[nodiscard]] nlohmann::json to_json() const;
};

struct ClassProjection {
    Matrix coords;                        // one row per projected class
    std::vector<std::size_t> class_ids;   // leaf index of each row
    std::vector<std::size_t> root_index;  // root of each row
    std::string model_id;
    std::uint64_t seed = 42;
    double perplexity = 30.0;
    /// All pairwise distances were equal.
    bool degenerate = false;

    [[nodiscard]] nlohmann::json to_json() const;
    static ClassProjection from_json(const nlohmann::json& j);
};

/// t-SNE of the populated classes. Perplexity is capped at (populated - 1) / 3.
/// `root_of` may be empty, in which case every class gets root 0.
ClassProjection project_classes(const DistanceMatrix& dist, const ProjectionOptions& options,
                                std::span<const std::size_t> root_of = {});

struct AccuracyReport {
    std::string model_id;
    double overall = 0.0;
    std::vector<std::optional<double>> per_root;  // absent when no member leaf is populated
    std::vector<std::optional<double>> per_leaf;  // absent when the leaf has no images
    std::vector<std::size_t> counts;
    std::vector<std::size_t> correct;

    [[nodiscard]] nlohmann::json to_json() const;
    static AccuracyReport from_json(const nlohmann::json& j);
};

/// Prediction is the row argmax (ties to the lowest index).
AccuracyReport accuracy_report(std::span<const std::size_t> img_classes, const Matrix& conf_mat,
                               const ClassHierarchy& hierarchy);

struct ClassStat {
    std::size_t class_index = 0;
    double range = 0.0;
    double mean = 0.0;
    std::vector<double> accuracies;  // one per report, in input order
};

struct ClassAccuracyStats {
    std::size_t k = 0;
    std::vector<ClassStat> diverging;  // largest cross-model range first
    std::vector<ClassStat> top;        // highest mean first
    std::vector<ClassStat> bottom;     // lowest mean first
};

/// Only classes populated in every report are ranked. Ties break by
/// ascending class index. Throws InsufficientModels for fewer than two reports.
ClassAccuracyStats class_accuracy_stats(std::span<const AccuracyReport> reports, std::size_t k = 6);

}  // namespace cnnlens
