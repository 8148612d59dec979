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

#include "cnnlens/analytics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "cnnlens/error.hpp"
#include "cnnlens/log.hpp"
#include "cnnlens/tsne.hpp"

namespace cnnlens {

namespace {

nlohmann::json optional_array(const std::vector<std::optional<double>>& values) {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& v : values) out.push_back(v ? nlohmann::json(*v) : nlohmann::json(nullptr));
    return out;
}

std::vector<std::optional<double>> read_optional_array(const nlohmann::json& j) {
    std::vector<std::optional<double>> out;
    for (const auto& v : j) out.push_back(v.is_null() ? std::nullopt : std::optional<double>(v.get<double>()));
    return out;
}

}  // namespace

std::vector<std::size_t> DistanceMatrix::populated_classes() const {
    std::vector<std::size_t> out;
    for (std::size_t c = 0; c < populated.size(); ++c)
        if (populated[c]) out.push_back(c);
    return out;
}

DistanceMatrix build_distance_matrix(std::span<const std::size_t> img_classes, const Matrix& conf_mat,
                                     bool require_all_populated) {
    const std::size_t m = conf_mat.rows();
    const std::size_t n = conf_mat.cols();
    if (img_classes.size() != m)
        throw Error(ErrorCode::ShapeMismatch, "class list length differs from confidence rows",
                    std::to_string(img_classes.size()) + " vs " + std::to_string(m));

    // The per-(c, d) count is the image count of class c for every d, so one
    // counter per class suffices.
    Matrix sums(n, n);
    std::vector<std::size_t> counts(n, 0);
    for (std::size_t i = 0; i < m; ++i) {
        const std::size_t c = img_classes[i];
        if (c >= n) throw Error(ErrorCode::InvalidArgument, "class index out of range", std::to_string(c));
        const auto row = conf_mat.row(i);
        for (std::size_t d = 0; d < n; ++d) {
            if (!(row[d] >= 0.0 && row[d] <= 1.0))
                throw Error(ErrorCode::InvalidArgument, "confidence outside [0, 1]", "row " + std::to_string(i));
            if (d != c) sums(c, d) += 1.0 - row[d];
        }
        ++counts[c];
    }

    DistanceMatrix out;
    out.populated.assign(n, false);
    for (std::size_t c = 0; c < n; ++c) {
        out.populated[c] = counts[c] > 0;
        if (!out.populated[c] && require_all_populated)
            throw Error(ErrorCode::EmptyClass, "class has no images", std::to_string(c));
    }

    Matrix mean(n, n);
    for (std::size_t c = 0; c < n; ++c) {
        if (!counts[c]) continue;
        const auto count = static_cast<double>(counts[c]);
        for (std::size_t d = 0; d < n; ++d) mean(c, d) = sums(c, d) / count;
    }
    out.values = Matrix(n, n);
    for (std::size_t c = 0; c < n; ++c)
        for (std::size_t d = 0; d < n; ++d)
            if (out.populated[c] && out.populated[d] && c != d) out.values(c, d) = (mean(c, d) + mean(d, c)) / 2.0;
    return out;
}

nlohmann::json ProjectionOptions::to_json() const {
    return {{"seed", seed}, {"perplexity", perplexity}, {"iterations", iterations}};
}

nlohmann::json ClassProjection::to_json() const {
    nlohmann::json points = nlohmann::json::array();
    for (std::size_t i = 0; i < class_ids.size(); ++i)
        points.push_back({{"class_index", class_ids[i]},
                          {"root_index", root_index[i]},
                          {"x", coords(i, 0)},
                          {"y", coords(i, 1)}});
    return {{"model_id", model_id}, {"seed", seed},         {"perplexity", perplexity},
            {"degenerate", degenerate}, {"points", std::move(points)}};
}

ClassProjection ClassProjection::from_json(const nlohmann::json& j) {
    ClassProjection p;
    try {
        p.model_id = j.at("model_id").get<std::string>();
        p.seed = j.at("seed").get<std::uint64_t>();
        p.perplexity = j.at("perplexity").get<double>();
        p.degenerate = j.value("degenerate", false);
        const auto& points = j.at("points");
        p.coords = Matrix(points.size(), 2);
        for (std::size_t i = 0; i < points.size(); ++i) {
            p.class_ids.push_back(points[i].at("class_index").get<std::size_t>());
            p.root_index.push_back(points[i].at("root_index").get<std::size_t>());
            p.coords(i, 0) = points[i].at("x").get<double>();
            p.coords(i, 1) = points[i].at("y").get<double>();
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::InvalidArgument, "malformed projection", e.what());
    }
    return p;
}

ClassProjection project_classes(const DistanceMatrix& dist, const ProjectionOptions& options,
                                std::span<const std::size_t> root_of) {
    const std::size_t n = dist.class_count();
    if (dist.values.cols() != n || dist.populated.size() != n)
        throw Error(ErrorCode::ShapeMismatch, "malformed distance matrix");
    if (!root_of.empty() && root_of.size() != n)
        throw Error(ErrorCode::ShapeMismatch, "root mapping length differs from class count");

    ClassProjection out;
    out.model_id = dist.model_id;
    out.seed = options.seed;
    out.class_ids = dist.populated_classes();
    const std::size_t p = out.class_ids.size();
    out.perplexity = std::min(options.perplexity, p > 1 ? static_cast<double>(p - 1) / 3.0 : 1.0);
    if (!(options.perplexity > 0.0)) throw Error(ErrorCode::InvalidArgument, "perplexity must be positive");

    Matrix sub(p, p);
    for (std::size_t i = 0; i < p; ++i)
        for (std::size_t j = 0; j < p; ++j) sub(i, j) = dist.values(out.class_ids[i], out.class_ids[j]);

    bool all_equal = true;
    double first = std::numeric_limits<double>::quiet_NaN();
    for (std::size_t i = 0; i < p && all_equal; ++i)
        for (std::size_t j = 0; j < p; ++j) {
            if (i == j) continue;
            if (std::isnan(first)) first = sub(i, j);
            else if (sub(i, j) != first) {
                all_equal = false;
                break;
            }
        }
    out.degenerate = all_equal;
    if (out.degenerate) log::warn("projection input has all-equal distances");

    TsneOptions tsne;
    tsne.perplexity = out.perplexity;
    tsne.iterations = options.iterations;
    tsne.seed = options.seed;
    out.coords = tsne_embed(sub, tsne);
    for (std::size_t c : out.class_ids) out.root_index.push_back(root_of.empty() ? 0 : root_of[c]);
    return out;
}

nlohmann::json AccuracyReport::to_json() const {
    return {{"model_id", model_id},
            {"overall", overall},
            {"per_root", optional_array(per_root)},
            {"per_leaf", optional_array(per_leaf)},
            {"counts", counts},
            {"correct", correct}};
}

AccuracyReport AccuracyReport::from_json(const nlohmann::json& j) {
    AccuracyReport r;
    try {
        r.model_id = j.at("model_id").get<std::string>();
        r.overall = j.at("overall").get<double>();
        r.per_root = read_optional_array(j.at("per_root"));
        r.per_leaf = read_optional_array(j.at("per_leaf"));
        r.counts = j.at("counts").get<std::vector<std::size_t>>();
        r.correct = j.at("correct").get<std::vector<std::size_t>>();
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::InvalidArgument, "malformed accuracy report", e.what());
    }
    return r;
}

AccuracyReport accuracy_report(std::span<const std::size_t> img_classes, const Matrix& conf_mat,
                               const ClassHierarchy& hierarchy) {
    const std::size_t n = conf_mat.cols();
    if (img_classes.size() != conf_mat.rows())
        throw Error(ErrorCode::ShapeMismatch, "class list length differs from confidence rows");
    if (hierarchy.leaf_count() != n)
        throw Error(ErrorCode::ShapeMismatch, "hierarchy leaf count differs from confidence columns",
                    std::to_string(hierarchy.leaf_count()) + " vs " + std::to_string(n));

    AccuracyReport r;
    r.counts.assign(n, 0);
    r.correct.assign(n, 0);
    for (std::size_t i = 0; i < img_classes.size(); ++i) {
        const std::size_t c = img_classes[i];
        if (c >= n) throw Error(ErrorCode::InvalidArgument, "class index out of range", std::to_string(c));
        ++r.counts[c];
        if (argmax(conf_mat.row(i)) == c) ++r.correct[c];
    }
    r.per_leaf.resize(n);
    for (std::size_t c = 0; c < n; ++c)
        if (r.counts[c]) r.per_leaf[c] = static_cast<double>(r.correct[c]) / static_cast<double>(r.counts[c]);

    // Aggregates are count-weighted means of the leaf accuracies.
    auto weighted = [&](auto&& member) -> std::optional<double> {
        double num = 0.0;
        std::size_t den = 0;
        for (std::size_t c = 0; c < n; ++c)
            if (r.per_leaf[c] && member(c)) {
                num += *r.per_leaf[c] * static_cast<double>(r.counts[c]);
                den += r.counts[c];
            }
        if (!den) return std::nullopt;
        return num / static_cast<double>(den);
    };
    r.overall = weighted([](std::size_t) { return true; }).value_or(0.0);
    r.per_root.resize(hierarchy.root_count());
    for (std::size_t root = 0; root < hierarchy.root_count(); ++root)
        r.per_root[root] = weighted([&](std::size_t c) { return hierarchy.root_of[c] == root; });
    return r;
}

ClassAccuracyStats class_accuracy_stats(std::span<const AccuracyReport> reports, std::size_t k) {
    if (reports.size() < 2) throw Error(ErrorCode::InsufficientModels, "class statistics need at least two models");
    if (k == 0) throw Error(ErrorCode::InvalidArgument, "k must be >= 1");
    const std::size_t n = reports.front().per_leaf.size();
    for (const auto& r : reports)
        if (r.per_leaf.size() != n) throw Error(ErrorCode::ShapeMismatch, "reports cover different class counts");

    std::vector<ClassStat> stats;
    for (std::size_t c = 0; c < n; ++c) {
        ClassStat s;
        s.class_index = c;
        bool everywhere = true;
        for (const auto& r : reports) {
            if (!r.per_leaf[c]) {
                everywhere = false;
                break;
            }
            s.accuracies.push_back(*r.per_leaf[c]);
        }
        if (!everywhere) continue;
        const auto [lo, hi] = std::minmax_element(s.accuracies.begin(), s.accuracies.end());
        s.range = *hi - *lo;
        s.mean = std::accumulate(s.accuracies.begin(), s.accuracies.end(), 0.0) /
                 static_cast<double>(s.accuracies.size());
        stats.push_back(std::move(s));
    }

    auto take = [&](auto&& before) {
        std::vector<ClassStat> sorted = stats;
        std::stable_sort(sorted.begin(), sorted.end(), before);
        if (sorted.size() > k) sorted.resize(k);
        return sorted;
    };
    ClassAccuracyStats out;
    out.k = k;
    out.diverging = take([](const ClassStat& a, const ClassStat& b) { return a.range > b.range; });
    out.top = take([](const ClassStat& a, const ClassStat& b) { return a.mean > b.mean; });
    out.bottom = take([](const ClassStat& a, const ClassStat& b) { return a.mean < b.mean; });
    return out;
}

}  // namespace cnnlens
