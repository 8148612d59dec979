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

#include "cnnlens/saliency.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <map>
#include <string>

#include "cnnlens/error.hpp"
#include "cnnlens/log.hpp"

namespace cnnlens {

double clamp_threshold(double t) {
    if (std::isnan(t)) throw Error(ErrorCode::InvalidArgument, "threshold is NaN");
    if (t < 0.0 || t > 1.0) {
        log::warn("threshold " + std::to_string(t) + " clamped to [0, 1]");
        return std::clamp(t, 0.0, 1.0);
    }
    return t;
}

std::size_t BinaryMask::popcount() const {
    return static_cast<std::size_t>(std::count_if(bits.begin(), bits.end(), [](std::uint8_t b) { return b != 0; }));
}

BinaryMask threshold_mask(const Matrix& attention, double t) {
    t = clamp_threshold(t);
    BinaryMask mask(attention.rows(), attention.cols());
    for (std::size_t i = 0; i < attention.size(); ++i) mask.bits[i] = attention.data()[i] >= t ? 1 : 0;
    return mask;
}

// ---------------------------------------------------------------------------
// Contours

namespace {

class ContourTracer {
  public:
    explicit ContourTracer(const Matrix& map) : h_(map.rows()), w_(map.cols()), grid_((h_ + 2) * (w_ + 2), -1.0) {
        for (std::size_t i = 0; i < h_; ++i)
            for (std::size_t j = 0; j < w_; ++j) node(i + 1, j + 1) = map(i, j);
    }

    std::vector<Polyline> trace(double level) {
        points_.clear();
        links_.clear();
        for (std::size_t r = 0; r + 1 < h_ + 2; ++r)
            for (std::size_t c = 0; c + 1 < w_ + 2; ++c) march_cell(r, c, level);
        return chain();
    }

  private:
    double& node(std::size_t r, std::size_t c) { return grid_[r * (w_ + 2) + c]; }

    [[nodiscard]] double x_of(std::size_t c) const {
        if (c == 0) return 0.0;
        if (c == w_ + 1) return static_cast<double>(w_);
        return static_cast<double>(c) - 0.5;
    }
    [[nodiscard]] double y_of(std::size_t r) const {
        if (r == 0) return 0.0;
        if (r == h_ + 1) return static_cast<double>(h_);
        return static_cast<double>(r) - 0.5;
    }

    [[nodiscard]] std::size_t h_edge(std::size_t r, std::size_t c) const { return (r * (w_ + 2) + c) * 2; }
    [[nodiscard]] std::size_t v_edge(std::size_t r, std::size_t c) const { return (r * (w_ + 2) + c) * 2 + 1; }

    // Registers the crossing on the edge between nodes (r0, c0) and (r1, c1).
    std::size_t crossing(std::size_t id, std::size_t r0, std::size_t c0, std::size_t r1, std::size_t c1, double level) {
        if (!points_.contains(id)) {
            const double a = node(r0, c0);
            const double b = node(r1, c1);
            const double t = (level - a) / (b - a);
            points_[id] = {x_of(c0) + t * (x_of(c1) - x_of(c0)), y_of(r0) + t * (y_of(r1) - y_of(r0))};
        }
        return id;
    }

    void link(std::size_t a, std::size_t b) {
        links_[a].push_back(b);
        links_[b].push_back(a);
    }

    void march_cell(std::size_t r, std::size_t c, double level) {
        const double tl = node(r, c), tr = node(r, c + 1), br = node(r + 1, c + 1), bl = node(r + 1, c);
        const bool in_tl = tl >= level, in_tr = tr >= level, in_br = br >= level, in_bl = bl >= level;

        // Edges in cyclic order: top, right, bottom, left.
        std::vector<std::size_t> hits;
        if (in_tl != in_tr) hits.push_back(crossing(h_edge(r, c), r, c, r, c + 1, level));
        if (in_tr != in_br) hits.push_back(crossing(v_edge(r, c + 1), r, c + 1, r + 1, c + 1, level));
        if (in_bl != in_br) hits.push_back(crossing(h_edge(r + 1, c), r + 1, c, r + 1, c + 1, level));
        if (in_tl != in_bl) hits.push_back(crossing(v_edge(r, c), r, c, r + 1, c, level));

        if (hits.size() == 2) {
            link(hits[0], hits[1]);
        } else if (hits.size() == 4) {
            const bool in_center = (tl + tr + br + bl) / 4.0 >= level;
            if (in_tr != in_center) {
                link(hits[0], hits[1]);
                link(hits[2], hits[3]);
            } else {
                link(hits[3], hits[0]);
                link(hits[1], hits[2]);
            }
        }
    }

    std::vector<Polyline> chain() {
        std::vector<Polyline> out;
        std::map<std::size_t, bool> visited;
        for (const auto& [start, _] : points_) {
            if (visited[start]) continue;
            Polyline path;
            std::size_t prev = start;
            std::size_t cur = start;
            while (!visited[cur]) {
                visited[cur] = true;
                path.push_back(points_.at(cur));
                const auto& next = links_.at(cur);
                const std::size_t step = next[0] != prev ? next[0] : next[1];
                prev = cur;
                cur = step;
            }
            out.push_back(std::move(path));
        }
        return out;
    }

    std::size_t h_;
    std::size_t w_;
    std::vector<double> grid_;
    std::map<std::size_t, ContourPoint> points_;
    std::map<std::size_t, std::vector<std::size_t>> links_;
};

}  // namespace

ContourSet contour_bands(const Matrix& attention, std::span<const double> levels, double threshold) {
    for (std::size_t i = 0; i < levels.size(); ++i) {
        if (!(levels[i] > 0.0 && levels[i] <= 1.0))
            throw Error(ErrorCode::InvalidArgument, "contour level outside (0, 1]", std::to_string(levels[i]));
        if (i && !(levels[i] > levels[i - 1]))
            throw Error(ErrorCode::InvalidArgument, "contour levels must be strictly ascending");
    }
    ContourSet set;
    set.threshold = clamp_threshold(threshold);
    set.width = attention.cols();
    set.height = attention.rows();
    ContourTracer tracer(attention);
    for (double level : levels) {
        if (level < set.threshold) continue;
        set.levels.push_back({level, tracer.trace(level)});
    }
    return set;
}

double polygon_area(const Polyline& path) {
    double twice = 0.0;
    for (std::size_t i = 0; i < path.size(); ++i) {
        const auto& a = path[i];
        const auto& b = path[(i + 1) % path.size()];
        twice += a.x * b.y - b.x * a.y;
    }
    return twice / 2.0;
}

nlohmann::json ContourSet::to_json() const {
    nlohmann::json out_levels = nlohmann::json::array();
    for (const auto& lvl : levels) {
        nlohmann::json lines = nlohmann::json::array();
        for (const auto& line : lvl.polylines) {
            nlohmann::json pts = nlohmann::json::array();
            for (const auto& p : line) pts.push_back({p.x, p.y});
            lines.push_back(std::move(pts));
        }
        out_levels.push_back({{"level", lvl.level}, {"polylines", std::move(lines)}});
    }
    return {{"threshold", threshold}, {"width", width}, {"height", height}, {"levels", std::move(out_levels)}};
}

ContourSet ContourSet::from_json(const nlohmann::json& j) {
    ContourSet set;
    try {
        set.threshold = j.at("threshold").get<double>();
        set.width = j.at("width").get<std::size_t>();
        set.height = j.at("height").get<std::size_t>();
        for (const auto& lvl : j.at("levels")) {
            ContourLevel level{lvl.at("level").get<double>(), {}};
            for (const auto& line : lvl.at("polylines")) {
                Polyline path;
                for (const auto& p : line) path.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
                level.polylines.push_back(std::move(path));
            }
            set.levels.push_back(std::move(level));
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::InvalidArgument, "malformed contour set", e.what());
    }
    return set;
}

// ---------------------------------------------------------------------------
// ROI and histograms

RgbImage roi_filter(const RgbImage& image, const Matrix& attention, double t) {
    if (image.height != attention.rows() || image.width != attention.cols())
        throw Error(ErrorCode::ShapeMismatch, "image and attention shapes differ");
    t = clamp_threshold(t);
    RgbImage out = image;
    for (std::size_t y = 0; y < image.height; ++y)
        for (std::size_t x = 0; x < image.width; ++x)
            if (attention(y, x) < t)
                for (std::size_t c = 0; c < 3; ++c) out.at(y, x, c) = 0;
    return out;
}

ColorIntensityHistogram color_intensity_histogram(const RgbImage& image, const BinaryMask& mask,
                                                  double threshold_used) {
    if (image.height != mask.rows || image.width != mask.cols)
        throw Error(ErrorCode::ShapeMismatch, "image and mask shapes differ");
    ColorIntensityHistogram h;
    h.threshold_used = threshold_used;
    for (std::size_t y = 0; y < image.height; ++y)
        for (std::size_t x = 0; x < image.width; ++x) {
            if (!mask.at(y, x)) continue;
            ++h.kept_pixels;
            for (std::size_t c = 0; c < 3; ++c) ++h.bins[c][image.at(y, x, c)];
        }
    h.empty_roi = h.kept_pixels == 0;
    return h;
}

nlohmann::json ColorIntensityHistogram::to_json() const {
    return {{"bins", {bins[0], bins[1], bins[2]}},
            {"kept_pixels", kept_pixels},
            {"threshold_used", threshold_used},
            {"empty_roi", empty_roi}};
}

// ---------------------------------------------------------------------------
// Similarity

std::string_view to_string(Measure measure) noexcept {
    switch (measure) {
        case Measure::L1: return "l1";
        case Measure::Mse: return "mse";
        case Measure::Ssim: return "ssim";
        case Measure::Hash: return "hash";
    }
    return "?";
}

Measure parse_measure(std::string_view name) {
    for (Measure m : kAllMeasures)
        if (to_string(m) == name) return m;
    throw Error(ErrorCode::InvalidArgument, "unknown similarity measure", std::string(name));
}

namespace {

void require_same_shape(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols() || a.empty())
        throw Error(ErrorCode::ShapeMismatch, "maps must share a non-empty shape");
}

std::vector<double> gaussian_window(std::size_t n, double sigma) {
    std::vector<double> w(n);
    const double center = (static_cast<double>(n) - 1.0) / 2.0;
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = static_cast<double>(i) - center;
        w[i] = std::exp(-d * d / (2.0 * sigma * sigma));
        total += w[i];
    }
    for (double& v : w) v /= total;
    return w;
}

// Overlap of unit source cells with `out` equal bins spanning `in` cells.
std::vector<std::vector<double>> area_weights(std::size_t in, std::size_t out) {
    std::vector<std::vector<double>> w(out, std::vector<double>(in, 0.0));
    const double step = static_cast<double>(in) / static_cast<double>(out);
    for (std::size_t u = 0; u < out; ++u) {
        const double lo = static_cast<double>(u) * step;
        const double hi = lo + step;
        for (std::size_t i = 0; i < in; ++i) {
            const double overlap = std::min(hi, static_cast<double>(i + 1)) - std::max(lo, static_cast<double>(i));
            if (overlap > 0.0) w[u][i] = overlap / step;
        }
    }
    return w;
}

}  // namespace

double l1_similarity(const Matrix& a, const Matrix& b) {
    require_same_shape(a, b);
    double total = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) total += std::abs(a.data()[i] - b.data()[i]);
    return 1.0 - total / static_cast<double>(a.size());
}

double mse_similarity(const Matrix& a, const Matrix& b) {
    require_same_shape(a, b);
    double total = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a.data()[i] - b.data()[i];
        total += d * d;
    }
    return 1.0 - total / static_cast<double>(a.size());
}

double ssim(const Matrix& a, const Matrix& b) {
    require_same_shape(a, b);
    constexpr double c1 = 0.01 * 0.01;
    constexpr double c2 = 0.03 * 0.03;
    const std::size_t wr = std::min<std::size_t>(11, a.rows());
    const std::size_t wc = std::min<std::size_t>(11, a.cols());
    const auto gr = gaussian_window(wr, 1.5);
    const auto gc = gaussian_window(wc, 1.5);

    double total = 0.0;
    std::size_t windows = 0;
    for (std::size_t r0 = 0; r0 + wr <= a.rows(); ++r0)
        for (std::size_t c0 = 0; c0 + wc <= a.cols(); ++c0) {
            double mx = 0, my = 0, sxx = 0, syy = 0, sxy = 0;
            for (std::size_t i = 0; i < wr; ++i)
                for (std::size_t j = 0; j < wc; ++j) {
                    const double w = gr[i] * gc[j];
                    const double x = a(r0 + i, c0 + j);
                    const double y = b(r0 + i, c0 + j);
                    mx += w * x;
                    my += w * y;
                    sxx += w * x * x;
                    syy += w * y * y;
                    sxy += w * x * y;
                }
            const double vx = sxx - mx * mx;
            const double vy = syy - my * my;
            const double cov = sxy - mx * my;
            total += ((2.0 * mx * my + c1) * (2.0 * cov + c2)) / ((mx * mx + my * my + c1) * (vx + vy + c2));
            ++windows;
        }
    return total / static_cast<double>(windows);
}

std::uint64_t average_hash(const Matrix& map) {
    if (map.empty()) throw Error(ErrorCode::ShapeMismatch, "cannot hash an empty map");
    const auto wr = area_weights(map.rows(), 8);
    const auto wc = area_weights(map.cols(), 8);
    std::array<double, 64> cells{};
    for (std::size_t u = 0; u < 8; ++u)
        for (std::size_t v = 0; v < 8; ++v) {
            double s = 0.0;
            for (std::size_t i = 0; i < map.rows(); ++i) {
                if (wr[u][i] == 0.0) continue;
                for (std::size_t j = 0; j < map.cols(); ++j) s += wr[u][i] * wc[v][j] * map(i, j);
            }
            cells[u * 8 + v] = s;
        }
    double mean = 0.0;
    for (double c : cells) mean += c;
    mean /= 64.0;
    std::uint64_t bits = 0;
    for (std::size_t k = 0; k < 64; ++k)
        if (cells[k] > mean) bits |= std::uint64_t{1} << k;
    return bits;
}

double hash_similarity(const Matrix& a, const Matrix& b) {
    require_same_shape(a, b);
    const int distance = std::popcount(average_hash(a) ^ average_hash(b));
    return 1.0 - static_cast<double>(distance) / 64.0;
}

double similarity(const Matrix& a, const Matrix& b, Measure measure) {
    switch (measure) {
        case Measure::L1: return l1_similarity(a, b);
        case Measure::Mse: return mse_similarity(a, b);
        case Measure::Ssim: return ssim(a, b);
        case Measure::Hash: return hash_similarity(a, b);
    }
    throw Error(ErrorCode::InvalidArgument, "unknown similarity measure");
}

SimilarityMatrix similarity_matrix(std::span<const Matrix> maps, Measure measure, std::vector<std::string> labels,
                                   std::size_t rows, std::size_t cols) {
    if (maps.empty()) throw Error(ErrorCode::EmptyInput, "similarity needs at least one map");
    if (!labels.empty() && labels.size() != maps.size())
        throw Error(ErrorCode::ShapeMismatch, "label count differs from map count");
    if (rows == 0 || cols == 0) {
        rows = maps.front().rows();
        cols = maps.front().cols();
    }
    std::vector<Matrix> common;
    common.reserve(maps.size());
    for (const auto& m : maps) {
        if (m.empty()) throw Error(ErrorCode::ShapeMismatch, "empty attention map");
        common.push_back(m.rows() == rows && m.cols() == cols ? m : resample(m, rows, cols));
    }

    const std::size_t l = maps.size();
    SimilarityMatrix out;
    out.measure = measure;
    out.values = Matrix(l, l);
    for (std::size_t i = 0; i < l; ++i)
        for (std::size_t j = i; j < l; ++j) {
            const double s = similarity(common[i], common[j], measure);
            out.values(i, j) = s;
            out.values(j, i) = s;
        }
    if (labels.empty())
        for (std::size_t i = 0; i < l; ++i) labels.push_back(std::to_string(i));
    out.labels = std::move(labels);
    return out;
}

nlohmann::json SimilarityMatrix::to_json() const {
    nlohmann::json vals = nlohmann::json::array();
    for (std::size_t i = 0; i < values.rows(); ++i) {
        const auto r = values.row(i);
        vals.push_back(std::vector<double>(r.begin(), r.end()));
    }
    return {{"measure", to_string(measure)}, {"labels", labels}, {"values", std::move(vals)}};
}

SimilarityMatrix SimilarityMatrix::from_json(const nlohmann::json& j) {
    SimilarityMatrix s;
    try {
        s.measure = parse_measure(j.at("measure").get<std::string>());
        s.labels = j.at("labels").get<std::vector<std::string>>();
        const auto& vals = j.at("values");
        s.values = Matrix(vals.size(), vals.size());
        for (std::size_t i = 0; i < vals.size(); ++i)
            for (std::size_t k = 0; k < vals.size(); ++k) s.values(i, k) = vals.at(i).at(k).get<double>();
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::InvalidArgument, "malformed similarity matrix", e.what());
    }
    return s;
}

}  // namespace cnnlens
