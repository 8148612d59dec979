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

#include "cnnlens/tsne.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "cnnlens/error.hpp"

namespace cnnlens {

namespace {

// Row-conditional affinities p_{j|i} matching the target perplexity.
Matrix conditional_affinities(const Matrix& d, double perplexity) {
    const std::size_t n = d.rows();
    Matrix p(n, n);
    const double target = std::log(std::max(perplexity, 1e-12));
    for (std::size_t i = 0; i < n; ++i) {
        double beta = 1.0, lo = 0.0, hi = std::numeric_limits<double>::infinity();
        std::vector<double> row(n, 0.0);
        for (int step = 0; step < 200; ++step) {
            double min_d = std::numeric_limits<double>::infinity();
            for (std::size_t j = 0; j < n; ++j)
                if (j != i) min_d = std::min(min_d, d(i, j) * d(i, j));
            double sum = 0.0, weighted = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                if (j == i) {
                    row[j] = 0.0;
                    continue;
                }
                const double sq = d(i, j) * d(i, j);
                // Shifting by the nearest distance keeps exp() from underflowing.
                row[j] = std::exp(-(sq - min_d) * beta);
                sum += row[j];
                weighted += (sq - min_d) * row[j];
            }
            // H = log(sum) + beta * E[d^2 - min_d]
            const double entropy = std::log(sum) + beta * weighted / sum;
            for (double& v : row) v /= sum;
            const double diff = entropy - target;
            if (std::abs(diff) < 1e-10) break;
            if (diff > 0.0) {
                lo = beta;
                beta = std::isinf(hi) ? beta * 2.0 : (beta + hi) / 2.0;
            } else {
                hi = beta;
                beta = (beta + lo) / 2.0;
            }
        }
        for (std::size_t j = 0; j < n; ++j) p(i, j) = row[j];
    }
    return p;
}

}  // namespace

Matrix tsne_embed(const Matrix& distances, const TsneOptions& options) {
    const std::size_t n = distances.rows();
    if (distances.cols() != n) throw Error(ErrorCode::ShapeMismatch, "distance matrix must be square");
    Matrix y(n, 2);
    if (n <= 1) return y;

    Matrix p = conditional_affinities(distances, options.perplexity);
    Matrix joint(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            joint(i, j) = i == j ? 0.0 : std::max((p(i, j) + p(j, i)) / (2.0 * static_cast<double>(n)), 1e-12);

    std::mt19937_64 rng(options.seed);
    std::normal_distribution<double> init(0.0, 1e-4);
    for (double& v : y.data()) v = init(rng);

    const double lr = options.learning_rate > 0.0
                          ? options.learning_rate
                          : std::max(static_cast<double>(n) / options.early_exaggeration / 4.0, 50.0);
    Matrix velocity(n, 2);
    Matrix gains(n, 2, 1.0);
    Matrix num(n, n);
    Matrix grad(n, 2);
    for (std::size_t it = 0; it < options.iterations; ++it) {
        const bool exaggerate = it < options.exaggeration_iterations;
        const double exaggeration = exaggerate ? options.early_exaggeration : 1.0;
        const double momentum = exaggerate ? 0.5 : 0.8;

        double z = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) {
                const double dx = y(i, 0) - y(j, 0);
                const double dy = y(i, 1) - y(j, 1);
                const double q = 1.0 / (1.0 + dx * dx + dy * dy);
                num(i, j) = num(j, i) = q;
                z += 2.0 * q;
            }
        std::fill(grad.data().begin(), grad.data().end(), 0.0);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) {
                if (i == j) continue;
                const double coeff = 4.0 * (exaggeration * joint(i, j) - num(i, j) / z) * num(i, j);
                grad(i, 0) += coeff * (y(i, 0) - y(j, 0));
                grad(i, 1) += coeff * (y(i, 1) - y(j, 1));
            }
        for (std::size_t k = 0; k < y.size(); ++k) {
            const double g = grad.data()[k];
            double& gain = gains.data()[k];
            double& v = velocity.data()[k];
            gain = (g > 0.0) != (v > 0.0) ? gain + 0.2 : std::max(gain * 0.8, 0.01);
            v = momentum * v - lr * gain * g;
            y.data()[k] += v;
        }
        for (std::size_t c = 0; c < 2; ++c) {
            double mean = 0.0;
            for (std::size_t i = 0; i < n; ++i) mean += y(i, c);
            mean /= static_cast<double>(n);
            for (std::size_t i = 0; i < n; ++i) y(i, c) -= mean;
        }
    }
    return y;
}

}  // namespace cnnlens
