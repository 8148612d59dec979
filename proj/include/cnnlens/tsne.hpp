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

#include "cnnlens/matrix.hpp"

namespace cnnlens {

struct TsneOptions {
    double perplexity = 30.0;
    std::size_t iterations = 1000;
    std::uint64_t seed = 42;
    double early_exaggeration = 12.0;
    std::size_t exaggeration_iterations = 250;
    /// <= 0 selects max(n / early_exaggeration / 4, 50).
    double learning_rate = 0.0;
};

/// Exact t-SNE on a precomputed symmetric distance matrix, producing n x 2
/// coordinates. Affinities use a Gaussian kernel on the given distances with
/// a per-point bandwidth found by bisection on the perplexity.
Matrix tsne_embed(const Matrix& distances, const TsneOptions& options);

}  // namespace cnnlens
