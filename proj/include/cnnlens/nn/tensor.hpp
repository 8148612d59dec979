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

#include <algorithm>
#include <cstddef>
#include <vector>

#include "cnnlens/matrix.hpp"

namespace cnnlens::nn {

struct Shape {
    std::size_t c = 0;
    std::size_t h = 0;
    std::size_t w = 0;

    [[nodiscard]] std::size_t numel() const noexcept { return c * h * w; }
    friend bool operator==(const Shape&, const Shape&) = default;
};

/// Channel-major (C, H, W) activation tensor. Vectors are (N, 1, 1).
struct Tensor {
    Shape shape;
    std::vector<double> data;

    Tensor() = default;
    explicit Tensor(Shape s, double fill = 0.0) : shape(s), data(s.numel(), fill) {}

    double& at(std::size_t c, std::size_t y, std::size_t x) noexcept {
        return data[(c * shape.h + y) * shape.w + x];
    }
    double at(std::size_t c, std::size_t y, std::size_t x) const noexcept {
        return data[(c * shape.h + y) * shape.w + x];
    }

    [[nodiscard]] Matrix plane(std::size_t c) const {
        Matrix m(shape.h, shape.w);
        std::copy_n(data.begin() + static_cast<std::ptrdiff_t>(c * shape.h * shape.w), shape.h * shape.w,
                    m.data().begin());
        return m;
    }

    friend bool operator==(const Tensor&, const Tensor&) = default;
};

}  // namespace cnnlens::nn
