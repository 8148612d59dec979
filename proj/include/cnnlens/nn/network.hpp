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

#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "cnnlens/nn/layers.hpp"

namespace cnnlens::nn {

/// Per-layer parameter gradients, laid out like Layer::params().
using ParamGrads = std::vector<std::vector<double>>;

/// Sequential feed-forward classifier producing logits.
///
/// Activation indexing: for an input x, forward_all returns acts with
/// acts[0] = x and acts[i + 1] = layers[i](acts[i]). A layer's output is
/// therefore acts[layer_index + 1].
class Network {
  public:
    Network(Shape input_shape, std::vector<std::unique_ptr<Layer>> layers);

    Network(Network&&) noexcept = default;
    Network& operator=(Network&&) noexcept = default;
    Network(const Network&) = delete;
    Network& operator=(const Network&) = delete;

    [[nodiscard]] const Shape& input_shape() const noexcept { return input_shape_; }
    [[nodiscard]] std::size_t num_classes() const noexcept { return output_shape_.numel(); }
    [[nodiscard]] std::size_t size() const noexcept { return layers_.size(); }
    [[nodiscard]] const Layer& layer(std::size_t i) const { return *layers_.at(i); }
    [[nodiscard]] Layer& layer(std::size_t i) { return *layers_.at(i); }

    [[nodiscard]] std::optional<std::size_t> find_layer(std::string_view name) const noexcept;
    /// Output shape of layer i for the declared input shape.
    [[nodiscard]] Shape layer_output_shape(std::size_t i) const;

    [[nodiscard]] std::vector<Tensor> forward_all(const Tensor& input) const;
    [[nodiscard]] Tensor forward(const Tensor& input) const;

    /// Runs layers (layer_index, end) on the given output of layer_index.
    [[nodiscard]] Tensor forward_from(std::size_t layer_index, const Tensor& activation) const;

    /// Backpropagates grad_logits through the layers down to acts[boundary]
    /// and returns d(loss)/d(acts[boundary]). boundary 0 yields the input
    /// gradient. Parameter gradients are accumulated when `grads` is set.
    [[nodiscard]] Tensor backward(const std::vector<Tensor>& acts, const Tensor& grad_logits, std::size_t boundary,
                                  ParamGrads* grads = nullptr) const;

    [[nodiscard]] std::size_t param_count() const noexcept;
    [[nodiscard]] ParamGrads zero_grads() const;

    [[nodiscard]] nlohmann::json to_json() const;
    static Network from_json(const nlohmann::json& j);
    static Network load(const std::filesystem::path& path);
    void save(const std::filesystem::path& path) const;

  private:
    Shape input_shape_;
    Shape output_shape_;
    std::vector<std::unique_ptr<Layer>> layers_;
};

/// Softmax with the row maximum subtracted before exponentiation.
std::vector<double> softmax(std::span<const double> logits);

}  // namespace cnnlens::nn
