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

#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "cnnlens/nn/tensor.hpp"

namespace cnnlens::nn {

/// A differentiable layer. Layers are immutable during inference; training
/// mutates parameters through params().
class Layer {
  public:
    explicit Layer(std::string name) : name_(std::move(name)) {}
    virtual ~Layer() = default;

    [[nodiscard]] const std::string& name() const noexcept { return name_; }
    [[nodiscard]] virtual std::string_view type() const noexcept = 0;

    /// Throws ShapeMismatch when the input shape is not accepted.
    [[nodiscard]] virtual Shape output_shape(const Shape& in) const = 0;
    [[nodiscard]] virtual Tensor forward(const Tensor& in) const = 0;

    /// Gradient w.r.t. the input. When `param_grads` is non-empty the
    /// parameter gradients are accumulated into it (same layout as params()).
    [[nodiscard]] virtual Tensor backward(const Tensor& in, const Tensor& out, const Tensor& grad_out,
                                          std::span<double> param_grads) const = 0;

    [[nodiscard]] virtual std::span<double> params() noexcept { return {}; }
    [[nodiscard]] virtual std::span<const double> params() const noexcept { return {}; }
    /// Trailing entries of params() that are biases.
    [[nodiscard]] virtual std::size_t bias_count() const noexcept { return 0; }

    [[nodiscard]] virtual nlohmann::json to_json() const = 0;

  private:
    std::string name_;
};

class Conv2d final : public Layer {
  public:
    Conv2d(std::string name, std::size_t in_channels, std::size_t out_channels, std::size_t kernel,
           std::size_t padding, bool bias);

    std::string_view type() const noexcept override { return "conv2d"; }
    Shape output_shape(const Shape& in) const override;
    Tensor forward(const Tensor& in) const override;
    Tensor backward(const Tensor& in, const Tensor& out, const Tensor& grad_out,
                    std::span<double> param_grads) const override;
    std::span<double> params() noexcept override { return params_; }
    std::span<const double> params() const noexcept override { return params_; }
    nlohmann::json to_json() const override;

    /// weights[out][in][ky][kx]
    double& weight(std::size_t o, std::size_t i, std::size_t ky, std::size_t kx) noexcept {
        return params_[((o * in_ + i) * k_ + ky) * k_ + kx];
    }
    double& bias(std::size_t o) noexcept { return params_[out_ * in_ * k_ * k_ + o]; }
    [[nodiscard]] bool has_bias() const noexcept { return bias_; }
    std::size_t bias_count() const noexcept override { return bias_ ? out_ : 0; }

  private:
    double w(std::size_t o, std::size_t i, std::size_t ky, std::size_t kx) const noexcept {
        return params_[((o * in_ + i) * k_ + ky) * k_ + kx];
    }

    std::size_t in_, out_, k_, pad_;
    bool bias_;
    std::vector<double> params_;
};

class Dense final : public Layer {
  public:
    Dense(std::string name, std::size_t in_features, std::size_t out_features, bool bias);

    std::string_view type() const noexcept override { return "dense"; }
    Shape output_shape(const Shape& in) const override;
    Tensor forward(const Tensor& in) const override;
    Tensor backward(const Tensor& in, const Tensor& out, const Tensor& grad_out,
                    std::span<double> param_grads) const override;
    std::span<double> params() noexcept override { return params_; }
    std::span<const double> params() const noexcept override { return params_; }
    nlohmann::json to_json() const override;

    double& weight(std::size_t o, std::size_t i) noexcept { return params_[o * in_ + i]; }
    double& bias(std::size_t o) noexcept { return params_[out_ * in_ + o]; }
    std::size_t bias_count() const noexcept override { return bias_ ? out_ : 0; }

  private:
    std::size_t in_, out_;
    bool bias_;
    std::vector<double> params_;
};

class Relu final : public Layer {
  public:
    using Layer::Layer;
    std::string_view type() const noexcept override { return "relu"; }
    Shape output_shape(const Shape& in) const override { return in; }
    Tensor forward(const Tensor& in) const override;
    Tensor backward(const Tensor& in, const Tensor& out, const Tensor& grad_out,
                    std::span<double> param_grads) const override;
    nlohmann::json to_json() const override;
};

class MaxPool2d final : public Layer {
  public:
    MaxPool2d(std::string name, std::size_t kernel) : Layer(std::move(name)), k_(kernel) {}
    std::string_view type() const noexcept override { return "maxpool2d"; }
    Shape output_shape(const Shape& in) const override;
    Tensor forward(const Tensor& in) const override;
    Tensor backward(const Tensor& in, const Tensor& out, const Tensor& grad_out,
                    std::span<double> param_grads) const override;
    nlohmann::json to_json() const override;

  private:
    std::size_t k_;
};

class GlobalAvgPool final : public Layer {
  public:
    using Layer::Layer;
    std::string_view type() const noexcept override { return "global_avg_pool"; }
    Shape output_shape(const Shape& in) const override { return {in.c, 1, 1}; }
    Tensor forward(const Tensor& in) const override;
    Tensor backward(const Tensor& in, const Tensor& out, const Tensor& grad_out,
                    std::span<double> param_grads) const override;
    nlohmann::json to_json() const override;
};

class Flatten final : public Layer {
  public:
    using Layer::Layer;
    std::string_view type() const noexcept override { return "flatten"; }
    Shape output_shape(const Shape& in) const override { return {in.numel(), 1, 1}; }
    Tensor forward(const Tensor& in) const override;
    Tensor backward(const Tensor& in, const Tensor& out, const Tensor& grad_out,
                    std::span<double> param_grads) const override;
    nlohmann::json to_json() const override;
};

/// Throws InvalidArgument for unknown layer types or malformed parameters.
std::unique_ptr<Layer> layer_from_json(const nlohmann::json& j);

}  // namespace cnnlens::nn
