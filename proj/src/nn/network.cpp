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

#include "cnnlens/nn/network.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "cnnlens/error.hpp"

namespace cnnlens::nn {

Network::Network(Shape input_shape, std::vector<std::unique_ptr<Layer>> layers)
    : input_shape_(input_shape), output_shape_(input_shape), layers_(std::move(layers)) {
    if (layers_.empty()) throw Error(ErrorCode::InvalidArgument, "network has no layers");
    for (const auto& layer : layers_) output_shape_ = layer->output_shape(output_shape_);
    if (output_shape_.h != 1 || output_shape_.w != 1)
        throw Error(ErrorCode::ShapeMismatch, "network output is not a vector");
}

std::optional<std::size_t> Network::find_layer(std::string_view name) const noexcept {
    for (std::size_t i = 0; i < layers_.size(); ++i)
        if (layers_[i]->name() == name) return i;
    return std::nullopt;
}

Shape Network::layer_output_shape(std::size_t i) const {
    Shape s = input_shape_;
    for (std::size_t k = 0; k <= i && k < layers_.size(); ++k) s = layers_[k]->output_shape(s);
    return s;
}

std::vector<Tensor> Network::forward_all(const Tensor& input) const {
    if (input.shape != input_shape_) throw Error(ErrorCode::ShapeMismatch, "input shape mismatch");
    std::vector<Tensor> acts;
    acts.reserve(layers_.size() + 1);
    acts.push_back(input);
    for (const auto& layer : layers_) acts.push_back(layer->forward(acts.back()));
    return acts;
}

Tensor Network::forward(const Tensor& input) const {
    if (input.shape != input_shape_) throw Error(ErrorCode::ShapeMismatch, "input shape mismatch");
    Tensor x = input;
    for (const auto& layer : layers_) x = layer->forward(x);
    return x;
}

Tensor Network::forward_from(std::size_t layer_index, const Tensor& activation) const {
    Tensor x = activation;
    for (std::size_t i = layer_index + 1; i < layers_.size(); ++i) x = layers_[i]->forward(x);
    return x;
}

Tensor Network::backward(const std::vector<Tensor>& acts, const Tensor& grad_logits, std::size_t boundary,
                         ParamGrads* grads) const {
    if (acts.size() != layers_.size() + 1) throw Error(ErrorCode::ShapeMismatch, "activation list length mismatch");
    if (boundary > layers_.size()) throw Error(ErrorCode::InvalidArgument, "backward boundary out of range");
    Tensor g = grad_logits;
    for (std::size_t i = layers_.size(); i-- > boundary;) {
        std::span<double> pg;
        if (grads) pg = (*grads)[i];
        g = layers_[i]->backward(acts[i], acts[i + 1], g, pg);
    }
    return g;
}

std::size_t Network::param_count() const noexcept {
    std::size_t n = 0;
    for (const auto& layer : layers_) n += std::as_const(*layer).params().size();
    return n;
}

ParamGrads Network::zero_grads() const {
    ParamGrads grads;
    grads.reserve(layers_.size());
    for (const auto& layer : layers_) grads.emplace_back(std::as_const(*layer).params().size(), 0.0);
    return grads;
}

nlohmann::json Network::to_json() const {
    nlohmann::json layers = nlohmann::json::array();
    for (const auto& layer : layers_) layers.push_back(layer->to_json());
    return {{"format", "cnnlens-net/1"},
            {"input", {input_shape_.c, input_shape_.h, input_shape_.w}},
            {"layers", std::move(layers)}};
}

Network Network::from_json(const nlohmann::json& j) {
    try {
        const auto input = j.at("input").get<std::vector<std::size_t>>();
        if (input.size() != 3) throw Error(ErrorCode::InvalidArgument, "network input must be [c, h, w]");
        std::vector<std::unique_ptr<Layer>> layers;
        for (const auto& lj : j.at("layers")) layers.push_back(layer_from_json(lj));
        return Network({input[0], input[1], input[2]}, std::move(layers));
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::InvalidArgument, "malformed network description", e.what());
    }
}

Network Network::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::MissingFile, "cannot open weights", path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::InvalidArgument, "weights file is not valid JSON", path.string());
    }
    return from_json(j);
}

void Network::save(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoFailure, "cannot write weights", path.string());
    out << to_json().dump();
}

std::vector<double> softmax(std::span<const double> logits) {
    std::vector<double> out(logits.begin(), logits.end());
    if (out.empty()) return out;
    const double top = *std::max_element(out.begin(), out.end());
    double sum = 0.0;
    for (double& v : out) {
        v = std::exp(v - top);
        sum += v;
    }
    for (double& v : out) v /= sum;
    return out;
}

}  // namespace cnnlens::nn
