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

#include "cnnlens/nn/layers.hpp"

#include <algorithm>
#include <limits>
#include <string>

#include "cnnlens/error.hpp"

namespace cnnlens::nn {

namespace {

void require_shape(bool ok, const Layer& layer, const char* what) {
    if (!ok) throw Error(ErrorCode::ShapeMismatch, std::string(what), layer.name());
}

std::vector<double> read_values(const nlohmann::json& j, const char* key, std::size_t expected) {
    if (!j.contains(key)) {
        if (expected == 0) return {};
        throw Error(ErrorCode::InvalidArgument, std::string("layer is missing '") + key + "'");
    }
    auto values = j.at(key).get<std::vector<double>>();
    if (values.size() != expected)
        throw Error(ErrorCode::InvalidArgument, std::string("wrong number of values in '") + key + "'",
                    std::to_string(values.size()) + " != " + std::to_string(expected));
    return values;
}

}  // namespace

// ---------------------------------------------------------------------------
// Conv2d

Conv2d::Conv2d(std::string name, std::size_t in_channels, std::size_t out_channels, std::size_t kernel,
               std::size_t padding, bool bias)
    : Layer(std::move(name)), in_(in_channels), out_(out_channels), k_(kernel), pad_(padding), bias_(bias),
      params_(out_channels * in_channels * kernel * kernel + (bias ? out_channels : 0), 0.0) {
    if (in_ == 0 || out_ == 0 || k_ == 0) throw Error(ErrorCode::InvalidArgument, "degenerate conv2d", this->name());
}

Shape Conv2d::output_shape(const Shape& in) const {
    require_shape(in.c == in_, *this, "conv2d input channel mismatch");
    require_shape(in.h + 2 * pad_ >= k_ && in.w + 2 * pad_ >= k_, *this, "conv2d input smaller than kernel");
    return {out_, in.h + 2 * pad_ - k_ + 1, in.w + 2 * pad_ - k_ + 1};
}

Tensor Conv2d::forward(const Tensor& in) const {
    Tensor out(output_shape(in.shape));
    const auto H = static_cast<std::ptrdiff_t>(in.shape.h);
    const auto W = static_cast<std::ptrdiff_t>(in.shape.w);
    const auto pad = static_cast<std::ptrdiff_t>(pad_);
    for (std::size_t o = 0; o < out_; ++o) {
        const double b = bias_ ? params_[out_ * in_ * k_ * k_ + o] : 0.0;
        for (std::size_t y = 0; y < out.shape.h; ++y)
            for (std::size_t x = 0; x < out.shape.w; ++x) out.at(o, y, x) = b;
        for (std::size_t i = 0; i < in_; ++i) {
            for (std::size_t ky = 0; ky < k_; ++ky) {
                for (std::size_t kx = 0; kx < k_; ++kx) {
                    const double wv = w(o, i, ky, kx);
                    if (wv == 0.0) continue;
                    for (std::size_t y = 0; y < out.shape.h; ++y) {
                        const std::ptrdiff_t sy = static_cast<std::ptrdiff_t>(y + ky) - pad;
                        if (sy < 0 || sy >= H) continue;
                        const double* src = &in.data[(i * in.shape.h + static_cast<std::size_t>(sy)) * in.shape.w];
                        double* dst = &out.data[(o * out.shape.h + y) * out.shape.w];
                        for (std::size_t x = 0; x < out.shape.w; ++x) {
                            const std::ptrdiff_t sx = static_cast<std::ptrdiff_t>(x + kx) - pad;
                            if (sx < 0 || sx >= W) continue;
                            dst[x] += wv * src[sx];
                        }
                    }
                }
            }
        }
    }
    return out;
}

Tensor Conv2d::backward(const Tensor& in, const Tensor& /*out*/, const Tensor& grad_out,
                        std::span<double> param_grads) const {
    Tensor grad_in(in.shape);
    const auto H = static_cast<std::ptrdiff_t>(in.shape.h);
    const auto W = static_cast<std::ptrdiff_t>(in.shape.w);
    const auto pad = static_cast<std::ptrdiff_t>(pad_);
    const bool want_params = !param_grads.empty();
    for (std::size_t o = 0; o < out_; ++o) {
        if (want_params && bias_) {
            double s = 0.0;
            for (std::size_t p = 0; p < grad_out.shape.h * grad_out.shape.w; ++p)
                s += grad_out.data[o * grad_out.shape.h * grad_out.shape.w + p];
            param_grads[out_ * in_ * k_ * k_ + o] += s;
        }
        for (std::size_t i = 0; i < in_; ++i) {
            for (std::size_t ky = 0; ky < k_; ++ky) {
                for (std::size_t kx = 0; kx < k_; ++kx) {
                    const double wv = w(o, i, ky, kx);
                    double wgrad = 0.0;
                    for (std::size_t y = 0; y < grad_out.shape.h; ++y) {
                        const std::ptrdiff_t sy = static_cast<std::ptrdiff_t>(y + ky) - pad;
                        if (sy < 0 || sy >= H) continue;
                        const std::size_t row = (i * in.shape.h + static_cast<std::size_t>(sy)) * in.shape.w;
                        const double* g = &grad_out.data[(o * grad_out.shape.h + y) * grad_out.shape.w];
                        for (std::size_t x = 0; x < grad_out.shape.w; ++x) {
                            const std::ptrdiff_t sx = static_cast<std::ptrdiff_t>(x + kx) - pad;
                            if (sx < 0 || sx >= W) continue;
                            grad_in.data[row + static_cast<std::size_t>(sx)] += wv * g[x];
                            wgrad += in.data[row + static_cast<std::size_t>(sx)] * g[x];
                        }
                    }
                    if (want_params) param_grads[((o * in_ + i) * k_ + ky) * k_ + kx] += wgrad;
                }
            }
        }
    }
    return grad_in;
}

nlohmann::json Conv2d::to_json() const {
    nlohmann::json j{{"type", "conv2d"}, {"name", name()}, {"in", in_}, {"out", out_},
                     {"kernel", k_},     {"pad", pad_},    {"bias", bias_}};
    j["weights"] = std::vector<double>(params_.begin(), params_.begin() + static_cast<std::ptrdiff_t>(out_ * in_ * k_ * k_));
    if (bias_)
        j["bias_values"] = std::vector<double>(params_.begin() + static_cast<std::ptrdiff_t>(out_ * in_ * k_ * k_), params_.end());
    return j;
}

// ---------------------------------------------------------------------------
// Dense

Dense::Dense(std::string name, std::size_t in_features, std::size_t out_features, bool bias)
    : Layer(std::move(name)), in_(in_features), out_(out_features), bias_(bias),
      params_(in_features * out_features + (bias ? out_features : 0), 0.0) {
    if (in_ == 0 || out_ == 0) throw Error(ErrorCode::InvalidArgument, "degenerate dense layer", this->name());
}

Shape Dense::output_shape(const Shape& in) const {
    require_shape(in.numel() == in_, *this, "dense input size mismatch");
    return {out_, 1, 1};
}

Tensor Dense::forward(const Tensor& in) const {
    Tensor out(output_shape(in.shape));
    for (std::size_t o = 0; o < out_; ++o) {
        double s = bias_ ? params_[out_ * in_ + o] : 0.0;
        const double* row = &params_[o * in_];
        for (std::size_t i = 0; i < in_; ++i) s += row[i] * in.data[i];
        out.data[o] = s;
    }
    return out;
}

Tensor Dense::backward(const Tensor& in, const Tensor& /*out*/, const Tensor& grad_out,
                       std::span<double> param_grads) const {
    Tensor grad_in(in.shape);
    const bool want_params = !param_grads.empty();
    for (std::size_t o = 0; o < out_; ++o) {
        const double g = grad_out.data[o];
        const double* row = &params_[o * in_];
        for (std::size_t i = 0; i < in_; ++i) grad_in.data[i] += row[i] * g;
        if (want_params) {
            for (std::size_t i = 0; i < in_; ++i) param_grads[o * in_ + i] += in.data[i] * g;
            if (bias_) param_grads[out_ * in_ + o] += g;
        }
    }
    return grad_in;
}

nlohmann::json Dense::to_json() const {
    nlohmann::json j{{"type", "dense"}, {"name", name()}, {"in", in_}, {"out", out_}, {"bias", bias_}};
    j["weights"] = std::vector<double>(params_.begin(), params_.begin() + static_cast<std::ptrdiff_t>(out_ * in_));
    if (bias_) j["bias_values"] = std::vector<double>(params_.begin() + static_cast<std::ptrdiff_t>(out_ * in_), params_.end());
    return j;
}

// ---------------------------------------------------------------------------
// Parameter-free layers

Tensor Relu::forward(const Tensor& in) const {
    Tensor out = in;
    for (double& v : out.data) v = v > 0.0 ? v : 0.0;
    return out;
}

Tensor Relu::backward(const Tensor& in, const Tensor&, const Tensor& grad_out, std::span<double>) const {
    Tensor grad_in(in.shape);
    for (std::size_t i = 0; i < in.data.size(); ++i) grad_in.data[i] = in.data[i] > 0.0 ? grad_out.data[i] : 0.0;
    return grad_in;
}

nlohmann::json Relu::to_json() const { return {{"type", "relu"}, {"name", name()}}; }

Shape MaxPool2d::output_shape(const Shape& in) const {
    require_shape(k_ > 0 && in.h >= k_ && in.w >= k_, *this, "maxpool input smaller than window");
    return {in.c, in.h / k_, in.w / k_};
}

Tensor MaxPool2d::forward(const Tensor& in) const {
    Tensor out(output_shape(in.shape));
    for (std::size_t c = 0; c < out.shape.c; ++c)
        for (std::size_t y = 0; y < out.shape.h; ++y)
            for (std::size_t x = 0; x < out.shape.w; ++x) {
                double best = -std::numeric_limits<double>::infinity();
                for (std::size_t dy = 0; dy < k_; ++dy)
                    for (std::size_t dx = 0; dx < k_; ++dx) best = std::max(best, in.at(c, y * k_ + dy, x * k_ + dx));
                out.at(c, y, x) = best;
            }
    return out;
}

Tensor MaxPool2d::backward(const Tensor& in, const Tensor& out, const Tensor& grad_out, std::span<double>) const {
    Tensor grad_in(in.shape);
    // Gradient routes to the first maximal element of each window.
    for (std::size_t c = 0; c < out.shape.c; ++c)
        for (std::size_t y = 0; y < out.shape.h; ++y)
            for (std::size_t x = 0; x < out.shape.w; ++x) {
                bool routed = false;
                for (std::size_t dy = 0; dy < k_ && !routed; ++dy)
                    for (std::size_t dx = 0; dx < k_ && !routed; ++dx)
                        if (in.at(c, y * k_ + dy, x * k_ + dx) == out.at(c, y, x)) {
                            grad_in.at(c, y * k_ + dy, x * k_ + dx) += grad_out.at(c, y, x);
                            routed = true;
                        }
            }
    return grad_in;
}

nlohmann::json MaxPool2d::to_json() const { return {{"type", "maxpool2d"}, {"name", name()}, {"kernel", k_}}; }

Tensor GlobalAvgPool::forward(const Tensor& in) const {
    Tensor out(output_shape(in.shape));
    const std::size_t plane = in.shape.h * in.shape.w;
    for (std::size_t c = 0; c < in.shape.c; ++c) {
        double s = 0.0;
        for (std::size_t p = 0; p < plane; ++p) s += in.data[c * plane + p];
        out.data[c] = s / static_cast<double>(plane);
    }
    return out;
}

Tensor GlobalAvgPool::backward(const Tensor& in, const Tensor&, const Tensor& grad_out, std::span<double>) const {
    Tensor grad_in(in.shape);
    const std::size_t plane = in.shape.h * in.shape.w;
    for (std::size_t c = 0; c < in.shape.c; ++c) {
        const double g = grad_out.data[c] / static_cast<double>(plane);
        for (std::size_t p = 0; p < plane; ++p) grad_in.data[c * plane + p] = g;
    }
    return grad_in;
}

nlohmann::json GlobalAvgPool::to_json() const { return {{"type", "global_avg_pool"}, {"name", name()}}; }

Tensor Flatten::forward(const Tensor& in) const {
    Tensor out = in;
    out.shape = output_shape(in.shape);
    return out;
}

Tensor Flatten::backward(const Tensor& in, const Tensor&, const Tensor& grad_out, std::span<double>) const {
    Tensor grad_in = grad_out;
    grad_in.shape = in.shape;
    return grad_in;
}

nlohmann::json Flatten::to_json() const { return {{"type", "flatten"}, {"name", name()}}; }

// ---------------------------------------------------------------------------

std::unique_ptr<Layer> layer_from_json(const nlohmann::json& j) {
    try {
        const auto type = j.at("type").get<std::string>();
        const auto name = j.value("name", type);
        if (type == "conv2d") {
            auto layer = std::make_unique<Conv2d>(name, j.at("in").get<std::size_t>(), j.at("out").get<std::size_t>(),
                                                  j.at("kernel").get<std::size_t>(), j.value("pad", std::size_t{0}),
                                                  j.value("bias", true));
            const std::size_t nw = j.at("in").get<std::size_t>() * j.at("out").get<std::size_t>() *
                                   j.at("kernel").get<std::size_t>() * j.at("kernel").get<std::size_t>();
            auto weights = read_values(j, "weights", nw);
            auto bias = read_values(j, "bias_values", layer->has_bias() ? j.at("out").get<std::size_t>() : 0);
            auto params = layer->params();
            std::copy(weights.begin(), weights.end(), params.begin());
            std::copy(bias.begin(), bias.end(), params.begin() + static_cast<std::ptrdiff_t>(nw));
            return layer;
        }
        if (type == "dense") {
            const auto in = j.at("in").get<std::size_t>();
            const auto out = j.at("out").get<std::size_t>();
            const bool bias = j.value("bias", true);
            auto layer = std::make_unique<Dense>(name, in, out, bias);
            auto weights = read_values(j, "weights", in * out);
            auto bias_values = read_values(j, "bias_values", bias ? out : 0);
            auto params = layer->params();
            std::copy(weights.begin(), weights.end(), params.begin());
            std::copy(bias_values.begin(), bias_values.end(), params.begin() + static_cast<std::ptrdiff_t>(in * out));
            return layer;
        }
        if (type == "relu") return std::make_unique<Relu>(name);
        if (type == "maxpool2d") return std::make_unique<MaxPool2d>(name, j.at("kernel").get<std::size_t>());
        if (type == "global_avg_pool") return std::make_unique<GlobalAvgPool>(name);
        if (type == "flatten") return std::make_unique<Flatten>(name);
        throw Error(ErrorCode::InvalidArgument, "unknown layer type", type);
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::InvalidArgument, "malformed layer description", e.what());
    }
}

}  // namespace cnnlens::nn
