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

#include "cnnlens/toy.hpp"

#include <algorithm>
#include <chrono>
#include <array>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <nlohmann/json.hpp>

#include "cnnlens/error.hpp"
#include "cnnlens/nn/layers.hpp"
#include "cnnlens/registry.hpp"

namespace cnnlens::toy {

namespace fs = std::filesystem;

namespace {

enum class Shape { Square, Circle, HBar, VBar, Cross };

struct ClassSpec {
    const char* label;
    Shape shape;
    std::array<int, 3> color;
    std::size_t root;
};

// Roots: 0 squares, 1 circles, 2 bars, 3 crosses.
constexpr ClassSpec kClasses[kToyClasses] = {
    {"red-square", Shape::Square, {220, 40, 40}, 0},   {"green-square", Shape::Square, {40, 200, 60}, 0},
    {"blue-square", Shape::Square, {50, 70, 220}, 0},  {"red-circle", Shape::Circle, {220, 40, 40}, 1},
    {"green-circle", Shape::Circle, {40, 200, 60}, 1}, {"yellow-circle", Shape::Circle, {230, 210, 40}, 1},
    {"red-hbar", Shape::HBar, {220, 40, 40}, 2},       {"blue-vbar", Shape::VBar, {50, 70, 220}, 2},
    {"yellow-cross", Shape::Cross, {230, 210, 40}, 3}, {"blue-cross", Shape::Cross, {50, 70, 220}, 3},
};

bool covers(Shape shape, double dy, double dx, double r) {
    switch (shape) {
        case Shape::Square: return std::abs(dy) <= r && std::abs(dx) <= r;
        case Shape::Circle: return dy * dy + dx * dx <= r * r;
        case Shape::HBar: return std::abs(dy) <= r * 0.4 && std::abs(dx) <= r * 1.4;
        case Shape::VBar: return std::abs(dx) <= r * 0.4 && std::abs(dy) <= r * 1.4;
        case Shape::Cross:
            return (std::abs(dy) <= r * 0.3 && std::abs(dx) <= r) || (std::abs(dx) <= r * 0.3 && std::abs(dy) <= r);
    }
    return false;
}

std::uint8_t clamp_byte(double v) { return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L)); }

constexpr std::array<double, 3> kMean{0.5, 0.5, 0.5};
constexpr std::array<double, 3> kStd{0.25, 0.25, 0.25};

nn::Tensor to_tensor(const RgbImage& image) {
    nn::Tensor t(nn::Shape{3, image.height, image.width});
    for (std::size_t c = 0; c < 3; ++c)
        for (std::size_t y = 0; y < image.height; ++y)
            for (std::size_t x = 0; x < image.width; ++x)
                t.at(c, y, x) = (image.at(y, x, c) / 255.0 - kMean[c]) / kStd[c];
    return t;
}

template <class L, class... Args>
std::unique_ptr<nn::Layer> make(Args&&... args) {
    return std::make_unique<L>(std::forward<Args>(args)...);
}

void write_json(const fs::path& path, const nlohmann::json& j) {
    std::ofstream out(path);
    if (!out) throw Error(ErrorCode::IoFailure, "cannot write file", path.string());
    out << j.dump(2) << '\n';
}

}  // namespace

const std::vector<std::string>& toy_labels() {
    static const std::vector<std::string> labels = [] {
        std::vector<std::string> out;
        for (const auto& c : kClasses) out.emplace_back(c.label);
        return out;
    }();
    return labels;
}

const std::vector<std::size_t>& toy_roots() {
    static const std::vector<std::size_t> roots = [] {
        std::vector<std::size_t> out;
        for (const auto& c : kClasses) out.push_back(c.root);
        return out;
    }();
    return roots;
}

const std::vector<std::string>& toy_root_labels() {
    static const std::vector<std::string> labels{"squares", "circles", "bars", "crosses"};
    return labels;
}

RgbImage toy_image(std::size_t class_index, std::size_t size, std::mt19937_64& rng) {
    if (class_index >= kToyClasses) throw Error(ErrorCode::InvalidArgument, "toy class out of range");
    const ClassSpec& spec = kClasses[class_index];
    const double s = static_cast<double>(size);
    std::uniform_real_distribution<double> radius(0.18 * s, 0.28 * s);
    std::normal_distribution<double> noise(0.0, 18.0);
    std::uniform_int_distribution<int> background(60, 140);
    const double r = radius(rng);
    std::uniform_real_distribution<double> center(r + 0.5, s - r - 0.5);
    const double cy = center(rng);
    const double cx = center(rng);
    const int bg = background(rng);

    RgbImage img(size, size);
    for (std::size_t y = 0; y < size; ++y)
        for (std::size_t x = 0; x < size; ++x) {
            const bool inside = covers(spec.shape, static_cast<double>(y) + 0.5 - cy, static_cast<double>(x) + 0.5 - cx, r);
            for (std::size_t c = 0; c < 3; ++c)
                img.at(y, x, c) = clamp_byte((inside ? spec.color[c] : bg) + noise(rng));
        }
    return img;
}

nn::Network toy_model_a(std::size_t size) {
    std::vector<std::unique_ptr<nn::Layer>> layers;
    layers.push_back(make<nn::Conv2d>("conv1", 3, 8, 3, 1, true));
    layers.push_back(make<nn::Relu>("relu1"));
    layers.push_back(make<nn::MaxPool2d>("pool1", 2));
    layers.push_back(make<nn::Conv2d>("conv2", 8, 16, 3, 1, true));
    layers.push_back(make<nn::Relu>("relu2"));
    layers.push_back(make<nn::GlobalAvgPool>("gap"));
    layers.push_back(make<nn::Dense>("fc", 16, kToyClasses, true));
    return nn::Network(nn::Shape{3, size, size}, std::move(layers));
}

nn::Network toy_model_b(std::size_t size) {
    std::vector<std::unique_ptr<nn::Layer>> layers;
    layers.push_back(make<nn::Conv2d>("conv1", 3, 6, 3, 1, true));
    layers.push_back(make<nn::Relu>("relu1"));
    layers.push_back(make<nn::Conv2d>("conv2", 6, 12, 3, 1, true));
    layers.push_back(make<nn::Relu>("relu2"));
    layers.push_back(make<nn::MaxPool2d>("pool", 2));
    layers.push_back(make<nn::GlobalAvgPool>("gap"));
    layers.push_back(make<nn::Dense>("fc", 12, kToyClasses, true));
    return nn::Network(nn::Shape{3, size, size}, std::move(layers));
}

ToyWorkspace make_toy_workspace(const fs::path& dir, const ToyOptions& options) {
    ToyWorkspace ws;
    ws.dataset_root = dir / "dataset";
    ws.registry_path = dir / "registry.json";
    ws.hierarchy_path = ws.dataset_root / "hierarchy.json";
    fs::create_directories(dir / "models");

    std::mt19937_64 rng(options.seed);
    std::vector<nn::LabeledSample> samples;
    for (std::size_t c = 0; c < kToyClasses; ++c) {
        const fs::path class_dir = ws.dataset_root / (std::to_string(c) + "_" + kClasses[c].label);
        fs::create_directories(class_dir);
        for (std::size_t i = 0; i < options.per_class; ++i) {
            const RgbImage img = toy_image(c, options.image_size, rng);
            std::ostringstream name;
            name << "img" << std::setw(3) << std::setfill('0') << i << ".png";
            write_image(class_dir / name.str(), img);
            samples.push_back({to_tensor(img), c});
        }
    }
    ClassHierarchy hierarchy{toy_labels(), toy_roots(), toy_root_labels()};
    write_json(ws.hierarchy_path, hierarchy.to_json());

    struct Spec {
        std::string id;
        std::string name;
        nn::Network (*build)(std::size_t);
    };
    const Spec specs[] = {{"toynet-a", "ToyNet A", &toy_model_a}, {"toynet-b", "ToyNet B", &toy_model_b}};

    const auto start = std::chrono::steady_clock::now();
    nlohmann::json registry = nlohmann::json::array();
    std::uint64_t seed = options.train.seed;
    for (const auto& spec : specs) {
        nn::Network net = spec.build(options.image_size);
        nn::init_weights(net, seed);
        nn::TrainOptions train = options.train;
        train.seed = seed++;
        ws.reports.push_back(nn::train_classifier(net, samples, train));
        net.save(dir / "models" / (spec.id + ".json"));
        ws.model_ids.push_back(spec.id);
        registry.push_back({{"model_id", spec.id},
                            {"display_name", spec.name},
                            {"weights_uri", "models/" + spec.id + ".json"},
                            {"target_layer", "conv2"},
                            {"input_size", {options.image_size, options.image_size}},
                            {"preprocess", {{"resize", "bilinear"}, {"mean", kMean}, {"std", kStd}}}});
    }
    ws.train_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    write_json(ws.registry_path, registry);
    return ws;
}

}  // namespace cnnlens::toy
