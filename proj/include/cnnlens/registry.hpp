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

#include <array>
#include <filesystem>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cnnlens/image.hpp"
#include "cnnlens/matrix.hpp"
#include "cnnlens/nn/network.hpp"

namespace cnnlens {

/// How a model expects its input: resize, then (x / 255 - mean) / std per channel.
struct Preprocess {
    Interpolation resize = Interpolation::Bilinear;
    std::array<double, 3> mean{0.0, 0.0, 0.0};
    std::array<double, 3> std{1.0, 1.0, 1.0};
};

struct ModelRecord {
    std::string model_id;
    std::string display_name;
    std::size_t param_count = 0;
    std::string target_layer;
    std::size_t input_height = 0;
    std::size_t input_width = 0;
    std::string weights_uri;
    Preprocess preprocess;

    /// Null until weights are loaded. Immutable once loaded, so shared freely
    /// between concurrent requests.
    std::shared_ptr<const nn::Network> network;
    /// Index of target_layer within network (valid when network is set).
    std::size_t target_index = 0;

    [[nodiscard]] bool loaded() const noexcept { return network != nullptr; }
    [[nodiscard]] const nn::Network& net() const;
};

/// Leaf classes grouped under root classes.
struct ClassHierarchy {
    std::vector<std::string> leaf_labels;
    std::vector<std::size_t> root_of;
    std::vector<std::string> root_labels;

    [[nodiscard]] std::size_t leaf_count() const noexcept { return leaf_labels.size(); }
    [[nodiscard]] std::size_t root_count() const noexcept { return root_labels.size(); }

    /// Throws InvalidArgument unless every leaf maps to exactly one valid root.
    void validate() const;

    /// Single root named "all" over the given leaves.
    static ClassHierarchy flat(std::vector<std::string> leaf_labels);
    static ClassHierarchy from_json(const nlohmann::json& j);
    [[nodiscard]] nlohmann::json to_json() const;
};

ClassHierarchy load_hierarchy(const std::filesystem::path& path);

/// Parses the manifest (a JSON array of model entries). Weights are resolved
/// relative to the manifest's directory and loaded when `load_weights` is set.
/// Throws MissingFile, DuplicateModelId, UnresolvableTargetLayer.
std::vector<ModelRecord> load_registry(const std::filesystem::path& manifest_path, bool load_weights = true);
std::vector<ModelRecord> parse_registry(const nlohmann::json& manifest, const std::filesystem::path& base_dir,
                                        bool load_weights = true);

/// Attaches an in-memory network, resolving target_layer and param_count.
void attach_network(ModelRecord& record, std::shared_ptr<const nn::Network> network);

/// Resize + normalize into the network's input tensor.
nn::Tensor preprocess(const ModelRecord& model, const RgbImage& image);

/// Softmax confidence vector (length N, sums to 1).
std::vector<double> predict(const ModelRecord& model, const RgbImage& image);
std::vector<double> predict_tensor(const ModelRecord& model, const nn::Tensor& input);

/// Decodes then predicts. Throws UndecodableImage.
std::vector<double> predict_bytes(const ModelRecord& model, std::span<const std::uint8_t> png);

struct FailedImage {
    std::size_t index = 0;
    std::string image_id;
    std::string reason;
};

/// Rows of `confidence` correspond to dataset items listed in `rows`
/// (ascending dataset order). Failed items are skipped and reported.
struct BatchPrediction {
    Matrix confidence;
    std::vector<std::size_t> rows;
    std::vector<FailedImage> failed;

    [[nodiscard]] bool complete() const noexcept { return failed.empty(); }
};

using ImageLoader = std::function<RgbImage(std::size_t index)>;

/// Predicts `count` items produced by `load`, sharding across `jobs` threads.
/// Output rows are always in dataset order. Throws EmptyDataset when count is 0.
BatchPrediction batch_predict(const ModelRecord& model, std::size_t count, const ImageLoader& load,
                              const std::function<std::string(std::size_t)>& image_id, std::size_t jobs = 1);
BatchPrediction batch_predict(const ModelRecord& model, std::span<const std::filesystem::path> images,
                              std::size_t jobs = 1);

/// Total trainable parameter count. Throws ModelNotLoaded.
std::size_t complexity(const ModelRecord& model);

/// Index of the largest entry; ties resolve to the lowest index.
std::size_t argmax(std::span<const double> values);

}  // namespace cnnlens
