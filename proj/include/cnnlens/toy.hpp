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
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "cnnlens/image.hpp"
#include "cnnlens/nn/network.hpp"
#include "cnnlens/nn/train.hpp"

// Synthetic desk-scale workspace: a small shapes-and-colors dataset plus two
// tiny CNNs trained on it.

namespace cnnlens::toy {

struct ToyOptions {
    std::size_t per_class = 50;
    std::size_t image_size = 16;
    std::uint64_t seed = 1234;
    nn::TrainOptions train;
};

inline constexpr std::size_t kToyClasses = 10;

/// Leaf labels (index order) and the root of each.
const std::vector<std::string>& toy_labels();
const std::vector<std::size_t>& toy_roots();
const std::vector<std::string>& toy_root_labels();

RgbImage toy_image(std::size_t class_index, std::size_t size, std::mt19937_64& rng);

/// conv(3->8) relu pool conv(8->16)* relu gap dense. `*` marks the target layer "conv2".
nn::Network toy_model_a(std::size_t size);
/// conv(3->6) relu conv(6->12)* relu pool gap dense. Target layer "conv2".
nn::Network toy_model_b(std::size_t size);

struct ToyWorkspace {
    std::filesystem::path dataset_root;
    std::filesystem::path registry_path;
    std::filesystem::path hierarchy_path;
    std::vector<std::string> model_ids;
    std::vector<nn::TrainReport> reports;
    double train_seconds = 0.0;
};

/// Writes <dir>/dataset (class directories + hierarchy.json), trains both
/// models and writes <dir>/models/*.json and <dir>/registry.json.
ToyWorkspace make_toy_workspace(const std::filesystem::path& dir, const ToyOptions& options = {});

}  // namespace cnnlens::toy
