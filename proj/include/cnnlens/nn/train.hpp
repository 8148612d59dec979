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
#include <span>
#include <vector>

#include "cnnlens/nn/network.hpp"

namespace cnnlens::nn {

struct LabeledSample {
    Tensor input;
    std::size_t label = 0;
};

struct TrainOptions {
    std::size_t epochs = 12;
    std::size_t batch_size = 10;
    double learning_rate = 0.05;
    double momentum = 0.9;
    double weight_decay = 1e-4;
    std::uint64_t seed = 7;
};

struct TrainReport {
    std::vector<double> epoch_loss;
    double train_accuracy = 0.0;
};

/// He-normal initialization of conv/dense weights, zero biases.
void init_weights(Network& net, std::uint64_t seed);

/// Mini-batch SGD with momentum on softmax cross-entropy. Single-threaded and
/// deterministic for a fixed seed.
TrainReport train_classifier(Network& net, std::span<const LabeledSample> samples, const TrainOptions& options);

}  // namespace cnnlens::nn
