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

#include "cnnlens/nn/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "cnnlens/error.hpp"

namespace cnnlens::nn {

void init_weights(Network& net, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    Shape shape = net.input_shape();
    for (std::size_t i = 0; i < net.size(); ++i) {
        Layer& layer = net.layer(i);
        const Shape out = layer.output_shape(shape);
        auto params = layer.params();
        if (!params.empty()) {
            const std::size_t n_weights = params.size() - layer.bias_count();
            const std::size_t fan_in = n_weights / out.c;
            std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / static_cast<double>(fan_in)));
            for (std::size_t p = 0; p < params.size(); ++p) params[p] = p < n_weights ? dist(rng) : 0.0;
        }
        shape = out;
    }
}

TrainReport train_classifier(Network& net, std::span<const LabeledSample> samples, const TrainOptions& options) {
    if (samples.empty()) throw Error(ErrorCode::EmptyDataset, "no training samples");
    if (options.batch_size == 0) throw Error(ErrorCode::InvalidArgument, "batch size must be positive");
    std::mt19937_64 rng(options.seed);
    std::vector<std::size_t> order(samples.size());
    std::iota(order.begin(), order.end(), 0);

    ParamGrads velocity = net.zero_grads();
    TrainReport report;
    for (std::size_t epoch = 0; epoch < options.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        double epoch_loss = 0.0;
        for (std::size_t start = 0; start < order.size(); start += options.batch_size) {
            const std::size_t end = std::min(order.size(), start + options.batch_size);
            ParamGrads grads = net.zero_grads();
            for (std::size_t b = start; b < end; ++b) {
                const LabeledSample& s = samples[order[b]];
                const auto acts = net.forward_all(s.input);
                const auto probs = softmax(acts.back().data);
                epoch_loss += -std::log(std::max(probs[s.label], 1e-300));
                Tensor grad(acts.back().shape);
                for (std::size_t k = 0; k < probs.size(); ++k) grad.data[k] = probs[k] - (k == s.label ? 1.0 : 0.0);
                (void)net.backward(acts, grad, 0, &grads);
            }
            const double scale = 1.0 / static_cast<double>(end - start);
            for (std::size_t l = 0; l < net.size(); ++l) {
                auto params = net.layer(l).params();
                for (std::size_t p = 0; p < params.size(); ++p) {
                    const double g = grads[l][p] * scale + options.weight_decay * params[p];
                    velocity[l][p] = options.momentum * velocity[l][p] - options.learning_rate * g;
                    params[p] += velocity[l][p];
                }
            }
        }
        report.epoch_loss.push_back(epoch_loss / static_cast<double>(samples.size()));
    }

    std::size_t correct = 0;
    for (const auto& s : samples) {
        const auto logits = net.forward(s.input);
        const auto best = static_cast<std::size_t>(
            std::max_element(logits.data.begin(), logits.data.end()) - logits.data.begin());
        if (best == s.label) ++correct;
    }
    report.train_accuracy = static_cast<double>(correct) / static_cast<double>(samples.size());
    return report;
}

}  // namespace cnnlens::nn
