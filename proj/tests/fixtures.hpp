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
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "cnnlens/error.hpp"
#include "cnnlens/image.hpp"
#include "cnnlens/matrix.hpp"
#include "cnnlens/nn/network.hpp"
#include "cnnlens/registry.hpp"

namespace fixture {

using cnnlens::Matrix;
using cnnlens::ModelRecord;
using cnnlens::RgbImage;
namespace nn = cnnlens::nn;

/// Code of the cnnlens::Error thrown by f, or nullopt when f returns normally.
template <class F>
std::optional<cnnlens::ErrorCode> error_code_of(F&& f) {
    try {
        f();
    } catch (const cnnlens::Error& e) {
        return e.code();
    }
    return std::nullopt;
}

/// Scratch directory removed on destruction.
class TempDir {
  public:
    explicit TempDir(const std::string& tag);
    ~TempDir();
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
    [[nodiscard]] const std::filesystem::path& path() const noexcept { return path_; }
    std::filesystem::path operator/(const std::string& rel) const { return path_ / rel; }

  private:
    std::filesystem::path path_;
};

/// conv1(3->4, 3x3, pad 1) relu conv2(4->3, 3x3, pad 1) relu gap dense(3->classes).
/// Weights follow a fixed closed-form pattern; target layer is "conv2".
ModelRecord two_conv_model(std::size_t classes = 3, std::size_t size = 16);

/// Wraps a network into a loaded record with the given target layer.
ModelRecord make_record(nn::Network net, const std::string& target_layer, const std::string& id = "fixture");

/// Uniform [-1, 1) tensor.
nn::Tensor random_tensor(nn::Shape shape, std::uint64_t seed);
/// Uniform [0, 1) matrix.
Matrix random_matrix(std::size_t rows, std::size_t cols, std::mt19937_64& rng);
RgbImage random_image(std::size_t width, std::size_t height, std::mt19937_64& rng);
/// Random row-stochastic M x N matrix.
Matrix random_confidence(std::size_t m, std::size_t n, std::mt19937_64& rng);

/// Central difference of f around 0 with step h.
double central_difference(const std::function<double(double)>& f, double h = 1e-3);

/// Logit of `target` as a function of the target-layer activation.
double logit_from_activation(const ModelRecord& model, const nn::Tensor& activation, std::size_t target);

/// Central-difference gradient of the target logit w.r.t. every activation entry.
nn::Tensor fd_activation_gradient(const ModelRecord& model, const nn::Tensor& activation, std::size_t target,
                                  double h = 1e-3);

/// (m - min) / (max - min), or all zeros when max <= min.
Matrix normalize_oracle(const Matrix& m);

/// normalize(bilinear(ReLU(sum_k w_k A_k))) computed with the test-local helpers.
Matrix cam_oracle(const nn::Tensor& activation, const std::vector<double>& weights, std::size_t rows,
                  std::size_t cols);

/// Literal transcription of the class distance construction: accumulate
/// (1 - confidence) into distMat and counts into distMatCount per pair,
/// divide, then average with the transpose.
Matrix distance_oracle(std::span<const std::size_t> img_classes, const Matrix& conf, std::size_t n);

/// Independent straight-line similarity definitions.
double l1_oracle(const Matrix& a, const Matrix& b);
double mse_oracle(const Matrix& a, const Matrix& b);
double ssim_oracle(const Matrix& a, const Matrix& b);
double hash_oracle(const Matrix& a, const Matrix& b);

/// Test-local half-pixel bilinear resize, written independently of the library.
Matrix bilinear_oracle(const Matrix& src, std::size_t rows, std::size_t cols);

/// Softmax by direct exponentiation.
std::vector<double> softmax_oracle(std::span<const double> logits);

std::string read_text(const std::filesystem::path& path);

/// Writes `counts[c]` random PNGs into `<root>/<c>_class<c>/`.
void write_dataset(const std::filesystem::path& root, const std::vector<std::size_t>& counts, std::size_t size,
                   std::uint64_t seed);

/// Saves `net` and writes a one-entry-per-network registry manifest.
void write_registry(const std::filesystem::path& path,
                    const std::vector<std::pair<std::string, const nn::Network*>>& models,
                    const std::string& target_layer);

}  // namespace fixture
