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
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "cnnlens/matrix.hpp"
#include "cnnlens/nn/tensor.hpp"
#include "cnnlens/registry.hpp"

// Class-discriminative saliency maps.
//
// All methods operate on the preprocessed input tensor of a loaded model and
// return an H x W map (the model input resolution) with values in [0, 1].
// Every function here is reentrant: models are read-only and all scratch
// state is local, so concurrent calls on one model never interfere.

namespace cnnlens {

enum class Method { GradCam, Bbmp, GradCamPlusPlus, SmoothGradCamPlusPlus, ScoreCam };

inline constexpr Method kAllMethods[] = {Method::GradCam, Method::Bbmp, Method::GradCamPlusPlus,
                                         Method::SmoothGradCamPlusPlus, Method::ScoreCam};

std::string_view to_string(Method method) noexcept;
/// Throws UnknownMethod.
Method parse_method(std::string_view name);

struct SmoothOptions {
    std::size_t n_samples = 25;
    /// Absolute noise level. When unset: sigma_fraction * (input max - min).
    std::optional<double> sigma;
    double sigma_fraction = 0.1;
    std::uint64_t seed = 0;
};

enum class Perturbation { Blur, Constant };

struct BbmpOptions {
    std::size_t iterations = 150;
    double lr = 0.1;
    double l1_coeff = 0.01;
    double tv_coeff = 0.2;
    double tv_beta = 3.0;
    std::size_t mask_height = 28;
    std::size_t mask_width = 28;
    Perturbation perturbation = Perturbation::Blur;
    double blur_sigma = 5.0;
    std::size_t blur_radius = 5;
    /// Fill value (in preprocessed units) for Perturbation::Constant.
    double constant_value = 0.0;
};

struct ExplainParams {
    SmoothOptions smooth;
    BbmpOptions bbmp;

    /// Hyperparameters relevant to `method`, for digests.
    [[nodiscard]] nlohmann::json method_json(Method method) const;
    static ExplainParams from_json(const nlohmann::json& j);
};

struct AttentionMatrix {
    Matrix values;
    std::string image_ref;
    std::string model_id;
    Method method = Method::GradCam;
    std::size_t target_class = 0;
    std::string params_digest;
    /// Raw map had no positive spread; values are all zero.
    bool degenerate = false;
};

struct ExplanationResult {
    AttentionMatrix attention;
    std::size_t predicted_class = 0;
    double predicted_confidence = 0.0;
    std::size_t ground_truth_class = 0;
    bool correct = false;
    double wall_time_ms = 0.0;
};

// ---------------------------------------------------------------------------
// Building blocks (exposed for verification)

/// Activation of the target layer and d(logit[target]) / d(activation).
struct TargetGradients {
    nn::Tensor activation;
    nn::Tensor gradient;
    double score = 0.0;
    std::vector<double> probabilities;
};

TargetGradients target_gradients(const ModelRecord& model, const nn::Tensor& input, std::size_t target_class);

/// Spatially averaged gradients, one weight per channel.
std::vector<double> grad_cam_weights(const TargetGradients& tg);

/// First/second/third derivatives of exp(score - reference_score) with respect
/// to each activation. The network is piecewise linear past the target layer,
/// so these are exp(.) * g, exp(.) * g^2, exp(.) * g^3.
struct HigherOrderTerms {
    nn::Tensor first;
    nn::Tensor second;
    nn::Tensor third;
};

HigherOrderTerms higher_order_terms(const TargetGradients& tg, double reference_score);

/// Per-channel Grad-CAM++ weights from (possibly averaged) derivative terms.
/// The coefficient denominator is offset by 1e-8 and coefficients whose
/// offset denominator is below 1e-7 in magnitude are zeroed.
std::vector<double> grad_cam_pp_weights(const nn::Tensor& activation, const HigherOrderTerms& terms);

struct NormalizedMap {
    Matrix values;
    bool degenerate = false;
};

/// (raw - min) / (max - min); all-zero and degenerate when max <= min.
NormalizedMap normalize_map(Matrix raw);

/// ReLU(sum_k weights[k] * A_k), bilinearly upsampled to rows x cols, normalized.
NormalizedMap weighted_cam(const nn::Tensor& activation, std::span<const double> weights, std::size_t rows,
                           std::size_t cols);

/// Separable Gaussian blur of every channel with replicated borders.
nn::Tensor gaussian_blur(const nn::Tensor& input, double sigma, std::size_t radius);

struct BbmpTrace {
    Matrix mask;
    std::vector<double> losses;
};

/// Optimizes the preservation mask (1 = keep, 0 = replace by perturbation).
/// Throws NonFiniteLoss carrying the iteration index.
BbmpTrace bbmp_optimize(const ModelRecord& model, const nn::Tensor& input, std::size_t target_class,
                        const BbmpOptions& options);

/// Per-channel Score-CAM weights: target softmax score of the input masked
/// by each channel's normalized, upsampled activation.
std::vector<double> score_cam_weights(const ModelRecord& model, const nn::Tensor& input, std::size_t target_class);

// ---------------------------------------------------------------------------
// Methods

NormalizedMap grad_cam(const ModelRecord& model, const nn::Tensor& input, std::size_t target_class);
NormalizedMap grad_cam_pp(const ModelRecord& model, const nn::Tensor& input, std::size_t target_class);
NormalizedMap smooth_grad_cam_pp(const ModelRecord& model, const nn::Tensor& input, std::size_t target_class,
                                 const SmoothOptions& options = {});
NormalizedMap score_cam(const ModelRecord& model, const nn::Tensor& input, std::size_t target_class);
NormalizedMap bbmp(const ModelRecord& model, const nn::Tensor& input, std::size_t target_class,
                   const BbmpOptions& options = {});

NormalizedMap run_method(Method method, const ModelRecord& model, const nn::Tensor& input, std::size_t target_class,
                         const ExplainParams& params);

struct ExplainRequest {
    Method method = Method::GradCam;
    std::size_t target_class = 0;
    /// Defaults to target_class.
    std::optional<std::size_t> ground_truth_class;
    std::string image_ref;
    ExplainParams params;
};

/// Preprocesses, predicts once, dispatches to the requested method.
ExplanationResult explain(const ModelRecord& model, const RgbImage& image, const ExplainRequest& request);

}  // namespace cnnlens
