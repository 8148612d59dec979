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

#include <iosfwd>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cnnlens/analytics.hpp"
#include "cnnlens/dataset.hpp"
#include "cnnlens/explain.hpp"
#include "cnnlens/registry.hpp"
#include "cnnlens/saliency.hpp"
#include "cnnlens/store.hpp"

namespace cnnlens {

// ---------------------------------------------------------------------------
// Artifact keys shared by the offline pipeline and the service.

namespace keys {

ArtifactKey confidence(const std::string& model_id, const std::string& dataset_digest);
ArtifactKey distance(const std::string& model_id, const std::string& dataset_digest);
ArtifactKey projection(const std::string& model_id, const std::string& dataset_digest,
                       const ProjectionOptions& options);
ArtifactKey accuracy(const std::string& model_id, const std::string& dataset_digest, const ClassHierarchy& hierarchy);

/// Digest of the method hyperparameters plus the explained class.
std::string attention_params(Method method, const ExplainParams& params, std::size_t target_class);

ArtifactKey attention(const std::string& model_id, const std::string& dataset_digest, Method method,
                      const std::string& attention_params, const std::string& image_ref);

/// Threshold-dependent renderings derived from an attention artifact.
ArtifactKey overlay(const ArtifactKey& attention, double threshold);
ArtifactKey contour(const ArtifactKey& attention, double threshold);
ArtifactKey cih(const ArtifactKey& attention, double threshold);

}  // namespace keys

// ---------------------------------------------------------------------------
// Producers

/// Dataset indices of the stored confidence rows. Identity when every image
/// was predicted; otherwise the decodable images in dataset order.
std::vector<std::size_t> confidence_rows(const DatasetManifest& manifest, std::size_t stored_rows);

/// Encoded ATTN matrix for `image_ref` at the model's input resolution.
Bytes produce_attention(const ModelRecord& model, const RgbImage& image, Method method, std::size_t target_class,
                        const ExplainParams& params);

/// PNG overlay at `threshold` with the default contour levels drawn.
Bytes produce_overlay(const RgbImage& image, const Matrix& attention, double threshold);
/// ContourSet JSON at the default levels.
Bytes produce_contour(const Matrix& attention, double threshold);
/// Histogram JSON of the image pixels whose attention is >= threshold.
Bytes produce_cih(const RgbImage& image, const Matrix& attention, double threshold);

/// Attention resampled to the image's own resolution.
Matrix attention_at_image_size(const Matrix& attention, const RgbImage& image);

Bytes to_bytes(const nlohmann::json& j);
nlohmann::json json_from_bytes(const Bytes& bytes);

// ---------------------------------------------------------------------------
// Offline precompute

struct PrecomputeOptions {
    /// Empty means every registered model.
    std::vector<std::string> models;
    std::size_t jobs = 1;
    ProjectionOptions projection;
    ExplainParams explain;
    /// Sample for the per-method examples; empty means the first image.
    std::string sample_image;
    double threshold = kDefaultThreshold;
    bool examples = true;
    /// Receives one `key=... status=...` line per artifact.
    std::ostream* progress = nullptr;
};

struct ArtifactOutcome {
    std::string key;
    std::string status;  // computed | cached | failed
    double ms = 0.0;
};

struct ModelOutcome {
    std::string model_id;
    bool ok = true;
    std::string error;
    std::vector<ArtifactOutcome> artifacts;
    std::vector<FailedImage> failed_images;
};

struct PrecomputeSummary {
    std::string dataset_digest;
    std::vector<ModelOutcome> models;
    double total_ms = 0.0;

    [[nodiscard]] std::size_t producer_calls() const;
    /// 0 all ok, 1 partial failure, 2 every model failed.
    [[nodiscard]] int exit_code() const;
    [[nodiscard]] nlohmann::json to_json() const;
};

/// Throws UnknownModel when the filter names an unregistered model.
PrecomputeSummary precompute(const DatasetManifest& manifest, const std::vector<ModelRecord>& registry,
                             const ClassHierarchy& hierarchy, ArtifactStore& store,
                             const PrecomputeOptions& options);

}  // namespace cnnlens
