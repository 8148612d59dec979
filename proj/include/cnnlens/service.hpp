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

#include <atomic>
#include <condition_variable>
#include <deque>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "cnnlens/analytics.hpp"
#include "cnnlens/dataset.hpp"
#include "cnnlens/explain.hpp"
#include "cnnlens/registry.hpp"
#include "cnnlens/saliency.hpp"
#include "cnnlens/store.hpp"

namespace cnnlens {

inline constexpr std::size_t kMaxTaskModels = 13;

struct ServiceOptions {
    ExplainParams explain;
    ProjectionOptions projection;
    double default_threshold = kDefaultThreshold;
    std::size_t max_images_per_class = 8;
    std::size_t page_size = 20;
};

struct TaskSpec {
    std::vector<std::string> model_ids;
    std::vector<std::size_t> class_ids;
    Method method = Method::GradCam;
    Measure measure = Measure::L1;
    double threshold = kDefaultThreshold;
    std::optional<std::string> image_ref;
    /// Explained class; defaults to each image's ground truth.
    std::optional<std::size_t> target_class;
    std::size_t max_images_per_class = 8;
    ExplainParams params;

    [[nodiscard]] bool multi_model() const noexcept { return model_ids.size() > 1; }
    [[nodiscard]] nlohmann::json to_json() const;
};

enum class TaskStatus { Pending, Running, Done, Failed };

std::string_view to_string(TaskStatus status) noexcept;

struct TableRow {
    std::string model_id;
    std::string image_ref;
    std::size_t ground_truth_class = 0;
    std::size_t predicted_class = 0;
    std::size_t target_class = 0;
    double overall_accuracy = 0.0;
    std::optional<double> class_accuracy;
    double confidence = 0.0;
    std::string attention_ref;
    std::string overlay_ref;
    std::string contour_ref;
    std::optional<std::string> cih_ref;
};

struct ResultQuery {
    std::string sort_by;  // empty keeps computation order
    bool descending = true;
    std::string filter;
    std::size_t page = 1;
    std::size_t page_size = 0;  // 0 means the service default
};

/// In-process implementation of the comparison API. Thread-safe.
///
/// Overview queries read precomputed artifacts only. Tasks run on a
/// background worker and publish rows as soon as each one is complete.
class ComparisonService {
  public:
    ComparisonService(DatasetManifest manifest, ClassHierarchy hierarchy, std::vector<ModelRecord> models,
                      ArtifactStore& store, ServiceOptions options = {});
    ~ComparisonService();

    ComparisonService(const ComparisonService&) = delete;
    ComparisonService& operator=(const ComparisonService&) = delete;

    nlohmann::json list_models(std::size_t page = 1, std::size_t page_size = 0) const;
    nlohmann::json get_projection(const std::string& model_id) const;
    nlohmann::json get_class_stats(std::size_t k = 6) const;

    /// Throws ValidationError, UnknownMethod, NotPrecomputed.
    std::string create_task(const nlohmann::json& spec);
    nlohmann::json get_task(const std::string& task_id) const;
    nlohmann::json get_task_results(const std::string& task_id, const ResultQuery& query = {}) const;
    nlohmann::json get_similarity(const std::string& task_id, std::optional<std::string> measure = std::nullopt);
    Bytes get_similarity_png(const std::string& task_id, std::optional<std::string> measure = std::nullopt);
    nlohmann::json set_threshold(const std::string& task_id, double threshold);

    /// Stored bytes and content type. Throws InvalidArgument, NotFound.
    std::pair<Bytes, std::string> get_artifact(const std::string& serialized_key) const;

    /// Blocks until the task is done or failed; false on timeout.
    bool wait(const std::string& task_id, std::chrono::milliseconds timeout) const;

    /// Number of attention maps actually computed by task work.
    [[nodiscard]] std::size_t attention_producer_calls() const noexcept { return attention_calls_.load(); }

    [[nodiscard]] const DatasetManifest& manifest() const noexcept { return manifest_; }
    [[nodiscard]] const ClassHierarchy& hierarchy() const noexcept { return hierarchy_; }

  private:
    struct Task;
    struct Confidence {
        Matrix values;
        std::vector<std::size_t> dataset_rows;
    };

    const ModelRecord& model(const std::string& model_id) const;
    const AccuracyReport& accuracy(const std::string& model_id) const;
    const Confidence& confidence(const std::string& model_id) const;
    std::shared_ptr<Task> task(const std::string& task_id) const;

    TaskSpec parse_spec(const nlohmann::json& j) const;
    void run(Task& task);
    TableRow compute_row(const Task& task, const std::string& model_id, std::size_t image_index, double threshold);
    void render(TableRow& row, const ArtifactKey& attention_key, const Matrix& attention, double threshold,
                bool with_cih) const;
    nlohmann::json row_json(const TableRow& row) const;
    SimilarityMatrix similarity(const std::string& task_id, Measure measure);

    void worker_loop(std::stop_token stop);

    DatasetManifest manifest_;
    ClassHierarchy hierarchy_;
    std::vector<ModelRecord> models_;
    ArtifactStore& store_;
    ServiceOptions options_;

    mutable std::mutex cache_mu_;
    mutable std::map<std::string, AccuracyReport> reports_;
    mutable std::map<std::string, std::shared_ptr<const Confidence>> confidences_;

    mutable std::mutex tasks_mu_;
    std::map<std::string, std::shared_ptr<Task>> tasks_;
    std::size_t next_task_ = 1;

    std::mutex queue_mu_;
    std::condition_variable_any queue_cv_;
    std::deque<std::shared_ptr<Task>> queue_;

    std::atomic<std::size_t> attention_calls_{0};
    std::jthread worker_;
};

}  // namespace cnnlens
