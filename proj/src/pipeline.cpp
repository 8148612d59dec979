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

#include "cnnlens/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <mutex>
#include <ostream>
#include <thread>

#include "cnnlens/digest.hpp"
#include "cnnlens/error.hpp"
#include "cnnlens/log.hpp"
#include "cnnlens/render.hpp"

namespace cnnlens {

namespace keys {

ArtifactKey confidence(const std::string& model_id, const std::string& dataset_digest) {
    return {ArtifactKind::Confidence, model_id, dataset_digest, "", "", ""};
}

ArtifactKey distance(const std::string& model_id, const std::string& dataset_digest) {
    return {ArtifactKind::Distance, model_id, dataset_digest, "", "", ""};
}

ArtifactKey projection(const std::string& model_id, const std::string& dataset_digest,
                       const ProjectionOptions& options) {
    return {ArtifactKind::Projection, model_id, dataset_digest, "", params_digest(options.to_json()), ""};
}

ArtifactKey accuracy(const std::string& model_id, const std::string& dataset_digest, const ClassHierarchy& hierarchy) {
    return {ArtifactKind::Accuracy, model_id, dataset_digest, "", params_digest(hierarchy.to_json()), ""};
}

std::string attention_params(Method method, const ExplainParams& params, std::size_t target_class) {
    return params_digest({{"method", to_string(method)},
                          {"params", params.method_json(method)},
                          {"target_class", target_class}});
}

ArtifactKey attention(const std::string& model_id, const std::string& dataset_digest, Method method,
                      const std::string& attention_params, const std::string& image_ref) {
    return {ArtifactKind::Attention, model_id, dataset_digest, std::string(to_string(method)), attention_params,
            image_ref};
}

namespace {

ArtifactKey derived(const ArtifactKey& attention, ArtifactKind kind, double threshold) {
    ArtifactKey key = attention;
    key.kind = kind;
    key.params_digest = params_digest({{"attention", attention.params_digest},
                                       {"threshold", threshold},
                                       {"levels", kDefaultContourLevels}});
    return key;
}

}  // namespace

ArtifactKey overlay(const ArtifactKey& attention, double threshold) {
    return derived(attention, ArtifactKind::Overlay, threshold);
}
ArtifactKey contour(const ArtifactKey& attention, double threshold) {
    return derived(attention, ArtifactKind::Contour, threshold);
}
ArtifactKey cih(const ArtifactKey& attention, double threshold) {
    return derived(attention, ArtifactKind::Cih, threshold);
}

}  // namespace keys

Bytes to_bytes(const nlohmann::json& j) {
    const std::string text = j.dump();
    return {text.begin(), text.end()};
}

nlohmann::json json_from_bytes(const Bytes& bytes) {
    try {
        return nlohmann::json::parse(bytes.begin(), bytes.end());
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::IoFailure, "stored artifact is not valid JSON", e.what());
    }
}

std::vector<std::size_t> confidence_rows(const DatasetManifest& manifest, std::size_t stored_rows) {
    const std::size_t m = manifest.images.size();
    std::vector<std::size_t> rows;
    if (stored_rows == m) {
        rows.resize(m);
        for (std::size_t i = 0; i < m; ++i) rows[i] = i;
        return rows;
    }
    for (std::size_t i = 0; i < m; ++i) {
        try {
            decode_png(read_file(manifest.path_of(i)));
            rows.push_back(i);
        } catch (const Error& e) {
            if (e.code() != ErrorCode::UndecodableImage && e.code() != ErrorCode::MissingFile) throw;
        }
    }
    if (rows.size() != stored_rows)
        throw Error(ErrorCode::ShapeMismatch, "stored confidence rows do not match the dataset",
                    std::to_string(stored_rows) + " rows, " + std::to_string(rows.size()) + " decodable images");
    return rows;
}

Bytes produce_attention(const ModelRecord& model, const RgbImage& image, Method method, std::size_t target_class,
                        const ExplainParams& params) {
    const auto map = run_method(method, model, preprocess(model, image), target_class, params);
    return encode_matrix(map.values, kAttentionMagic);
}

Matrix attention_at_image_size(const Matrix& attention, const RgbImage& image) {
    if (attention.rows() == image.height && attention.cols() == image.width) return attention;
    return resample(attention, image.height, image.width);
}

Bytes produce_overlay(const RgbImage& image, const Matrix& attention, double threshold) {
    const Matrix at_size = attention_at_image_size(attention, image);
    const auto contours = contour_bands(at_size, kDefaultContourLevels, threshold);
    return encode_png(render_overlay(image, at_size, threshold, &contours));
}

Bytes produce_contour(const Matrix& attention, double threshold) {
    return to_bytes(contour_bands(attention, kDefaultContourLevels, threshold).to_json());
}

Bytes produce_cih(const RgbImage& image, const Matrix& attention, double threshold) {
    const Matrix at_size = attention_at_image_size(attention, image);
    const double t = clamp_threshold(threshold);
    return to_bytes(color_intensity_histogram(image, threshold_mask(at_size, t), t).to_json());
}

// ---------------------------------------------------------------------------

std::size_t PrecomputeSummary::producer_calls() const {
    std::size_t n = 0;
    for (const auto& m : models)
        for (const auto& a : m.artifacts) n += a.status == "computed";
    return n;
}

int PrecomputeSummary::exit_code() const {
    const auto failed = std::count_if(models.begin(), models.end(), [](const ModelOutcome& m) { return !m.ok; });
    if (!models.empty() && static_cast<std::size_t>(failed) == models.size()) return 2;
    const bool partial = failed > 0 || std::any_of(models.begin(), models.end(), [](const ModelOutcome& m) {
                             return !m.failed_images.empty();
                         });
    return partial ? 1 : 0;
}

nlohmann::json PrecomputeSummary::to_json() const {
    nlohmann::json ms = nlohmann::json::array();
    for (const auto& m : models) {
        nlohmann::json arts = nlohmann::json::array();
        for (const auto& a : m.artifacts) arts.push_back({{"key", a.key}, {"status", a.status}, {"ms", a.ms}});
        nlohmann::json failed = nlohmann::json::array();
        for (const auto& f : m.failed_images) failed.push_back({{"image_ref", f.image_id}, {"reason", f.reason}});
        nlohmann::json entry{{"model_id", m.model_id}, {"ok", m.ok}, {"artifacts", std::move(arts)},
                             {"failed_images", std::move(failed)}};
        if (!m.ok) entry["error"] = m.error;
        ms.push_back(std::move(entry));
    }
    return {{"dataset_digest", dataset_digest},
            {"models", std::move(ms)},
            {"producer_calls", producer_calls()},
            {"total_ms", total_ms},
            {"exit_code", exit_code()}};
}

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point start) {
    return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

class ModelRun {
  public:
    ModelRun(const DatasetManifest& manifest, const ModelRecord& model, const ClassHierarchy& hierarchy,
             ArtifactStore& store, const PrecomputeOptions& options, std::size_t batch_jobs, std::mutex& out_mu)
        : manifest_(manifest), model_(model), hierarchy_(hierarchy), store_(store), options_(options),
          batch_jobs_(batch_jobs), out_mu_(out_mu) {
        outcome_.model_id = model.model_id;
    }

    ModelOutcome run() {
        try {
            run_steps();
        } catch (const std::exception& e) {
            outcome_.ok = false;
            outcome_.error = e.what();
            log::error("model " + model_.model_id + " failed: " + e.what());
        }
        return std::move(outcome_);
    }

  private:
    Bytes step(const ArtifactKey& key, const ArtifactStore::Producer& producer) {
        const auto start = Clock::now();
        const std::string id = key.serialize();
        try {
            bool computed = false;
            Bytes bytes = store_.get_or_compute(key, producer, &computed);
            emit({id, computed ? "computed" : "cached", elapsed_ms(start)});
            return bytes;
        } catch (...) {
            emit({id, "failed", elapsed_ms(start)});
            throw;
        }
    }

    void emit(ArtifactOutcome outcome) {
        if (options_.progress) {
            std::lock_guard lock(out_mu_);
            *options_.progress << "key=" << outcome.key << " status=" << outcome.status
                               << " model=" << model_.model_id << " ms=" << static_cast<long long>(outcome.ms)
                               << std::endl;
        }
        outcome_.artifacts.push_back(std::move(outcome));
    }

    void run_steps() {
        const std::string& id = model_.model_id;
        const std::string& digest = manifest_.digest;
        const std::size_t n = model_.net().num_classes();
        if (hierarchy_.leaf_count() != n)
            throw Error(ErrorCode::ShapeMismatch, "hierarchy leaf count differs from the model's class count",
                        std::to_string(hierarchy_.leaf_count()) + " vs " + std::to_string(n));

        const Bytes conf_bytes = step(keys::confidence(id, digest), [&] {
            auto batch = batch_predict(
                model_, manifest_.images.size(), [&](std::size_t i) { return read_image(manifest_.path_of(i)); },
                [&](std::size_t i) { return manifest_.images[i].image_ref; }, batch_jobs_);
            outcome_.failed_images = batch.failed;
            if (batch.rows.empty()) throw Error(ErrorCode::EmptyDataset, "no image could be predicted");
            return encode_matrix(batch.confidence, kConfidenceMagic);
        });
        const Matrix conf = decode_matrix(conf_bytes, kConfidenceMagic);
        const auto rows = confidence_rows(manifest_, conf.rows());
        if (outcome_.failed_images.empty() && rows.size() != manifest_.images.size())
            for (std::size_t i = 0, r = 0; i < manifest_.images.size(); ++i) {
                if (r < rows.size() && rows[r] == i) ++r;
                else outcome_.failed_images.push_back({i, manifest_.images[i].image_ref, "undecodable image"});
            }
        std::vector<std::size_t> classes;
        for (std::size_t r : rows) classes.push_back(manifest_.images[r].class_index);

        const Bytes dist_bytes = step(keys::distance(id, digest), [&] {
            return encode_matrix(build_distance_matrix(classes, conf).values, kDistanceMagic);
        });

        step(keys::projection(id, digest, options_.projection), [&] {
            DistanceMatrix dist;
            dist.values = decode_matrix(dist_bytes, kDistanceMagic);
            dist.model_id = id;
            dist.populated.assign(n, false);
            for (std::size_t c : classes) dist.populated[c] = true;
            return to_bytes(project_classes(dist, options_.projection, hierarchy_.root_of).to_json());
        });

        step(keys::accuracy(id, digest, hierarchy_), [&] {
            auto report = accuracy_report(classes, conf, hierarchy_);
            report.model_id = id;
            return to_bytes(report.to_json());
        });

        if (options_.examples) run_examples();
    }

    void run_examples() {
        const std::size_t sample = options_.sample_image.empty() ? 0 : manifest_.find(options_.sample_image);
        const auto& img = manifest_.images[sample];
        const RgbImage image = read_image(manifest_.path_of(sample));
        for (Method method : kAllMethods) {
            const auto att_key =
                keys::attention(model_.model_id, manifest_.digest, method,
                                keys::attention_params(method, options_.explain, img.class_index), img.image_ref);
            const Bytes att = step(att_key, [&] {
                return produce_attention(model_, image, method, img.class_index, options_.explain);
            });
            const Matrix map = decode_matrix(att, kAttentionMagic);
            step(keys::overlay(att_key, options_.threshold),
                 [&] { return produce_overlay(image, map, options_.threshold); });
        }
    }

    const DatasetManifest& manifest_;
    const ModelRecord& model_;
    const ClassHierarchy& hierarchy_;
    ArtifactStore& store_;
    const PrecomputeOptions& options_;
    std::size_t batch_jobs_;
    std::mutex& out_mu_;
    ModelOutcome outcome_;
};

}  // namespace

PrecomputeSummary precompute(const DatasetManifest& manifest, const std::vector<ModelRecord>& registry,
                             const ClassHierarchy& hierarchy, ArtifactStore& store,
                             const PrecomputeOptions& options) {
    const auto start = Clock::now();
    std::vector<const ModelRecord*> selected;
    if (options.models.empty()) {
        for (const auto& m : registry) selected.push_back(&m);
    } else {
        for (const auto& wanted : options.models) {
            const auto it = std::find_if(registry.begin(), registry.end(),
                                         [&](const ModelRecord& m) { return m.model_id == wanted; });
            if (it == registry.end()) throw Error(ErrorCode::UnknownModel, "model not in registry", wanted);
            selected.push_back(&*it);
        }
    }

    PrecomputeSummary summary;
    summary.dataset_digest = manifest.digest;
    summary.models.resize(selected.size());
    const std::size_t jobs = std::max<std::size_t>(1, options.jobs);
    const std::size_t parallel_models = std::max<std::size_t>(1, std::min(jobs, selected.size()));
    const std::size_t batch_jobs = std::max<std::size_t>(1, jobs / parallel_models);

    std::mutex out_mu;
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < selected.size(); i = next++)
            summary.models[i] = ModelRun(manifest, *selected[i], hierarchy, store, options, batch_jobs, out_mu).run();
    };
    if (parallel_models == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t j = 0; j < parallel_models; ++j) pool.emplace_back(worker);
    }
    summary.total_ms = elapsed_ms(start);
    return summary;
}

}  // namespace cnnlens
