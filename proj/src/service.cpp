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

#include "cnnlens/service.hpp"

#include <algorithm>
#include <cctype>
#include <set>

#include "cnnlens/digest.hpp"
#include "cnnlens/error.hpp"
#include "cnnlens/log.hpp"
#include "cnnlens/pipeline.hpp"
#include "cnnlens/render.hpp"

namespace cnnlens {

std::string_view to_string(TaskStatus status) noexcept {
    switch (status) {
        case TaskStatus::Pending: return "pending";
        case TaskStatus::Running: return "running";
        case TaskStatus::Done: return "done";
        case TaskStatus::Failed: return "failed";
    }
    return "?";
}

nlohmann::json TaskSpec::to_json() const {
    nlohmann::json j{{"model_ids", model_ids},
                     {"class_ids", class_ids},
                     {"method", to_string(method)},
                     {"measure", to_string(measure)},
                     {"threshold", threshold},
                     {"max_images_per_class", max_images_per_class}};
    if (image_ref) j["image_ref"] = *image_ref;
    if (target_class) j["target_class"] = *target_class;
    if (method == Method::SmoothGradCamPlusPlus || method == Method::Bbmp) j["params"] = params.method_json(method);
    return j;
}

struct ComparisonService::Task {
    std::string id;
    TaskSpec spec;
    std::vector<std::pair<std::string, std::size_t>> plan;  // (model, dataset index)

    std::atomic<TaskStatus> status{TaskStatus::Pending};
    mutable std::mutex mu;
    mutable std::condition_variable cv;
    std::vector<TableRow> rows;
    std::vector<ArtifactKey> attention_keys;
    double threshold = kDefaultThreshold;
    std::string error;

    void advance(TaskStatus next) {
        {
            std::lock_guard lock(mu);
            status.store(next);
        }
        cv.notify_all();
    }
};

namespace {

ArtifactKey parse_ref(const std::string& ref) { return ArtifactKey::parse(ref); }

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

nlohmann::json optional_json(const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(); }

[[noreturn]] void invalid(const std::string& message, const std::string& detail = {}) {
    throw Error(ErrorCode::ValidationError, message, detail);
}

nlohmann::json paginate(const nlohmann::json& items, std::size_t page, std::size_t page_size) {
    if (page == 0) throw Error(ErrorCode::InvalidArgument, "page numbers start at 1");
    const std::size_t begin = std::min(items.size(), (page - 1) * page_size);
    const std::size_t end = std::min(items.size(), begin + page_size);
    nlohmann::json slice = nlohmann::json::array();
    for (std::size_t i = begin; i < end; ++i) slice.push_back(items[i]);
    return {{"items", std::move(slice)}, {"page", page}, {"page_size", page_size}, {"total", items.size()}};
}

}  // namespace

ComparisonService::ComparisonService(DatasetManifest manifest, ClassHierarchy hierarchy,
                                     std::vector<ModelRecord> models, ArtifactStore& store, ServiceOptions options)
    : manifest_(std::move(manifest)), hierarchy_(std::move(hierarchy)), models_(std::move(models)), store_(store),
      options_(std::move(options)) {
    if (options_.page_size == 0) throw Error(ErrorCode::InvalidArgument, "page size must be positive");
    worker_ = std::jthread([this](std::stop_token stop) { worker_loop(stop); });
}

ComparisonService::~ComparisonService() {
    worker_.request_stop();
    queue_cv_.notify_all();
}

// ---------------------------------------------------------------------------
// Cached artifact access

const ModelRecord& ComparisonService::model(const std::string& model_id) const {
    for (const auto& m : models_)
        if (m.model_id == model_id) return m;
    throw Error(ErrorCode::UnknownModel, "model not registered", model_id);
}

const AccuracyReport& ComparisonService::accuracy(const std::string& model_id) const {
    model(model_id);
    std::lock_guard lock(cache_mu_);
    if (auto it = reports_.find(model_id); it != reports_.end()) return it->second;
    const auto bytes = store_.get(keys::accuracy(model_id, manifest_.digest, hierarchy_));
    if (!bytes) throw Error(ErrorCode::NotPrecomputed, "accuracy report not precomputed", model_id);
    return reports_.emplace(model_id, AccuracyReport::from_json(json_from_bytes(*bytes))).first->second;
}

const ComparisonService::Confidence& ComparisonService::confidence(const std::string& model_id) const {
    model(model_id);
    std::lock_guard lock(cache_mu_);
    if (auto it = confidences_.find(model_id); it != confidences_.end()) return *it->second;
    const auto bytes = store_.get(keys::confidence(model_id, manifest_.digest));
    if (!bytes) throw Error(ErrorCode::NotPrecomputed, "confidence matrix not precomputed", model_id);
    auto c = std::make_shared<Confidence>();
    c->values = decode_matrix(*bytes, kConfidenceMagic);
    c->dataset_rows = confidence_rows(manifest_, c->values.rows());
    return *confidences_.emplace(model_id, std::move(c)).first->second;
}

std::shared_ptr<ComparisonService::Task> ComparisonService::task(const std::string& task_id) const {
    std::lock_guard lock(tasks_mu_);
    const auto it = tasks_.find(task_id);
    if (it == tasks_.end()) throw Error(ErrorCode::UnknownTask, "no such task", task_id);
    return it->second;
}

// ---------------------------------------------------------------------------
// Overview

nlohmann::json ComparisonService::list_models(std::size_t page, std::size_t page_size) const {
    nlohmann::json items = nlohmann::json::array();
    for (const auto& m : models_) {
        const auto& report = accuracy(m.model_id);
        nlohmann::json roots = nlohmann::json::array();
        for (std::size_t r = 0; r < report.per_root.size(); ++r)
            roots.push_back({{"root_index", r},
                             {"label", r < hierarchy_.root_count() ? hierarchy_.root_labels[r] : ""},
                             {"accuracy", optional_json(report.per_root[r])}});
        items.push_back({{"model_id", m.model_id},
                         {"display_name", m.display_name},
                         {"param_count", m.param_count},
                         {"target_layer", m.target_layer},
                         {"input_size", {m.input_height, m.input_width}},
                         {"overall_accuracy", report.overall},
                         {"per_root", std::move(roots)}});
    }
    return paginate(items, page, page_size ? page_size : options_.page_size);
}

nlohmann::json ComparisonService::get_projection(const std::string& model_id) const {
    model(model_id);
    const auto bytes = store_.get(keys::projection(model_id, manifest_.digest, options_.projection));
    if (!bytes) throw Error(ErrorCode::NotPrecomputed, "projection not precomputed", model_id);
    auto j = json_from_bytes(*bytes);
    for (auto& p : j.at("points")) {
        const auto c = p.at("class_index").get<std::size_t>();
        const auto r = p.at("root_index").get<std::size_t>();
        p["class_label"] = c < hierarchy_.leaf_count() ? hierarchy_.leaf_labels[c] : "";
        p["root_label"] = r < hierarchy_.root_count() ? hierarchy_.root_labels[r] : "";
    }
    return j;
}

nlohmann::json ComparisonService::get_class_stats(std::size_t k) const {
    std::vector<AccuracyReport> reports;
    std::vector<std::string> ids;
    for (const auto& m : models_) {
        reports.push_back(accuracy(m.model_id));
        ids.push_back(m.model_id);
    }
    const auto stats = class_accuracy_stats(reports, k);
    auto entries = [&](const std::vector<ClassStat>& list) {
        nlohmann::json out = nlohmann::json::array();
        for (const auto& s : list) {
            nlohmann::json acc = nlohmann::json::object();
            for (std::size_t i = 0; i < ids.size(); ++i) acc[ids[i]] = s.accuracies[i];
            out.push_back({{"class_index", s.class_index},
                           {"label", hierarchy_.leaf_labels.at(s.class_index)},
                           {"range", s.range},
                           {"mean", s.mean},
                           {"accuracies", std::move(acc)}});
        }
        return out;
    };
    return {{"k", stats.k},
            {"models", ids},
            {"range", entries(stats.diverging)},
            {"average", {{"top", entries(stats.top)}, {"bottom", entries(stats.bottom)}}}};
}

// ---------------------------------------------------------------------------
// Tasks

TaskSpec ComparisonService::parse_spec(const nlohmann::json& j) const {
    if (!j.is_object()) invalid("task spec must be a JSON object");
    TaskSpec spec;
    spec.threshold = options_.default_threshold;
    spec.max_images_per_class = options_.max_images_per_class;
    spec.params = options_.explain;
    try {
        if (!j.contains("model_ids") || !j.at("model_ids").is_array()) invalid("model_ids must be a list");
        spec.model_ids = j.at("model_ids").get<std::vector<std::string>>();
        if (!j.contains("class_ids") || !j.at("class_ids").is_array()) invalid("class_ids must be a list");
        spec.class_ids = j.at("class_ids").get<std::vector<std::size_t>>();
        if (j.contains("method")) spec.method = parse_method(j.at("method").get<std::string>());
        if (j.contains("measure")) spec.measure = parse_measure(j.at("measure").get<std::string>());
        if (j.contains("threshold")) spec.threshold = clamp_threshold(j.at("threshold").get<double>());
        if (j.contains("image_ref") && !j.at("image_ref").is_null())
            spec.image_ref = j.at("image_ref").get<std::string>();
        if (j.contains("target_class") && !j.at("target_class").is_null())
            spec.target_class = j.at("target_class").get<std::size_t>();
        if (j.contains("max_images_per_class"))
            spec.max_images_per_class = j.at("max_images_per_class").get<std::size_t>();
        if (j.contains("params")) spec.params = ExplainParams::from_json(j.at("params"));
    } catch (const nlohmann::json::exception& e) {
        invalid("malformed task spec", e.what());
    } catch (const Error& e) {
        if (e.code() == ErrorCode::UnknownMethod) throw;
        invalid(e.what(), e.detail());
    }

    if (spec.model_ids.empty()) invalid("a task needs at least one model", "model_ids: 0");
    if (spec.model_ids.size() > kMaxTaskModels)
        invalid("too many models", "model_ids: " + std::to_string(spec.model_ids.size()) + " > " +
                                       std::to_string(kMaxTaskModels));
    std::set<std::string> seen;
    for (const auto& id : spec.model_ids) {
        if (!seen.insert(id).second) invalid("duplicate model in task", id);
        if (std::none_of(models_.begin(), models_.end(), [&](const ModelRecord& m) { return m.model_id == id; }))
            invalid("unknown model", id);
    }
    if (spec.class_ids.empty()) invalid("a task needs at least one class", "class_ids: 0");
    if (spec.multi_model() && spec.class_ids.size() != 1)
        invalid("multi-model tasks focus on exactly one class",
                "class_ids: " + std::to_string(spec.class_ids.size()));
    const auto classes = manifest_.image_classes();
    for (std::size_t c : spec.class_ids) {
        if (c >= hierarchy_.leaf_count()) invalid("class index out of range", std::to_string(c));
        if (std::find(classes.begin(), classes.end(), c) == classes.end())
            invalid("class has no images in the dataset", std::to_string(c));
    }
    if (std::set<std::size_t>(spec.class_ids.begin(), spec.class_ids.end()).size() != spec.class_ids.size())
        invalid("duplicate class in task");
    if (spec.image_ref) {
        std::size_t index = 0;
        try {
            index = manifest_.find(*spec.image_ref);
        } catch (const Error&) {
            invalid("unknown image", *spec.image_ref);
        }
        const std::size_t cls = manifest_.images[index].class_index;
        if (std::find(spec.class_ids.begin(), spec.class_ids.end(), cls) == spec.class_ids.end())
            invalid("image does not belong to the selected classes", *spec.image_ref);
    }
    if (spec.target_class && *spec.target_class >= hierarchy_.leaf_count())
        invalid("target class out of range", std::to_string(*spec.target_class));
    if (spec.max_images_per_class == 0) invalid("max_images_per_class must be positive");
    return spec;
}

std::string ComparisonService::create_task(const nlohmann::json& j) {
    auto t = std::make_shared<Task>();
    t->spec = parse_spec(j);
    t->threshold = t->spec.threshold;
    for (const auto& id : t->spec.model_ids) {
        accuracy(id);
        confidence(id);
    }

    std::vector<std::size_t> images;
    if (t->spec.image_ref) {
        images.push_back(manifest_.find(*t->spec.image_ref));
    } else {
        for (std::size_t c : t->spec.class_ids) {
            std::size_t taken = 0;
            for (std::size_t i = 0; i < manifest_.images.size() && taken < t->spec.max_images_per_class; ++i)
                if (manifest_.images[i].class_index == c) {
                    images.push_back(i);
                    ++taken;
                }
        }
    }
    for (const auto& id : t->spec.model_ids)
        for (std::size_t i : images) t->plan.emplace_back(id, i);

    {
        std::lock_guard lock(tasks_mu_);
        t->id = "t" + std::to_string(next_task_++);
        tasks_.emplace(t->id, t);
    }
    {
        std::lock_guard lock(queue_mu_);
        queue_.push_back(t);
    }
    queue_cv_.notify_all();
    return t->id;
}

void ComparisonService::worker_loop(std::stop_token stop) {
    while (true) {
        std::shared_ptr<Task> next;
        {
            std::unique_lock lock(queue_mu_);
            if (!queue_cv_.wait(lock, stop, [&] { return !queue_.empty(); })) return;
            next = std::move(queue_.front());
            queue_.pop_front();
        }
        run(*next);
    }
}

void ComparisonService::run(Task& t) {
    t.advance(TaskStatus::Running);
    try {
        for (const auto& [model_id, index] : t.plan) {
            double threshold = 0.0;
            {
                std::lock_guard lock(t.mu);
                threshold = t.threshold;
            }
            TableRow row = compute_row(t, model_id, index, threshold);
            const ArtifactKey att = parse_ref(row.attention_ref);
            std::unique_lock lock(t.mu);
            // A threshold change raced with this row: re-render before publishing.
            while (t.threshold != threshold) {
                threshold = t.threshold;
                lock.unlock();
                const Matrix map = decode_matrix(*store_.get(att), kAttentionMagic);
                render(row, att, map, threshold, !t.spec.multi_model());
                lock.lock();
            }
            t.rows.push_back(std::move(row));
            t.attention_keys.push_back(att);
        }
        t.advance(TaskStatus::Done);
    } catch (const std::exception& e) {
        {
            std::lock_guard lock(t.mu);
            t.error = e.what();
        }
        log::error("task " + t.id + " failed: " + e.what());
        t.advance(TaskStatus::Failed);
    }
}

TableRow ComparisonService::compute_row(const Task& t, const std::string& model_id, std::size_t index,
                                        double threshold) {
    const ModelRecord& m = model(model_id);
    const Confidence& conf = confidence(model_id);
    const AccuracyReport& report = accuracy(model_id);
    const auto& img = manifest_.images[index];

    const auto pos = std::lower_bound(conf.dataset_rows.begin(), conf.dataset_rows.end(), index);
    if (pos == conf.dataset_rows.end() || *pos != index)
        throw Error(ErrorCode::UndecodableImage, "image has no stored prediction", img.image_ref);
    const auto probs = conf.values.row(static_cast<std::size_t>(pos - conf.dataset_rows.begin()));

    TableRow row;
    row.model_id = model_id;
    row.image_ref = img.image_ref;
    row.ground_truth_class = img.class_index;
    row.predicted_class = argmax(probs);
    row.confidence = probs[row.predicted_class];
    row.target_class = t.spec.target_class.value_or(img.class_index);
    row.overall_accuracy = report.overall;
    row.class_accuracy = report.per_leaf.at(img.class_index);

    const RgbImage image = read_image(manifest_.path_of(index));
    const auto att_key =
        keys::attention(model_id, manifest_.digest, t.spec.method,
                        keys::attention_params(t.spec.method, t.spec.params, row.target_class), img.image_ref);
    const Bytes bytes = store_.get_or_compute(att_key, [&] {
        ++attention_calls_;
        return produce_attention(m, image, t.spec.method, row.target_class, t.spec.params);
    });
    row.attention_ref = att_key.serialize();
    render(row, att_key, decode_matrix(bytes, kAttentionMagic), threshold, !t.spec.multi_model());
    return row;
}

void ComparisonService::render(TableRow& row, const ArtifactKey& attention_key, const Matrix& attention,
                               double threshold, bool with_cih) const {
    const RgbImage image = read_image(manifest_.path_of(manifest_.find(row.image_ref)));
    const Matrix at_size = attention_at_image_size(attention, image);
    const auto overlay_key = keys::overlay(attention_key, threshold);
    store_.get_or_compute(overlay_key, [&] { return produce_overlay(image, at_size, threshold); });
    row.overlay_ref = overlay_key.serialize();
    const auto contour_key = keys::contour(attention_key, threshold);
    store_.get_or_compute(contour_key, [&] { return produce_contour(at_size, threshold); });
    row.contour_ref = contour_key.serialize();
    if (with_cih) {
        const auto cih_key = keys::cih(attention_key, threshold);
        store_.get_or_compute(cih_key, [&] { return produce_cih(image, at_size, threshold); });
        row.cih_ref = cih_key.serialize();
    }
}

nlohmann::json ComparisonService::row_json(const TableRow& row) const {
    auto label = [&](std::size_t c) { return c < hierarchy_.leaf_count() ? hierarchy_.leaf_labels[c] : ""; };
    nlohmann::json j{{"model_id", row.model_id},
                     {"display_name", model(row.model_id).display_name},
                     {"image_ref", row.image_ref},
                     {"ground_truth_class", row.ground_truth_class},
                     {"ground_truth_label", label(row.ground_truth_class)},
                     {"predicted_class", row.predicted_class},
                     {"predicted_label", label(row.predicted_class)},
                     {"target_class", row.target_class},
                     {"correct", row.predicted_class == row.ground_truth_class},
                     {"overall_accuracy", row.overall_accuracy},
                     {"class_accuracy", optional_json(row.class_accuracy)},
                     {"confidence", row.confidence},
                     {"attention_ref", row.attention_ref},
                     {"overlay_ref", row.overlay_ref},
                     {"contour_ref", row.contour_ref}};
    if (row.cih_ref) j["cih_ref"] = *row.cih_ref;
    return j;
}

nlohmann::json ComparisonService::get_task(const std::string& task_id) const {
    const auto t = task(task_id);
    std::lock_guard lock(t->mu);
    const double total = static_cast<double>(t->plan.size());
    nlohmann::json j{{"task_id", t->id},
                     {"status", to_string(t->status.load())},
                     {"progress", total > 0 ? static_cast<double>(t->rows.size()) / total : 1.0},
                     {"rows_done", t->rows.size()},
                     {"rows_total", t->plan.size()},
                     {"threshold", t->threshold},
                     {"spec", t->spec.to_json()}};
    if (!t->error.empty()) j["error"] = t->error;
    return j;
}

nlohmann::json ComparisonService::get_task_results(const std::string& task_id, const ResultQuery& query) const {
    const auto t = task(task_id);
    std::vector<TableRow> rows;
    TaskStatus status{};
    std::size_t total = 0;
    {
        std::lock_guard lock(t->mu);
        rows = t->rows;
        status = t->status.load();
        total = t->plan.size();
    }

    using Column = std::function<double(const TableRow&)>;
    Column column;
    if (query.sort_by == "class_accuracy") column = [](const TableRow& r) { return r.class_accuracy.value_or(-1.0); };
    else if (query.sort_by == "confidence") column = [](const TableRow& r) { return r.confidence; };
    else if (query.sort_by == "overall_accuracy") column = [](const TableRow& r) { return r.overall_accuracy; };
    else if (!query.sort_by.empty()) throw Error(ErrorCode::UnknownColumn, "cannot sort by column", query.sort_by);

    if (!query.filter.empty()) {
        const std::string needle = lower(query.filter);
        auto label = [&](std::size_t c) { return c < hierarchy_.leaf_count() ? hierarchy_.leaf_labels[c] : ""; };
        std::erase_if(rows, [&](const TableRow& r) {
            for (const std::string& hay : {r.model_id, model(r.model_id).display_name, label(r.ground_truth_class),
                                           label(r.predicted_class)})
                if (lower(hay).find(needle) != std::string::npos) return false;
            return true;
        });
    }
    if (column) {
        std::stable_sort(rows.begin(), rows.end(), [&](const TableRow& a, const TableRow& b) {
            const double va = column(a), vb = column(b);
            if (va != vb) return query.descending ? va > vb : va < vb;
            if (a.model_id != b.model_id) return a.model_id < b.model_id;
            return a.image_ref < b.image_ref;
        });
    }

    nlohmann::json items = nlohmann::json::array();
    for (const auto& r : rows) items.push_back(row_json(r));
    auto page = paginate(items, query.page, query.page_size ? query.page_size : options_.page_size);
    page["status"] = to_string(status);
    page["rows_total"] = total;
    page["sort_by"] = query.sort_by;
    page["order"] = query.descending ? "desc" : "asc";
    page["filter"] = query.filter;
    return page;
}

SimilarityMatrix ComparisonService::similarity(const std::string& task_id, Measure measure) {
    const auto t = task(task_id);
    if (!t->spec.multi_model() || !t->spec.image_ref)
        throw Error(ErrorCode::WrongTaskKind, "similarity needs a multi-model task with a selected image", task_id);
    std::vector<ArtifactKey> att_keys;
    {
        std::lock_guard lock(t->mu);
        if (t->status.load() != TaskStatus::Done)
            throw Error(ErrorCode::NotPrecomputed, "task has not finished", std::string(to_string(t->status.load())));
        att_keys = t->attention_keys;
    }
    const RgbImage image = read_image(manifest_.path_of(manifest_.find(*t->spec.image_ref)));

    nlohmann::json ident{{"measure", to_string(measure)}, {"attention", nlohmann::json::array()}};
    for (const auto& k : att_keys) ident["attention"].push_back(k.serialize());
    const ArtifactKey key{ArtifactKind::Similarity, "", manifest_.digest, std::string(to_string(t->spec.method)),
                          params_digest(ident), *t->spec.image_ref};
    const Bytes bytes = store_.get_or_compute(key, [&] {
        std::vector<Matrix> maps;
        for (const auto& k : att_keys) {
            const auto stored = store_.get(k);
            if (!stored) throw Error(ErrorCode::NotFound, "attention artifact missing", k.serialize());
            maps.push_back(decode_matrix(*stored, kAttentionMagic));
        }
        return to_bytes(similarity_matrix(maps, measure, t->spec.model_ids, image.height, image.width).to_json());
    });
    return SimilarityMatrix::from_json(json_from_bytes(bytes));
}

nlohmann::json ComparisonService::get_similarity(const std::string& task_id, std::optional<std::string> measure) {
    const Measure m = measure && !measure->empty() ? parse_measure(*measure) : Measure::L1;
    return similarity(task_id, m).to_json();
}

Bytes ComparisonService::get_similarity_png(const std::string& task_id, std::optional<std::string> measure) {
    const Measure m = measure && !measure->empty() ? parse_measure(*measure) : Measure::L1;
    const auto s = similarity(task_id, m);
    return encode_png(render_heatmap(s.values, m == Measure::Ssim ? -1.0 : 0.0, 1.0));
}

nlohmann::json ComparisonService::set_threshold(const std::string& task_id, double threshold) {
    const auto t = task(task_id);
    threshold = clamp_threshold(threshold);
    std::vector<TableRow> rows;
    std::vector<ArtifactKey> att_keys;
    {
        std::lock_guard lock(t->mu);
        t->threshold = threshold;
        rows = t->rows;
        att_keys = t->attention_keys;
    }
    const bool with_cih = !t->spec.multi_model();
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto stored = store_.get(att_keys[i]);
        if (!stored) throw Error(ErrorCode::NotFound, "attention artifact missing", att_keys[i].serialize());
        render(rows[i], att_keys[i], decode_matrix(*stored, kAttentionMagic), threshold, with_cih);
    }

    nlohmann::json refs = nlohmann::json::array();
    {
        std::lock_guard lock(t->mu);
        if (t->threshold == threshold)
            for (std::size_t i = 0; i < rows.size(); ++i) {
                t->rows[i].overlay_ref = rows[i].overlay_ref;
                t->rows[i].contour_ref = rows[i].contour_ref;
                t->rows[i].cih_ref = rows[i].cih_ref;
            }
    }
    for (const auto& r : rows) {
        nlohmann::json j{{"model_id", r.model_id},
                         {"image_ref", r.image_ref},
                         {"overlay_ref", r.overlay_ref},
                         {"contour_ref", r.contour_ref}};
        if (r.cih_ref) j["cih_ref"] = *r.cih_ref;
        refs.push_back(std::move(j));
    }
    return {{"task_id", task_id}, {"threshold", threshold}, {"rows", std::move(refs)}};
}

std::pair<Bytes, std::string> ComparisonService::get_artifact(const std::string& serialized_key) const {
    const ArtifactKey key = ArtifactKey::parse(serialized_key);
    auto bytes = store_.get(key);
    if (!bytes) throw Error(ErrorCode::NotFound, "artifact not found", serialized_key);
    return {std::move(*bytes), std::string(content_type(key.kind))};
}

bool ComparisonService::wait(const std::string& task_id, std::chrono::milliseconds timeout) const {
    const auto t = task(task_id);
    std::unique_lock lock(t->mu);
    return t->cv.wait_for(lock, timeout, [&] {
        const auto s = t->status.load();
        return s == TaskStatus::Done || s == TaskStatus::Failed;
    });
}

}  // namespace cnnlens
