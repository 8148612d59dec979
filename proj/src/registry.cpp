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

#include "cnnlens/registry.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <mutex>
#include <set>
#include <thread>

#include "cnnlens/error.hpp"

namespace cnnlens {

namespace {

std::filesystem::path resolve_uri(const std::string& uri, const std::filesystem::path& base_dir) {
    std::string path = uri;
    if (path.rfind("file://", 0) == 0) path = path.substr(7);
    std::filesystem::path p(path);
    return p.is_absolute() ? p : base_dir / p;
}

Interpolation parse_interpolation(const std::string& name) {
    if (name == "bilinear") return Interpolation::Bilinear;
    if (name == "nearest") return Interpolation::Nearest;
    throw Error(ErrorCode::InvalidArgument, "unknown resize mode", name);
}

}  // namespace

const nn::Network& ModelRecord::net() const {
    if (!network) throw Error(ErrorCode::ModelNotLoaded, "model weights are not loaded", model_id);
    return *network;
}

void ClassHierarchy::validate() const {
    if (root_labels.empty()) throw Error(ErrorCode::InvalidArgument, "hierarchy has no root classes");
    if (root_of.size() != leaf_labels.size())
        throw Error(ErrorCode::InvalidArgument, "root_of length differs from leaf count");
    for (std::size_t r : root_of)
        if (r >= root_labels.size()) throw Error(ErrorCode::InvalidArgument, "leaf maps to unknown root");
}

ClassHierarchy ClassHierarchy::flat(std::vector<std::string> leaf_labels) {
    ClassHierarchy h;
    h.root_of.assign(leaf_labels.size(), 0);
    h.leaf_labels = std::move(leaf_labels);
    h.root_labels = {"all"};
    return h;
}

ClassHierarchy ClassHierarchy::from_json(const nlohmann::json& j) {
    ClassHierarchy h;
    try {
        h.leaf_labels = j.at("leaf_labels").get<std::vector<std::string>>();
        h.root_of = j.at("root_of").get<std::vector<std::size_t>>();
        h.root_labels = j.at("root_labels").get<std::vector<std::string>>();
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::InvalidArgument, "malformed class hierarchy", e.what());
    }
    h.validate();
    return h;
}

nlohmann::json ClassHierarchy::to_json() const {
    return {{"leaf_labels", leaf_labels}, {"root_of", root_of}, {"root_labels", root_labels}};
}

ClassHierarchy load_hierarchy(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::MissingFile, "cannot open class hierarchy", path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::InvalidArgument, "class hierarchy is not valid JSON", path.string());
    }
    return ClassHierarchy::from_json(j);
}

void attach_network(ModelRecord& record, std::shared_ptr<const nn::Network> network) {
    const auto index = network->find_layer(record.target_layer);
    if (!index) throw Error(ErrorCode::UnresolvableTargetLayer, "target layer not found", record.target_layer);
    const nn::Shape in = network->input_shape();
    if (record.input_height == 0 || record.input_width == 0) {
        record.input_height = in.h;
        record.input_width = in.w;
    } else if (in.h != record.input_height || in.w != record.input_width) {
        throw Error(ErrorCode::ShapeMismatch, "declared input_size differs from network input", record.model_id);
    }
    record.target_index = *index;
    record.param_count = network->param_count();
    record.network = std::move(network);
}

std::vector<ModelRecord> parse_registry(const nlohmann::json& manifest, const std::filesystem::path& base_dir,
                                        bool load_weights) {
    if (!manifest.is_array()) throw Error(ErrorCode::InvalidArgument, "registry manifest must be a JSON array");
    std::vector<ModelRecord> records;
    std::set<std::string> seen;
    for (const auto& entry : manifest) {
        ModelRecord rec;
        try {
            rec.model_id = entry.at("model_id").get<std::string>();
            rec.display_name = entry.value("display_name", rec.model_id);
            rec.weights_uri = entry.at("weights_uri").get<std::string>();
            rec.target_layer = entry.at("target_layer").get<std::string>();
            const auto size = entry.at("input_size").get<std::vector<std::size_t>>();
            if (size.size() != 2) throw Error(ErrorCode::InvalidArgument, "input_size must be [height, width]");
            rec.input_height = size[0];
            rec.input_width = size[1];
            if (entry.contains("preprocess")) {
                const auto& pp = entry.at("preprocess");
                rec.preprocess.resize = parse_interpolation(pp.value("resize", std::string("bilinear")));
                if (pp.contains("mean")) rec.preprocess.mean = pp.at("mean").get<std::array<double, 3>>();
                if (pp.contains("std")) rec.preprocess.std = pp.at("std").get<std::array<double, 3>>();
            }
        } catch (const nlohmann::json::exception& e) {
            throw Error(ErrorCode::InvalidArgument, "malformed registry entry", e.what());
        }
        if (rec.model_id.empty()) throw Error(ErrorCode::InvalidArgument, "empty model_id");
        if (!seen.insert(rec.model_id).second)
            throw Error(ErrorCode::DuplicateModelId, "duplicate model_id in registry", rec.model_id);
        for (double s : rec.preprocess.std)
            if (!(s > 0.0)) throw Error(ErrorCode::InvalidArgument, "preprocess std must be positive", rec.model_id);
        if (load_weights) {
            const auto path = resolve_uri(rec.weights_uri, base_dir);
            if (!std::filesystem::exists(path)) throw Error(ErrorCode::MissingFile, "weights not found", path.string());
            attach_network(rec, std::make_shared<const nn::Network>(nn::Network::load(path)));
        }
        records.push_back(std::move(rec));
    }
    return records;
}

std::vector<ModelRecord> load_registry(const std::filesystem::path& manifest_path, bool load_weights) {
    std::ifstream in(manifest_path);
    if (!in) throw Error(ErrorCode::MissingFile, "registry manifest not found", manifest_path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::InvalidArgument, "registry manifest is not valid JSON", e.what());
    }
    return parse_registry(j, manifest_path.parent_path(), load_weights);
}

nn::Tensor preprocess(const ModelRecord& model, const RgbImage& image) {
    const nn::Network& net = model.net();
    const nn::Shape shape = net.input_shape();
    if (shape.c != 3) throw Error(ErrorCode::ShapeMismatch, "network must take 3-channel input", model.model_id);
    if (image.width == 0 || image.height == 0) throw Error(ErrorCode::UndecodableImage, "empty image");
    const RgbImage sized = resize_image(image, shape.w, shape.h, model.preprocess.resize);
    nn::Tensor t(shape);
    for (std::size_t c = 0; c < 3; ++c)
        for (std::size_t y = 0; y < shape.h; ++y)
            for (std::size_t x = 0; x < shape.w; ++x)
                t.at(c, y, x) = (sized.at(y, x, c) / 255.0 - model.preprocess.mean[c]) / model.preprocess.std[c];
    return t;
}

std::vector<double> predict_tensor(const ModelRecord& model, const nn::Tensor& input) {
    const nn::Tensor logits = model.net().forward(input);
    return nn::softmax(logits.data);
}

std::vector<double> predict(const ModelRecord& model, const RgbImage& image) {
    return predict_tensor(model, preprocess(model, image));
}

std::vector<double> predict_bytes(const ModelRecord& model, std::span<const std::uint8_t> png) {
    return predict(model, decode_png(png));
}

BatchPrediction batch_predict(const ModelRecord& model, std::size_t count, const ImageLoader& load,
                              const std::function<std::string(std::size_t)>& image_id, std::size_t jobs) {
    if (count == 0) throw Error(ErrorCode::EmptyDataset, "batch_predict on an empty dataset");
    const std::size_t classes = model.net().num_classes();

    std::vector<std::vector<double>> results(count);
    std::vector<std::string> errors(count);
    std::vector<char> ok(count, 0);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < count; i = next++) {
            try {
                results[i] = predict(model, load(i));
                ok[i] = 1;
            } catch (const std::exception& e) {
                errors[i] = e.what();
            }
        }
    };
    jobs = std::clamp<std::size_t>(jobs, 1, count);
    if (jobs == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t j = 0; j < jobs; ++j) pool.emplace_back(worker);
    }

    BatchPrediction out;
    for (std::size_t i = 0; i < count; ++i) {
        if (ok[i]) out.rows.push_back(i);
        else out.failed.push_back({i, image_id(i), errors[i]});
    }
    out.confidence = Matrix(out.rows.size(), classes);
    for (std::size_t r = 0; r < out.rows.size(); ++r)
        std::copy(results[out.rows[r]].begin(), results[out.rows[r]].end(), out.confidence.row(r).begin());
    return out;
}

BatchPrediction batch_predict(const ModelRecord& model, std::span<const std::filesystem::path> images,
                              std::size_t jobs) {
    return batch_predict(
        model, images.size(), [&](std::size_t i) { return read_image(images[i]); },
        [&](std::size_t i) { return images[i].string(); }, jobs);
}

std::size_t complexity(const ModelRecord& model) { return model.net().param_count(); }

std::size_t argmax(std::span<const double> values) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < values.size(); ++i)
        if (values[i] > values[best]) best = i;
    return best;
}

}  // namespace cnnlens
