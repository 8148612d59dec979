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

#include "cnnlens/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <map>

#include "cnnlens/digest.hpp"
#include "cnnlens/error.hpp"

namespace cnnlens {

namespace fs = std::filesystem;

std::vector<std::size_t> DatasetManifest::image_classes() const {
    std::vector<std::size_t> out;
    out.reserve(images.size());
    for (const auto& img : images) out.push_back(img.class_index);
    return out;
}

fs::path DatasetManifest::path_of(std::size_t i) const { return root / fs::path(images.at(i).image_ref); }

std::size_t DatasetManifest::find(const std::string& image_ref) const {
    const auto it = std::lower_bound(images.begin(), images.end(), image_ref,
                                     [](const DatasetImage& img, const std::string& ref) { return img.image_ref < ref; });
    if (it == images.end() || it->image_ref != image_ref)
        throw Error(ErrorCode::NotFound, "image not in dataset", image_ref);
    return static_cast<std::size_t>(it - images.begin());
}

nlohmann::json DatasetManifest::to_json() const {
    nlohmann::json imgs = nlohmann::json::array();
    for (const auto& img : images)
        imgs.push_back({{"image_ref", img.image_ref}, {"class_index", img.class_index}, {"sha256", img.file_sha256}});
    return {{"root", root.string()}, {"digest", digest}, {"class_labels", class_labels}, {"images", std::move(imgs)}};
}

DatasetManifest ingest(const fs::path& root) {
    if (!fs::is_directory(root)) throw Error(ErrorCode::MissingFile, "dataset root is not a directory", root.string());

    std::map<std::size_t, std::string> labels;
    DatasetManifest m;
    m.root = root;
    for (const auto& entry : fs::directory_iterator(root)) {
        const std::string name = entry.path().filename().string();
        if (name.starts_with(".") || !entry.is_directory()) continue;
        const auto sep = name.find('_');
        std::size_t index = 0;
        const char* end = name.data() + (sep == std::string::npos ? 0 : sep);
        const auto [ptr, ec] = std::from_chars(name.data(), end, index);
        if (sep == std::string::npos || sep == 0 || ec != std::errc{} || ptr != end || sep + 1 >= name.size())
            throw Error(ErrorCode::MalformedClassDir, "class directory must be named <index>_<label>", name);
        if (!labels.emplace(index, name.substr(sep + 1)).second)
            throw Error(ErrorCode::MalformedClassDir, "duplicate class index", name);

        for (const auto& file : fs::recursive_directory_iterator(entry.path())) {
            if (!file.is_regular_file()) continue;
            const auto rel = fs::relative(file.path(), root);
            bool hidden = false;
            for (const auto& part : rel) hidden = hidden || part.string().starts_with(".");
            if (hidden) continue;
            m.images.push_back({rel.generic_string(), index, sha256_file(file.path())});
        }
    }
    if (m.images.empty()) throw Error(ErrorCode::EmptyDataset, "dataset contains no images", root.string());

    std::sort(m.images.begin(), m.images.end(),
              [](const DatasetImage& a, const DatasetImage& b) { return a.image_ref < b.image_ref; });
    m.class_labels.assign(labels.rbegin()->first + 1, "");
    for (const auto& [index, label] : labels) m.class_labels[index] = label;

    std::string listing;
    for (const auto& img : m.images) {
        listing += img.image_ref;
        listing.push_back('\0');
        listing += img.file_sha256;
        listing.push_back('\n');
    }
    m.digest = sha256_hex(listing);
    return m;
}

ClassHierarchy resolve_hierarchy(const DatasetManifest& manifest, const fs::path& explicit_path) {
    ClassHierarchy h;
    if (!explicit_path.empty()) {
        h = load_hierarchy(explicit_path);
    } else if (fs::exists(manifest.root / "hierarchy.json")) {
        h = load_hierarchy(manifest.root / "hierarchy.json");
    } else {
        return ClassHierarchy::flat(manifest.class_labels);
    }
    if (h.leaf_count() < manifest.class_count())
        throw Error(ErrorCode::ShapeMismatch, "hierarchy has fewer leaves than the dataset has classes",
                    std::to_string(h.leaf_count()) + " < " + std::to_string(manifest.class_count()));
    return h;
}

}  // namespace cnnlens
