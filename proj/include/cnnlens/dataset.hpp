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

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cnnlens/registry.hpp"

namespace cnnlens {

struct DatasetImage {
    std::string image_ref;  // path relative to the root, '/'-separated
    std::size_t class_index = 0;
    std::string file_sha256;
};

/// Images grouped in `<class_index>_<label>` directories under `root`.
struct DatasetManifest {
    std::filesystem::path root;
    std::vector<DatasetImage> images;  // sorted byte-wise by image_ref
    std::vector<std::string> class_labels;  // index -> label, "" when no directory
    std::string digest;

    [[nodiscard]] std::size_t class_count() const noexcept { return class_labels.size(); }
    [[nodiscard]] std::vector<std::size_t> image_classes() const;
    [[nodiscard]] std::filesystem::path path_of(std::size_t i) const;
    /// Index of `image_ref` or throws NotFound.
    [[nodiscard]] std::size_t find(const std::string& image_ref) const;

    [[nodiscard]] nlohmann::json to_json() const;
};

/// Throws MissingFile, MalformedClassDir, EmptyDataset.
DatasetManifest ingest(const std::filesystem::path& root);

/// `explicit_path` when given, else <root>/hierarchy.json when present, else
/// a single-root hierarchy over the dataset labels.
ClassHierarchy resolve_hierarchy(const DatasetManifest& manifest, const std::filesystem::path& explicit_path = {});

}  // namespace cnnlens
