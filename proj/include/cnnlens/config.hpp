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

#include <nlohmann/json.hpp>

#include "cnnlens/analytics.hpp"
#include "cnnlens/explain.hpp"

namespace cnnlens {

struct Config {
    std::string host = "127.0.0.1";
    int port = 8080;
    std::filesystem::path store_root = "store";
    std::filesystem::path registry_path;
    std::filesystem::path dataset_root;
    std::filesystem::path hierarchy_path;

    ExplainParams explain;
    ProjectionOptions projection;
    double default_threshold = 0.5;
    std::size_t max_images_per_class = 8;
    std::size_t page_size = 20;
    std::size_t jobs = 1;
    /// Dataset image used for the per-method examples; empty means the first.
    std::string sample_image;

    /// Relative paths in the file resolve against its directory.
    /// Throws MissingFile, InvalidArgument.
    static Config load(const std::filesystem::path& path);
    static Config from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});

    /// CNNLENS_PORT, CNNLENS_STORE_ROOT and CNNLENS_REGISTRY take precedence.
    void apply_env();
};

}  // namespace cnnlens
