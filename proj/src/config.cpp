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

#include "cnnlens/config.hpp"

#include <charconv>
#include <cstdlib>
#include <fstream>

#include "cnnlens/error.hpp"

namespace cnnlens {

namespace fs = std::filesystem;

namespace {

fs::path resolve(const fs::path& base, const std::string& value) {
    if (value.empty()) return {};
    const fs::path p(value);
    return p.is_absolute() || base.empty() ? p : base / p;
}

}  // namespace

Config Config::from_json(const nlohmann::json& j, const fs::path& base_dir) {
    Config c;
    try {
        c.host = j.value("host", c.host);
        c.port = j.value("port", c.port);
        c.store_root = resolve(base_dir, j.value("store_root", c.store_root.string()));
        c.registry_path = resolve(base_dir, j.value("registry", std::string()));
        c.dataset_root = resolve(base_dir, j.value("dataset", std::string()));
        c.hierarchy_path = resolve(base_dir, j.value("hierarchy", std::string()));
        if (j.contains("explain")) c.explain = ExplainParams::from_json(j.at("explain"));
        if (j.contains("projection")) {
            const auto& p = j.at("projection");
            c.projection.seed = p.value("seed", c.projection.seed);
            c.projection.perplexity = p.value("perplexity", c.projection.perplexity);
            c.projection.iterations = p.value("iterations", c.projection.iterations);
        }
        c.default_threshold = j.value("threshold", c.default_threshold);
        c.max_images_per_class = j.value("max_images_per_class", c.max_images_per_class);
        c.page_size = j.value("page_size", c.page_size);
        c.jobs = j.value("jobs", c.jobs);
        c.sample_image = j.value("sample_image", c.sample_image);
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::InvalidArgument, "malformed config", e.what());
    }
    if (c.page_size == 0) throw Error(ErrorCode::InvalidArgument, "page_size must be positive");
    return c;
}

Config Config::load(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::MissingFile, "config file not found", path.string());
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::InvalidArgument, "config is not valid JSON", e.what());
    }
    return from_json(j, path.parent_path());
}

void Config::apply_env() {
    if (const char* v = std::getenv("CNNLENS_PORT")) {
        int port = 0;
        const std::string_view s(v);
        const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), port);
        if (ec != std::errc{} || ptr != s.data() + s.size() || port < 0 || port > 65535)
            throw Error(ErrorCode::InvalidArgument, "CNNLENS_PORT is not a valid port", v);
        this->port = port;
    }
    if (const char* v = std::getenv("CNNLENS_STORE_ROOT")) store_root = v;
    if (const char* v = std::getenv("CNNLENS_REGISTRY")) registry_path = v;
}

}  // namespace cnnlens
