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

#include <csignal>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "cnnlens/config.hpp"
#include "cnnlens/dataset.hpp"
#include "cnnlens/error.hpp"
#include "cnnlens/http_server.hpp"
#include "cnnlens/log.hpp"
#include "cnnlens/pipeline.hpp"
#include "cnnlens/registry.hpp"
#include "cnnlens/service.hpp"
#include "cnnlens/store.hpp"
#include "cnnlens/toy.hpp"

namespace {

using namespace cnnlens;

std::vector<std::string> split_csv(const std::string& text) {
    std::vector<std::string> out;
    std::stringstream ss(text);
    for (std::string item; std::getline(ss, item, ',');)
        if (!item.empty()) out.push_back(item);
    return out;
}

Config base_config(const std::string& config_path) {
    Config c = config_path.empty() ? Config{} : Config::load(config_path);
    c.apply_env();
    return c;
}

HttpServer* g_server = nullptr;

void on_signal(int) {
    if (g_server) g_server->stop();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"cnnlens: comparative saliency analysis for CNN classifiers"};
    app.require_subcommand(1);
    bool verbose = false;
    app.add_flag("-v,--verbose", verbose, "Log informational messages");

    std::string config_path, dataset, registry, store_root, hierarchy, models, sample, host, out_dir;
    std::size_t jobs = 0;
    std::uint64_t seed = 0;
    double perplexity = 0.0;
    int port = -1;
    bool no_examples = false;
    std::size_t per_class = 50;

    auto* ingest_cmd = app.add_subcommand("ingest", "Scan a dataset directory and print its manifest");
    ingest_cmd->add_option("--dataset", dataset, "Dataset root")->required();

    auto* pre = app.add_subcommand("precompute", "Build every overview artifact for the registered models");
    pre->add_option("--config", config_path, "Config file");
    pre->add_option("--dataset", dataset, "Dataset root");
    pre->add_option("--registry", registry, "Registry manifest");
    pre->add_option("--store", store_root, "Artifact store root");
    pre->add_option("--hierarchy", hierarchy, "Class hierarchy JSON");
    pre->add_option("--models", models, "Comma-separated model ids");
    pre->add_option("--jobs", jobs, "Parallel workers");
    pre->add_option("--seed", seed, "Projection seed");
    pre->add_option("--perplexity", perplexity, "Projection perplexity");
    pre->add_option("--sample-image", sample, "Dataset image used for the method examples");
    pre->add_flag("--no-examples", no_examples, "Skip the per-method example explanations");

    auto* serve = app.add_subcommand("serve", "Serve the comparison API over HTTP");
    serve->add_option("--config", config_path, "Config file");
    serve->add_option("--dataset", dataset, "Dataset root");
    serve->add_option("--registry", registry, "Registry manifest");
    serve->add_option("--store", store_root, "Artifact store root");
    serve->add_option("--hierarchy", hierarchy, "Class hierarchy JSON");
    serve->add_option("--host", host, "Bind address");
    serve->add_option("--port", port, "Port");

    auto* toy_cmd = app.add_subcommand("make-toy", "Generate the synthetic dataset and train two toy models");
    toy_cmd->add_option("--out", out_dir, "Output directory")->required();
    toy_cmd->add_option("--per-class", per_class, "Images per class");

    CLI11_PARSE(app, argc, argv);
    if (verbose) log::threshold() = log::Level::Info;

    try {
        if (*ingest_cmd) {
            const auto manifest = ingest(dataset);
            std::cout << manifest.to_json().dump(2) << '\n';
            return 0;
        }

        if (*toy_cmd) {
            toy::ToyOptions options;
            options.per_class = per_class;
            const auto ws = toy::make_toy_workspace(out_dir, options);
            std::cout << "dataset=" << ws.dataset_root.string() << "\nregistry=" << ws.registry_path.string()
                      << "\ntrain_seconds=" << ws.train_seconds << '\n';
            for (std::size_t i = 0; i < ws.model_ids.size(); ++i)
                std::cout << "model=" << ws.model_ids[i] << " train_accuracy=" << ws.reports[i].train_accuracy
                          << '\n';
            return 0;
        }

        Config config = base_config(config_path);
        if (!dataset.empty()) config.dataset_root = dataset;
        if (!registry.empty()) config.registry_path = registry;
        if (!store_root.empty()) config.store_root = store_root;
        if (!hierarchy.empty()) config.hierarchy_path = hierarchy;
        if (config.dataset_root.empty() || config.registry_path.empty())
            throw Error(ErrorCode::InvalidArgument, "a dataset and a registry are required");

        const auto manifest = ingest(config.dataset_root);
        const auto hier = resolve_hierarchy(manifest, config.hierarchy_path);
        auto records = load_registry(config.registry_path);
        ArtifactStore store(config.store_root);

        if (*pre) {
            PrecomputeOptions options;
            options.models = split_csv(models);
            options.jobs = jobs ? jobs : config.jobs;
            options.projection = config.projection;
            if (pre->count("--seed")) options.projection.seed = seed;
            if (pre->count("--perplexity")) options.projection.perplexity = perplexity;
            options.explain = config.explain;
            options.sample_image = sample.empty() ? config.sample_image : sample;
            options.threshold = config.default_threshold;
            options.examples = !no_examples;
            options.progress = &std::cout;
            const auto summary = precompute(manifest, records, hier, store, options);
            std::cout << "summary " << summary.to_json().dump() << '\n';
            return summary.exit_code();
        }

        if (*serve) {
            if (!host.empty()) config.host = host;
            if (port >= 0) config.port = port;
            ServiceOptions options;
            options.explain = config.explain;
            options.projection = config.projection;
            options.default_threshold = config.default_threshold;
            options.max_images_per_class = config.max_images_per_class;
            options.page_size = config.page_size;
            ComparisonService service(manifest, hier, std::move(records), store, options);
            HttpServer server(service);
            g_server = &server;
            std::signal(SIGINT, on_signal);
            std::signal(SIGTERM, on_signal);
            std::cout << "listening on " << config.host << ':' << config.port << std::endl;
            const bool ok = server.listen(config.host, config.port);
            g_server = nullptr;
            return ok ? 0 : 1;
        }
    } catch (const Error& e) {
        std::cerr << "error: " << to_string(e.code()) << ": " << e.what();
        if (!e.detail().empty()) std::cerr << " (" << e.detail() << ')';
        std::cerr << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
