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

#include "cnnlens/http_server.hpp"

#include <charconv>

#include <httplib.h>

#include "cnnlens/error.hpp"
#include "cnnlens/log.hpp"

namespace cnnlens {

int http_status(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::InvalidArgument:
        case ErrorCode::ValidationError:
        case ErrorCode::UnknownMethod:
        case ErrorCode::UnknownColumn: return 400;
        case ErrorCode::UnknownModel:
        case ErrorCode::UnknownTask:
        case ErrorCode::NotFound:
        case ErrorCode::MissingFile: return 404;
        case ErrorCode::WrongTaskKind:
        case ErrorCode::NotPrecomputed:
        case ErrorCode::InsufficientModels: return 409;
        case ErrorCode::StorageFull: return 507;
        default: return 500;
    }
}

namespace {

constexpr const char* kJson = "application/json";

void send_json(httplib::Response& res, const nlohmann::json& body, int status = 200) {
    res.status = status;
    res.set_content(body.dump(), kJson);
}

void send_error(httplib::Response& res, ErrorCode code, const std::string& message, const std::string& detail) {
    send_json(res, {{"code", to_string(code)}, {"message", message}, {"detail", detail}}, http_status(code));
}

std::size_t size_param(const httplib::Request& req, const std::string& name, std::size_t fallback) {
    if (!req.has_param(name)) return fallback;
    const std::string v = req.get_param_value(name);
    std::size_t out = 0;
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc{} || ptr != v.data() + v.size())
        throw Error(ErrorCode::InvalidArgument, "query parameter must be a non-negative integer", name + "=" + v);
    return out;
}

std::optional<std::string> text_param(const httplib::Request& req, const std::string& name) {
    if (!req.has_param(name)) return std::nullopt;
    return req.get_param_value(name);
}

template <class Fn>
httplib::Server::Handler guarded(Fn fn) {
    return [fn](const httplib::Request& req, httplib::Response& res) {
        try {
            fn(req, res);
        } catch (const Error& e) {
            send_error(res, e.code(), e.what(), e.detail());
        } catch (const nlohmann::json::exception& e) {
            send_error(res, ErrorCode::InvalidArgument, "malformed JSON", e.what());
        } catch (const std::exception& e) {
            log::error(std::string("request failed: ") + e.what());
            send_json(res, {{"code", "Internal"}, {"message", e.what()}, {"detail", ""}}, 500);
        }
    };
}

}  // namespace

HttpServer::HttpServer(ComparisonService& service)
    : service_(service), server_(std::make_unique<httplib::Server>()) {
    install_routes();
}

HttpServer::~HttpServer() { stop(); }

void HttpServer::install_routes() {
    auto& s = *server_;
    s.Get("/models", guarded([this](const httplib::Request& req, httplib::Response& res) {
        send_json(res, service_.list_models(size_param(req, "page", 1), size_param(req, "page_size", 0)));
    }));
    s.Get("/models/:id/projection", guarded([this](const httplib::Request& req, httplib::Response& res) {
        send_json(res, service_.get_projection(req.path_params.at("id")));
    }));
    s.Get("/stats/classes", guarded([this](const httplib::Request& req, httplib::Response& res) {
        send_json(res, service_.get_class_stats(size_param(req, "k", 6)));
    }));
    s.Post("/tasks", guarded([this](const httplib::Request& req, httplib::Response& res) {
        const auto id = service_.create_task(nlohmann::json::parse(req.body));
        send_json(res, service_.get_task(id), 202);
    }));
    s.Get("/tasks/:id", guarded([this](const httplib::Request& req, httplib::Response& res) {
        send_json(res, service_.get_task(req.path_params.at("id")));
    }));
    s.Get("/tasks/:id/results", guarded([this](const httplib::Request& req, httplib::Response& res) {
        ResultQuery q;
        q.sort_by = text_param(req, "sort_by").value_or("");
        const auto order = text_param(req, "order").value_or("desc");
        if (order != "asc" && order != "desc")
            throw Error(ErrorCode::InvalidArgument, "order must be asc or desc", order);
        q.descending = order == "desc";
        q.filter = text_param(req, "filter").value_or("");
        q.page = size_param(req, "page", 1);
        q.page_size = size_param(req, "page_size", 0);
        send_json(res, service_.get_task_results(req.path_params.at("id"), q));
    }));
    s.Get("/tasks/:id/similarity", guarded([this](const httplib::Request& req, httplib::Response& res) {
        const auto& id = req.path_params.at("id");
        if (text_param(req, "format").value_or("json") == "png") {
            const auto png = service_.get_similarity_png(id, text_param(req, "measure"));
            res.set_content(std::string(png.begin(), png.end()), "image/png");
            return;
        }
        send_json(res, service_.get_similarity(id, text_param(req, "measure")));
    }));
    s.Patch("/tasks/:id/threshold", guarded([this](const httplib::Request& req, httplib::Response& res) {
        const auto body = nlohmann::json::parse(req.body);
        if (!body.contains("threshold") || !body.at("threshold").is_number())
            throw Error(ErrorCode::ValidationError, "body must contain a numeric threshold");
        send_json(res, service_.set_threshold(req.path_params.at("id"), body.at("threshold").get<double>()));
    }));
    s.Get("/artifacts/:key", guarded([this](const httplib::Request& req, httplib::Response& res) {
        auto [bytes, type] = service_.get_artifact(req.path_params.at("key"));
        res.set_content(std::string(bytes.begin(), bytes.end()), type);
    }));
}

bool HttpServer::listen(const std::string& host, int port) { return server_->listen(host, port); }

int HttpServer::bind_any(const std::string& host) { return server_->bind_to_any_port(host); }

bool HttpServer::serve() { return server_->listen_after_bind(); }

void HttpServer::stop() {
    if (server_->is_running()) server_->stop();
}

bool HttpServer::wait_until_ready() const {
    server_->wait_until_ready();
    return server_->is_running();
}

}  // namespace cnnlens
