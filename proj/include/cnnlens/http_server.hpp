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

#include <memory>
#include <string>

#include "cnnlens/error.hpp"
#include "cnnlens/service.hpp"

namespace httplib {
class Server;
}

namespace cnnlens {

/// HTTP status used for an error code.
int http_status(ErrorCode code) noexcept;

/// JSON routes over a ComparisonService.
class HttpServer {
  public:
    explicit HttpServer(ComparisonService& service);
    ~HttpServer();

    HttpServer(const HttpServer&) = delete;
    HttpServer& operator=(const HttpServer&) = delete;

    /// Binds and serves until stop(). Port 0 picks a free port.
    bool listen(const std::string& host, int port);
    /// Binds to a free port and returns it without blocking.
    int bind_any(const std::string& host);
    /// Serves on a socket bound by bind_any. Blocks.
    bool serve();
    void stop();
    bool wait_until_ready() const;

  private:
    void install_routes();

    ComparisonService& service_;
    std::unique_ptr<httplib::Server> server_;
};

}  // namespace cnnlens
