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

#include <iostream>
#include <mutex>
#include <string_view>

namespace cnnlens::log {

enum class Level { Debug, Info, Warn, Error, Off };

inline Level& threshold() {
    static Level level = Level::Warn;
    return level;
}

inline void write(Level level, std::string_view tag, std::string_view msg) {
    if (level < threshold()) return;
    static std::mutex mu;
    std::lock_guard lock(mu);
    std::clog << '[' << tag << "] " << msg << '\n';
}

inline void info(std::string_view msg) { write(Level::Info, "info", msg); }
inline void warn(std::string_view msg) { write(Level::Warn, "warn", msg); }
inline void error(std::string_view msg) { write(Level::Error, "error", msg); }

}  // namespace cnnlens::log
