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

#include <stdexcept>
#include <string>
#include <string_view>

namespace cnnlens {

enum class ErrorCode {
    InvalidArgument,
    MissingFile,
    DuplicateModelId,
    UnresolvableTargetLayer,
    UndecodableImage,
    ModelNotLoaded,
    EmptyDataset,
    MalformedClassDir,
    GradientUnavailable,
    NonFiniteLoss,
    UnknownMethod,
    ShapeMismatch,
    EmptyClass,
    EmptyInput,
    IoFailure,
    StorageFull,
    NotPrecomputed,
    UnknownModel,
    InsufficientModels,
    ValidationError,
    UnknownTask,
    UnknownColumn,
    WrongTaskKind,
    NotFound,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Every failure surfaced by the library carries a machine-readable code plus
/// an optional detail string (the offending id, limit, path, ...).
class Error : public std::runtime_error {
  public:
    Error(ErrorCode code, const std::string& message, std::string detail = {})
        : std::runtime_error(message), code_(code), detail_(std::move(detail)) {}

    [[nodiscard]] ErrorCode code() const noexcept { return code_; }
    [[nodiscard]] const std::string& detail() const noexcept { return detail_; }

  private:
    ErrorCode code_;
    std::string detail_;
};

}  // namespace cnnlens
