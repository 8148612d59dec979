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

#include "cnnlens/error.hpp"

namespace cnnlens {

std::string_view to_string(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::InvalidArgument: return "InvalidArgument";
        case ErrorCode::MissingFile: return "MissingFile";
        case ErrorCode::DuplicateModelId: return "DuplicateModelId";
        case ErrorCode::UnresolvableTargetLayer: return "UnresolvableTargetLayer";
        case ErrorCode::UndecodableImage: return "UndecodableImage";
        case ErrorCode::ModelNotLoaded: return "ModelNotLoaded";
        case ErrorCode::EmptyDataset: return "EmptyDataset";
        case ErrorCode::MalformedClassDir: return "MalformedClassDir";
        case ErrorCode::GradientUnavailable: return "GradientUnavailable";
        case ErrorCode::NonFiniteLoss: return "NonFiniteLoss";
        case ErrorCode::UnknownMethod: return "UnknownMethod";
        case ErrorCode::ShapeMismatch: return "ShapeMismatch";
        case ErrorCode::EmptyClass: return "EmptyClass";
        case ErrorCode::EmptyInput: return "EmptyInput";
        case ErrorCode::IoFailure: return "IoFailure";
        case ErrorCode::StorageFull: return "StorageFull";
        case ErrorCode::NotPrecomputed: return "NotPrecomputed";
        case ErrorCode::UnknownModel: return "UnknownModel";
        case ErrorCode::InsufficientModels: return "InsufficientModels";
        case ErrorCode::ValidationError: return "ValidationError";
        case ErrorCode::UnknownTask: return "UnknownTask";
        case ErrorCode::UnknownColumn: return "UnknownColumn";
        case ErrorCode::WrongTaskKind: return "WrongTaskKind";
        case ErrorCode::NotFound: return "NotFound";
    }
    return "Unknown";
}

}  // namespace cnnlens
