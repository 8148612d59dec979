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

#include <array>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "cnnlens/matrix.hpp"

namespace cnnlens {

using Bytes = std::vector<std::uint8_t>;

/// Four-character tag leading every binary matrix file.
using Magic = std::array<char, 4>;

inline constexpr Magic kConfidenceMagic{'C', 'O', 'N', 'F'};
inline constexpr Magic kDistanceMagic{'D', 'I', 'S', 'T'};
inline constexpr Magic kAttentionMagic{'A', 'T', 'T', 'N'};

/// magic + rows (u32) + cols (u32).
inline constexpr std::size_t kMatrixHeaderBytes = 12;

/// Exact on-disk size of a rows x cols float32 matrix.
constexpr std::uint64_t encoded_matrix_size(std::uint64_t rows, std::uint64_t cols) {
    return kMatrixHeaderBytes + rows * cols * 4;
}

/// Little-endian float32 matrix. Values are narrowed from double.
Bytes encode_matrix(const Matrix& m, Magic magic);

/// Throws ShapeMismatch on a truncated payload and InvalidArgument on a magic
/// mismatch.
Matrix decode_matrix(std::span<const std::uint8_t> bytes, Magic expected);

/// Reads the magic of an encoded matrix without decoding it.
Magic peek_magic(std::span<const std::uint8_t> bytes);

}  // namespace cnnlens
