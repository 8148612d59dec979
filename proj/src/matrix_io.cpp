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

#include "cnnlens/matrix_io.hpp"

#include <bit>
#include <cstring>
#include <limits>
#include <string>

#include "cnnlens/error.hpp"

namespace cnnlens {

namespace {

void put_u32(Bytes& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_u32(const std::uint8_t* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

}  // namespace

Bytes encode_matrix(const Matrix& m, Magic magic) {
    if (m.rows() > std::numeric_limits<std::uint32_t>::max() ||
        m.cols() > std::numeric_limits<std::uint32_t>::max())
        throw Error(ErrorCode::InvalidArgument, "matrix too large for 32-bit header");
    Bytes out;
    out.reserve(encoded_matrix_size(m.rows(), m.cols()));
    out.insert(out.end(), magic.begin(), magic.end());
    put_u32(out, static_cast<std::uint32_t>(m.rows()));
    put_u32(out, static_cast<std::uint32_t>(m.cols()));
    for (double v : m.data()) put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
    return out;
}

Magic peek_magic(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < kMatrixHeaderBytes)
        throw Error(ErrorCode::ShapeMismatch, "matrix payload shorter than header");
    Magic magic{};
    std::memcpy(magic.data(), bytes.data(), 4);
    return magic;
}

Matrix decode_matrix(std::span<const std::uint8_t> bytes, Magic expected) {
    const Magic magic = peek_magic(bytes);
    if (magic != expected)
        throw Error(ErrorCode::InvalidArgument, "unexpected matrix magic",
                    std::string(magic.begin(), magic.end()));
    const std::uint32_t rows = get_u32(bytes.data() + 4);
    const std::uint32_t cols = get_u32(bytes.data() + 8);
    if (bytes.size() != encoded_matrix_size(rows, cols))
        throw Error(ErrorCode::ShapeMismatch, "matrix payload size does not match header");
    Matrix m(rows, cols);
    const std::uint8_t* p = bytes.data() + kMatrixHeaderBytes;
    for (double& v : m.data()) {
        v = static_cast<double>(std::bit_cast<float>(get_u32(p)));
        p += 4;
    }
    return m;
}

}  // namespace cnnlens
