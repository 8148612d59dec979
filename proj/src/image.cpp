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

#include "cnnlens/image.hpp"

#include <algorithm>
#include <cmath>
#include <csetjmp>
#include <cstring>
#include <fstream>
#include <iterator>

#include <png.h>

#include "cnnlens/error.hpp"

namespace cnnlens {

namespace {

struct ReadCursor {
    std::span<const std::uint8_t> bytes;
    std::size_t offset = 0;
};

void read_callback(png_structp png, png_bytep out, png_size_t len) {
    auto* cur = static_cast<ReadCursor*>(png_get_io_ptr(png));
    if (cur->offset + len > cur->bytes.size()) png_error(png, "truncated PNG");
    std::memcpy(out, cur->bytes.data() + cur->offset, len);
    cur->offset += len;
}

void write_callback(png_structp png, png_bytep data, png_size_t len) {
    auto* out = static_cast<Bytes*>(png_get_io_ptr(png));
    out->insert(out->end(), data, data + len);
}

void flush_callback(png_structp) {}

void silent_warning(png_structp, png_const_charp) {}

// Interpolation taps for one output coordinate.
struct Taps {
    std::size_t lo;
    std::size_t hi;
    double frac;
};

std::vector<Taps> bilinear_taps(std::size_t out_len, std::size_t in_len) {
    std::vector<Taps> taps(out_len);
    const double scale = static_cast<double>(in_len) / static_cast<double>(out_len);
    for (std::size_t i = 0; i < out_len; ++i) {
        double src = (static_cast<double>(i) + 0.5) * scale - 0.5;
        src = std::clamp(src, 0.0, static_cast<double>(in_len - 1));
        const auto lo = static_cast<std::size_t>(std::floor(src));
        const std::size_t hi = std::min(lo + 1, in_len - 1);
        taps[i] = {lo, hi, src - static_cast<double>(lo)};
    }
    return taps;
}

std::size_t nearest_index(std::size_t i, std::size_t out_len, std::size_t in_len) {
    const double src = (static_cast<double>(i) + 0.5) * static_cast<double>(in_len) /
                       static_cast<double>(out_len);
    return std::min(static_cast<std::size_t>(src), in_len - 1);
}

}  // namespace

RgbImage decode_png(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < 8 || png_sig_cmp(bytes.data(), 0, 8) != 0)
        throw Error(ErrorCode::UndecodableImage, "not a PNG stream");

    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, silent_warning);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw Error(ErrorCode::UndecodableImage, "libpng allocation failed");
    }

    ReadCursor cursor{bytes, 0};
    RgbImage image;
    std::vector<png_bytep> rows;
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw Error(ErrorCode::UndecodableImage, "corrupt PNG stream");
    }
    png_set_read_fn(png, &cursor, read_callback);
    png_read_info(png, info);

    const png_byte color = png_get_color_type(png, info);
    const png_byte depth = png_get_bit_depth(png, info);
    if (depth == 16) png_set_strip_16(png);
    if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
    if (color == PNG_COLOR_TYPE_GRAY || color == PNG_COLOR_TYPE_GRAY_ALPHA) png_set_gray_to_rgb(png);
    png_set_strip_alpha(png);
    png_read_update_info(png, info);

    image.width = png_get_image_width(png, info);
    image.height = png_get_image_height(png, info);
    image.pixels.assign(image.width * image.height * 3, 0);
    rows.resize(image.height);
    for (std::size_t y = 0; y < image.height; ++y) rows[y] = image.pixels.data() + y * image.width * 3;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    return image;
}

Bytes encode_png(const RgbImage& image) {
    if (image.width == 0 || image.height == 0 || image.pixels.size() != image.width * image.height * 3)
        throw Error(ErrorCode::ShapeMismatch, "image buffer does not match its dimensions");
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, silent_warning);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_write_struct(&png, &info);
        throw Error(ErrorCode::IoFailure, "libpng allocation failed");
    }
    Bytes out;
    std::vector<png_bytep> rows(image.height);
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw Error(ErrorCode::IoFailure, "PNG encoding failed");
    }
    png_set_write_fn(png, &out, write_callback, flush_callback);
    png_set_IHDR(png, info, static_cast<png_uint_32>(image.width), static_cast<png_uint_32>(image.height), 8,
                 PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    for (std::size_t y = 0; y < image.height; ++y)
        rows[y] = const_cast<png_bytep>(image.pixels.data() + y * image.width * 3);
    png_write_image(png, rows.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
    return out;
}

Bytes read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::MissingFile, "cannot open file", path.string());
    return Bytes(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

RgbImage read_image(const std::filesystem::path& path) {
    const Bytes bytes = read_file(path);
    try {
        return decode_png(bytes);
    } catch (const Error& e) {
        throw Error(e.code(), e.what(), path.string());
    }
}

void write_image(const std::filesystem::path& path, const RgbImage& image) {
    const Bytes bytes = encode_png(image);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoFailure, "cannot write image", path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error(ErrorCode::IoFailure, "short write", path.string());
}

Matrix resample(const Matrix& map, std::size_t rows, std::size_t cols, Interpolation mode) {
    if (map.empty() || rows == 0 || cols == 0)
        throw Error(ErrorCode::ShapeMismatch, "cannot resample an empty map");
    if (map.rows() == rows && map.cols() == cols) return map;
    Matrix out(rows, cols);
    if (mode == Interpolation::Nearest) {
        for (std::size_t y = 0; y < rows; ++y) {
            const std::size_t sy = nearest_index(y, rows, map.rows());
            for (std::size_t x = 0; x < cols; ++x) out(y, x) = map(sy, nearest_index(x, cols, map.cols()));
        }
        return out;
    }
    const auto ty = bilinear_taps(rows, map.rows());
    const auto tx = bilinear_taps(cols, map.cols());
    for (std::size_t y = 0; y < rows; ++y) {
        const auto& [y0, y1, fy] = ty[y];
        for (std::size_t x = 0; x < cols; ++x) {
            const auto& [x0, x1, fx] = tx[x];
            const double top = map(y0, x0) * (1.0 - fx) + map(y0, x1) * fx;
            const double bottom = map(y1, x0) * (1.0 - fx) + map(y1, x1) * fx;
            out(y, x) = top * (1.0 - fy) + bottom * fy;
        }
    }
    return out;
}

Matrix resample_adjoint(const Matrix& grad, std::size_t in_rows, std::size_t in_cols) {
    if (grad.rows() == in_rows && grad.cols() == in_cols) return grad;
    Matrix out(in_rows, in_cols);
    const auto ty = bilinear_taps(grad.rows(), in_rows);
    const auto tx = bilinear_taps(grad.cols(), in_cols);
    for (std::size_t y = 0; y < grad.rows(); ++y) {
        const auto& [y0, y1, fy] = ty[y];
        for (std::size_t x = 0; x < grad.cols(); ++x) {
            const auto& [x0, x1, fx] = tx[x];
            const double g = grad(y, x);
            out(y0, x0) += g * (1.0 - fy) * (1.0 - fx);
            out(y0, x1) += g * (1.0 - fy) * fx;
            out(y1, x0) += g * fy * (1.0 - fx);
            out(y1, x1) += g * fy * fx;
        }
    }
    return out;
}

RgbImage resize_image(const RgbImage& image, std::size_t width, std::size_t height, Interpolation mode) {
    if (image.width == width && image.height == height) return image;
    RgbImage out(width, height);
    for (std::size_t c = 0; c < 3; ++c) {
        Matrix plane(image.height, image.width);
        for (std::size_t y = 0; y < image.height; ++y)
            for (std::size_t x = 0; x < image.width; ++x) plane(y, x) = image.at(y, x, c);
        const Matrix scaled = resample(plane, height, width, mode);
        for (std::size_t y = 0; y < height; ++y)
            for (std::size_t x = 0; x < width; ++x)
                out.at(y, x, c) = static_cast<std::uint8_t>(std::clamp(std::lround(scaled(y, x)), 0L, 255L));
    }
    return out;
}

}  // namespace cnnlens
