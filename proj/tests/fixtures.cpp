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

#include "fixtures.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>
#include <unistd.h>

#include "cnnlens/nn/layers.hpp"

namespace fixture {

namespace fs = std::filesystem;

TempDir::TempDir(const std::string& tag) {
    static std::atomic<int> counter{0};
    std::ostringstream name;
    name << "cnnlens-" << tag << '-' << ::getpid() << '-' << counter++;
    path_ = fs::temp_directory_path() / name.str();
    fs::remove_all(path_);
    fs::create_directories(path_);
}

TempDir::~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
}

ModelRecord make_record(nn::Network net, const std::string& target_layer, const std::string& id) {
    ModelRecord rec;
    rec.model_id = id;
    rec.display_name = id;
    rec.target_layer = target_layer;
    rec.input_height = net.input_shape().h;
    rec.input_width = net.input_shape().w;
    cnnlens::attach_network(rec, std::make_shared<const nn::Network>(std::move(net)));
    return rec;
}

ModelRecord two_conv_model(std::size_t classes, std::size_t size) {
    auto conv1 = std::make_unique<nn::Conv2d>("conv1", 3, 4, 3, 1, true);
    auto conv2 = std::make_unique<nn::Conv2d>("conv2", 4, 3, 3, 1, true);
    auto fc = std::make_unique<nn::Dense>("fc", 3, classes, true);
    std::size_t i = 0;
    for (double& w : conv1->params()) w = 0.35 * std::sin(1.7 * static_cast<double>(i++) + 0.3);
    i = 0;
    for (double& w : conv2->params()) w = 0.3 * std::cos(1.3 * static_cast<double>(i++) + 0.9) + 0.05;
    i = 0;
    for (double& w : fc->params()) w = 0.8 * std::sin(2.1 * static_cast<double>(i++) + 0.4);

    std::vector<std::unique_ptr<nn::Layer>> layers;
    layers.push_back(std::move(conv1));
    layers.push_back(std::make_unique<nn::Relu>("relu1"));
    layers.push_back(std::move(conv2));
    layers.push_back(std::make_unique<nn::Relu>("relu2"));
    layers.push_back(std::make_unique<nn::GlobalAvgPool>("gap"));
    layers.push_back(std::move(fc));
    return make_record(nn::Network(nn::Shape{3, size, size}, std::move(layers)), "conv2");
}

nn::Tensor random_tensor(nn::Shape shape, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    nn::Tensor t(shape);
    for (double& v : t.data) v = u(rng);
    return t;
}

Matrix random_matrix(std::size_t rows, std::size_t cols, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Matrix m(rows, cols);
    for (double& v : m.data()) v = u(rng);
    return m;
}

RgbImage random_image(std::size_t width, std::size_t height, std::mt19937_64& rng) {
    std::uniform_int_distribution<int> u(0, 255);
    RgbImage img(width, height);
    for (auto& p : img.pixels) p = static_cast<std::uint8_t>(u(rng));
    return img;
}

Matrix random_confidence(std::size_t m, std::size_t n, std::mt19937_64& rng) {
    std::exponential_distribution<double> e(1.0);
    Matrix c(m, n);
    for (std::size_t i = 0; i < m; ++i) {
        double total = 0.0;
        for (std::size_t j = 0; j < n; ++j) total += c(i, j) = e(rng);
        for (std::size_t j = 0; j < n; ++j) c(i, j) /= total;
    }
    return c;
}

double central_difference(const std::function<double(double)>& f, double h) { return (f(h) - f(-h)) / (2.0 * h); }

double logit_from_activation(const ModelRecord& model, const nn::Tensor& activation, std::size_t target) {
    return model.net().forward_from(model.target_index, activation).data.at(target);
}

nn::Tensor fd_activation_gradient(const ModelRecord& model, const nn::Tensor& activation, std::size_t target,
                                  double h) {
    nn::Tensor grad(activation.shape);
    nn::Tensor probe = activation;
    for (std::size_t i = 0; i < activation.data.size(); ++i) {
        grad.data[i] = central_difference(
            [&](double d) {
                probe.data[i] = activation.data[i] + d;
                const double v = logit_from_activation(model, probe, target);
                probe.data[i] = activation.data[i];
                return v;
            },
            h);
    }
    return grad;
}

Matrix normalize_oracle(const Matrix& m) {
    double lo = m(0, 0), hi = m(0, 0);
    for (std::size_t r = 0; r < m.rows(); ++r)
        for (std::size_t c = 0; c < m.cols(); ++c) {
            lo = std::min(lo, m(r, c));
            hi = std::max(hi, m(r, c));
        }
    Matrix out(m.rows(), m.cols());
    if (!(hi > lo)) return out;
    for (std::size_t r = 0; r < m.rows(); ++r)
        for (std::size_t c = 0; c < m.cols(); ++c) out(r, c) = (m(r, c) - lo) / (hi - lo);
    return out;
}

Matrix cam_oracle(const nn::Tensor& activation, const std::vector<double>& weights, std::size_t rows,
                  std::size_t cols) {
    Matrix raw(activation.shape.h, activation.shape.w);
    for (std::size_t y = 0; y < activation.shape.h; ++y)
        for (std::size_t x = 0; x < activation.shape.w; ++x) {
            double s = 0.0;
            for (std::size_t k = 0; k < weights.size(); ++k) s += weights[k] * activation.at(k, y, x);
            raw(y, x) = std::max(s, 0.0);
        }
    return normalize_oracle(bilinear_oracle(raw, rows, cols));
}

Matrix distance_oracle(std::span<const std::size_t> img_classes, const Matrix& conf, std::size_t n) {
    Matrix dist_mat(n, n);
    Matrix dist_mat_count(n, n);
    for (std::size_t i = 0; i < img_classes.size(); ++i) {
        const std::size_t cur_class = img_classes[i];
        for (std::size_t comp_class = 0; comp_class < n; ++comp_class) {
            if (comp_class == cur_class) continue;
            const double conf_score = conf(i, comp_class);
            dist_mat(cur_class, comp_class) += 1.0 - conf_score;
            dist_mat_count(cur_class, comp_class) += 1.0;
        }
    }
    for (std::size_t a = 0; a < n; ++a)
        for (std::size_t b = 0; b < n; ++b)
            if (dist_mat_count(a, b) > 0) dist_mat(a, b) /= dist_mat_count(a, b);
    Matrix out(n, n);
    for (std::size_t a = 0; a < n; ++a)
        for (std::size_t b = 0; b < n; ++b) out(a, b) = (dist_mat(a, b) + dist_mat(b, a)) / 2.0;
    return out;
}

double l1_oracle(const Matrix& a, const Matrix& b) {
    double s = 0.0;
    for (std::size_t r = 0; r < a.rows(); ++r)
        for (std::size_t c = 0; c < a.cols(); ++c) s += std::fabs(a(r, c) - b(r, c));
    return 1.0 - s / static_cast<double>(a.rows() * a.cols());
}

double mse_oracle(const Matrix& a, const Matrix& b) {
    double s = 0.0;
    for (std::size_t r = 0; r < a.rows(); ++r)
        for (std::size_t c = 0; c < a.cols(); ++c) s += (a(r, c) - b(r, c)) * (a(r, c) - b(r, c));
    return 1.0 - s / static_cast<double>(a.rows() * a.cols());
}

double ssim_oracle(const Matrix& a, const Matrix& b) {
    const int wr = static_cast<int>(std::min<std::size_t>(11, a.rows()));
    const int wc = static_cast<int>(std::min<std::size_t>(11, a.cols()));
    std::vector<std::vector<double>> w(wr, std::vector<double>(wc));
    double total = 0.0;
    for (int i = 0; i < wr; ++i)
        for (int j = 0; j < wc; ++j) {
            const double dy = i - (wr - 1) / 2.0;
            const double dx = j - (wc - 1) / 2.0;
            total += w[i][j] = std::exp(-(dy * dy + dx * dx) / (2.0 * 1.5 * 1.5));
        }
    const double c1 = 1e-4, c2 = 9e-4;
    double sum = 0.0;
    int count = 0;
    for (int r = 0; r + wr <= static_cast<int>(a.rows()); ++r)
        for (int c = 0; c + wc <= static_cast<int>(a.cols()); ++c) {
            double ma = 0, mb = 0;
            for (int i = 0; i < wr; ++i)
                for (int j = 0; j < wc; ++j) {
                    ma += w[i][j] / total * a(r + i, c + j);
                    mb += w[i][j] / total * b(r + i, c + j);
                }
            double va = 0, vb = 0, cov = 0;
            for (int i = 0; i < wr; ++i)
                for (int j = 0; j < wc; ++j) {
                    const double da = a(r + i, c + j) - ma;
                    const double db = b(r + i, c + j) - mb;
                    va += w[i][j] / total * da * da;
                    vb += w[i][j] / total * db * db;
                    cov += w[i][j] / total * da * db;
                }
            sum += (2 * ma * mb + c1) * (2 * cov + c2) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
            ++count;
        }
    return sum / count;
}

namespace {

std::uint64_t hash_of(const Matrix& m) {
    double cells[8][8] = {};
    const double ch = static_cast<double>(m.rows()) / 8.0;
    const double cw = static_cast<double>(m.cols()) / 8.0;
    for (int u = 0; u < 8; ++u)
        for (int v = 0; v < 8; ++v) {
            double acc = 0.0;
            for (std::size_t r = 0; r < m.rows(); ++r)
                for (std::size_t c = 0; c < m.cols(); ++c) {
                    const double oy = std::max(0.0, std::min((u + 1) * ch, r + 1.0) - std::max(u * ch, double(r)));
                    const double ox = std::max(0.0, std::min((v + 1) * cw, c + 1.0) - std::max(v * cw, double(c)));
                    acc += oy * ox * m(r, c);
                }
            cells[u][v] = acc / (ch * cw);
        }
    double mean = 0.0;
    for (auto& row : cells)
        for (double x : row) mean += x / 64.0;
    std::uint64_t bits = 0;
    for (int k = 0; k < 64; ++k)
        if (cells[k / 8][k % 8] > mean) bits |= 1ULL << k;
    return bits;
}

}  // namespace

double hash_oracle(const Matrix& a, const Matrix& b) {
    const std::uint64_t x = hash_of(a) ^ hash_of(b);
    int d = 0;
    for (int k = 0; k < 64; ++k) d += (x >> k) & 1;
    return 1.0 - d / 64.0;
}

Matrix bilinear_oracle(const Matrix& src, std::size_t rows, std::size_t cols) {
    Matrix out(rows, cols);
    auto coord = [](std::size_t d, std::size_t out_n, std::size_t in_n) {
        double s = (d + 0.5) * static_cast<double>(in_n) / static_cast<double>(out_n) - 0.5;
        return std::clamp(s, 0.0, static_cast<double>(in_n - 1));
    };
    for (std::size_t y = 0; y < rows; ++y)
        for (std::size_t x = 0; x < cols; ++x) {
            const double sy = coord(y, rows, src.rows());
            const double sx = coord(x, cols, src.cols());
            const auto y0 = static_cast<std::size_t>(sy), x0 = static_cast<std::size_t>(sx);
            const std::size_t y1 = std::min(y0 + 1, src.rows() - 1), x1 = std::min(x0 + 1, src.cols() - 1);
            const double fy = sy - y0, fx = sx - x0;
            out(y, x) = src(y0, x0) * (1 - fy) * (1 - fx) + src(y0, x1) * (1 - fy) * fx +
                        src(y1, x0) * fy * (1 - fx) + src(y1, x1) * fy * fx;
        }
    return out;
}

std::vector<double> softmax_oracle(std::span<const double> logits) {
    std::vector<double> out;
    double total = 0.0;
    for (double l : logits) total += std::exp(l);
    for (double l : logits) out.push_back(std::exp(l) / total);
    return out;
}

std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), {});
}

void write_dataset(const fs::path& root, const std::vector<std::size_t>& counts, std::size_t size,
                   std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    for (std::size_t c = 0; c < counts.size(); ++c) {
        const fs::path dir = root / (std::to_string(c) + "_class" + std::to_string(c));
        fs::create_directories(dir);
        for (std::size_t i = 0; i < counts[c]; ++i)
            cnnlens::write_image(dir / ("img" + std::to_string(i) + ".png"), random_image(size, size, rng));
    }
}

void write_registry(const fs::path& path, const std::vector<std::pair<std::string, const nn::Network*>>& models,
                    const std::string& target_layer) {
    nlohmann::json manifest = nlohmann::json::array();
    for (const auto& [id, net] : models) {
        net->save(path.parent_path() / (id + ".json"));
        manifest.push_back({{"model_id", id},
                            {"display_name", id},
                            {"weights_uri", id + ".json"},
                            {"target_layer", target_layer},
                            {"input_size", {net->input_shape().h, net->input_shape().w}}});
    }
    std::ofstream(path) << manifest.dump(2);
}

}  // namespace fixture
