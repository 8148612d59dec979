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

#include <doctest.h>

#include <cmath>

#include "cnnlens/explain.hpp"
#include "fixtures.hpp"

using namespace cnnlens;
using fixture::error_code_of;

namespace {

double max_abs_diff(const Matrix& a, const Matrix& b) {
    REQUIRE(a.rows() == b.rows());
    REQUIRE(a.cols() == b.cols());
    double d = 0.0;
    for (std::size_t i = 0; i < a.data().size(); ++i) d = std::max(d, std::fabs(a.data()[i] - b.data()[i]));
    return d;
}

void check_attention_invariants(const NormalizedMap& map, std::size_t rows, std::size_t cols) {
    REQUIRE(map.values.rows() == rows);
    REQUIRE(map.values.cols() == cols);
    double hi = 0.0;
    for (double v : map.values.data()) {
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
        hi = std::max(hi, v);
    }
    if (map.degenerate) CHECK(hi == 0.0);
    else CHECK(hi == 1.0);
}

/// conv(3 -> channels, 1x1) [target "conv"] -> gap -> dense(channels -> classes).
ModelRecord pointwise_model(const std::vector<std::vector<double>>& conv_w, const std::vector<std::vector<double>>& fc_w,
                            std::size_t size) {
    const std::size_t k = conv_w.size();
    auto conv = std::make_unique<nn::Conv2d>("conv", 3, k, 1, 0, false);
    for (std::size_t o = 0; o < k; ++o)
        for (std::size_t i = 0; i < 3; ++i) conv->weight(o, i, 0, 0) = conv_w[o][i];
    auto fc = std::make_unique<nn::Dense>("fc", k, fc_w.size(), false);
    for (std::size_t o = 0; o < fc_w.size(); ++o)
        for (std::size_t i = 0; i < k; ++i) fc->weight(o, i) = fc_w[o][i];
    std::vector<std::unique_ptr<nn::Layer>> layers;
    layers.push_back(std::move(conv));
    layers.push_back(std::make_unique<nn::GlobalAvgPool>("gap"));
    layers.push_back(std::move(fc));
    return fixture::make_record(nn::Network(nn::Shape{3, size, size}, std::move(layers)), "conv");
}

std::pair<std::size_t, std::size_t> argmax_pixel(const Matrix& m) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < m.data().size(); ++i)
        if (m.data()[i] > m.data()[best]) best = i;
    return {best / m.cols(), best % m.cols()};
}

}  // namespace

TEST_CASE("method names") {
    for (Method m : kAllMethods) CHECK(parse_method(to_string(m)) == m);
    CHECK(error_code_of([] { (void)parse_method("cam"); }) == ErrorCode::UnknownMethod);
}

TEST_CASE("grad_cam weights agree with finite differences") {
    const auto model = fixture::two_conv_model(3);
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        const auto x = fixture::random_tensor(model.net().input_shape(), seed);
        for (std::size_t target = 0; target < 3; ++target) {
            const auto tg = target_gradients(model, x, target);
            const auto fd = fixture::fd_activation_gradient(model, tg.activation, target);
            const auto fine = fixture::fd_activation_gradient(model, tg.activation, target, 1e-6);
            const auto weights = grad_cam_weights(tg);
            const std::size_t n = tg.activation.shape.h * tg.activation.shape.w;
            std::size_t agree = 0;
            for (std::size_t i = 0; i < fd.data.size(); ++i)
                if (std::fabs(fd.data[i] - tg.gradient.data[i]) <= 1e-3 * std::max(std::fabs(fd.data[i]), 1e-12))
                    ++agree;
            CHECK(static_cast<double>(agree) >= 0.99 * static_cast<double>(fd.data.size()));
            for (std::size_t c = 0; c < weights.size(); ++c) {
                double mean = 0.0;
                for (std::size_t p = 0; p < n; ++p) mean += fine.data[c * n + p];
                mean /= static_cast<double>(n);
                CHECK(std::fabs(weights[c] - mean) <= 1e-3 * std::fabs(mean));
            }
            CHECK(tg.score == doctest::Approx(fixture::logit_from_activation(model, tg.activation, target)));
        }
    }
}

TEST_CASE("higher-order terms agree with nested finite differences") {
    const auto model = fixture::two_conv_model(3, 4);
    const auto x = fixture::random_tensor(model.net().input_shape(), 21);
    const std::size_t target = 1;
    const auto tg = target_gradients(model, x, target);
    const double reference = tg.score + 0.3;
    const auto terms = higher_order_terms(tg, reference);

    std::size_t checked = 0;
    for (std::size_t i = 0; i < tg.activation.data.size(); ++i) {
        if (std::fabs(tg.gradient.data[i]) < 1e-9 || std::fabs(tg.activation.data[i]) < 1e-2) continue;
        const double h = std::min(0.5, std::fabs(tg.activation.data[i]) / 4.0);
        nn::Tensor probe = tg.activation;
        auto f = [&](double d) {
            probe.data[i] = tg.activation.data[i] + d;
            const double v = std::exp(fixture::logit_from_activation(model, probe, target) - reference);
            probe.data[i] = tg.activation.data[i];
            return v;
        };
        auto d1 = [&](double at) { return (f(at + h) - f(at - h)) / (2 * h); };
        auto d2 = [&](double at) { return (d1(at + h) - d1(at - h)) / (2 * h); };
        auto d3 = [&](double at) { return (d2(at + h) - d2(at - h)) / (2 * h); };
        CHECK(std::fabs(terms.first.data[i] - d1(0)) <= 1e-2 * std::fabs(d1(0)));
        CHECK(std::fabs(terms.second.data[i] - d2(0)) <= 1e-2 * std::fabs(d2(0)));
        CHECK(std::fabs(terms.third.data[i] - d3(0)) <= 1e-2 * std::fabs(d3(0)));
        ++checked;
    }
    CHECK(checked >= 30);
}

TEST_CASE("grad_cam output matches the weighted-activation oracle") {
    const auto model = fixture::two_conv_model(3);
    const auto x = fixture::random_tensor(model.net().input_shape(), 8);
    const auto tg = target_gradients(model, x, 2);
    const auto map = grad_cam(model, x, 2);
    CHECK(max_abs_diff(map.values, fixture::cam_oracle(tg.activation, grad_cam_weights(tg), 16, 16)) < 1e-12);
    check_attention_invariants(map, 16, 16);
}

TEST_CASE("single non-negative feature map with uniform positive gradient") {
    const auto model = pointwise_model({{0.5, 0.25, 0.25}}, {{1.0}, {-1.0}}, 12);
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    nn::Tensor x(model.net().input_shape());
    for (double& v : x.data) v = u(rng);
    const auto tg = target_gradients(model, x, 0);
    for (double g : tg.gradient.data) CHECK(g == doctest::Approx(1.0 / 144.0));

    const auto expected = fixture::normalize_oracle(tg.activation.plane(0));
    const auto cam = grad_cam(model, x, 0);
    CHECK(max_abs_diff(cam.values, expected) < 1e-12);
    const auto pp = grad_cam_pp(model, x, 0);
    CHECK(max_abs_diff(pp.values, cam.values) < 1e-12);
}

TEST_CASE("zero gradients give a degenerate all-zero map") {
    const auto model = pointwise_model({{1, 0, 0}, {0, 1, 0}}, {{0, 0}, {0, 0}}, 8);
    const auto x = fixture::random_tensor(model.net().input_shape(), 2);
    for (const auto& map : {grad_cam(model, x, 0), grad_cam_pp(model, x, 0), smooth_grad_cam_pp(model, x, 0)}) {
        CHECK(map.degenerate);
        check_attention_invariants(map, 8, 8);
    }
}

TEST_CASE("class discrimination on disjoint evidence regions") {
    const auto model = pointwise_model({{1, 0, 0}, {0, 1, 0}}, {{1, 0}, {0, 1}}, 16);
    nn::Tensor x(model.net().input_shape(), 0.0);
    for (std::size_t y = 4; y < 12; ++y) {
        for (std::size_t xx = 1; xx < 6; ++xx) x.at(0, y, xx) = 1.0;
        for (std::size_t xx = 10; xx < 15; ++xx) x.at(1, y, xx) = 1.0;
    }
    for (Method method : {Method::GradCam, Method::GradCamPlusPlus, Method::ScoreCam}) {
        CAPTURE(to_string(method));
        const auto m0 = run_method(method, model, x, 0, {});
        const auto m1 = run_method(method, model, x, 1, {});
        CHECK(argmax_pixel(m0.values).second < 6);
        CHECK(argmax_pixel(m1.values).second >= 10);
    }
}

TEST_CASE("smooth grad_cam_pp without noise collapses to grad_cam_pp") {
    const auto model = fixture::two_conv_model(3);
    const auto x = fixture::random_tensor(model.net().input_shape(), 31);
    const auto pp = grad_cam_pp(model, x, 0);

    SmoothOptions one;
    one.n_samples = 1;
    one.sigma = 0.0;
    CHECK(smooth_grad_cam_pp(model, x, 0, one).values == pp.values);

    SmoothOptions many;
    many.sigma = 0.0;
    CHECK(max_abs_diff(smooth_grad_cam_pp(model, x, 0, many).values, pp.values) < 1e-6);
}

TEST_CASE("smooth grad_cam_pp equals an explicit averaging loop") {
    const auto model = fixture::two_conv_model(3);
    const auto x = fixture::random_tensor(model.net().input_shape(), 32);
    const std::size_t target = 2;
    SmoothOptions options;
    options.n_samples = 8;
    options.sigma = 0.1;
    options.seed = 77;

    const auto clean = target_gradients(model, x, target);
    const std::size_t numel = clean.activation.data.size();
    std::vector<double> first(numel), second(numel), third(numel);
    std::mt19937_64 rng(77);
    std::normal_distribution<double> noise(0.0, 1.0);
    for (int s = 0; s < 8; ++s) {
        nn::Tensor noisy = x;
        for (double& v : noisy.data) v += 0.1 * noise(rng);
        const auto tg = target_gradients(model, noisy, target);
        const double scale = std::exp(tg.score - clean.score);
        for (std::size_t i = 0; i < numel; ++i) {
            const double g = tg.gradient.data[i];
            first[i] += scale * g / 8.0;
            second[i] += scale * g * g / 8.0;
            third[i] += scale * g * g * g / 8.0;
        }
    }
    const auto& a = clean.activation;
    const std::size_t n = a.shape.h * a.shape.w;
    std::vector<double> weights(a.shape.c, 0.0);
    for (std::size_t c = 0; c < a.shape.c; ++c) {
        double sum_a = 0.0;
        for (std::size_t p = 0; p < n; ++p) sum_a += a.data[c * n + p];
        for (std::size_t p = 0; p < n; ++p) {
            const std::size_t i = c * n + p;
            const double denom = 2 * second[i] + sum_a * third[i] + 1e-8;
            if (std::fabs(denom) < 1e-7) continue;
            weights[c] += second[i] / denom * std::max(first[i], 0.0);
        }
    }
    const auto expected = fixture::cam_oracle(a, weights, 16, 16);
    const auto got = smooth_grad_cam_pp(model, x, target, options);
    CHECK(max_abs_diff(got.values, expected) < 1e-9);
    CHECK(smooth_grad_cam_pp(model, x, target, options).values == got.values);
}

TEST_CASE("smooth grad_cam_pp argument checks") {
    const auto model = fixture::two_conv_model(3);
    const auto x = fixture::random_tensor(model.net().input_shape(), 1);
    CHECK(error_code_of([&] { SmoothOptions o;
        o.n_samples = 0;
        (void)smooth_grad_cam_pp(model, x, 0, o); }) ==
          ErrorCode::InvalidArgument);
    CHECK(error_code_of([&] { SmoothOptions o;
        o.sigma = -1.0;
        (void)smooth_grad_cam_pp(model, x, 0, o); }) ==
          ErrorCode::InvalidArgument);
    CHECK(error_code_of([&] { (void)grad_cam(model, x, 3); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("score_cam equals independent masked forward passes") {
    const auto model = fixture::two_conv_model(3);
    const auto x = fixture::random_tensor(model.net().input_shape(), 41);
    const std::size_t target = 1;
    const auto acts = model.net().forward_all(x);
    const nn::Tensor& a = acts[model.target_index + 1];
    REQUIRE(a.shape.c == 3);

    std::vector<double> weights;
    for (std::size_t c = 0; c < 3; ++c) {
        const Matrix mask = fixture::normalize_oracle(fixture::bilinear_oracle(a.plane(c), 16, 16));
        nn::Tensor masked = x;
        for (std::size_t ch = 0; ch < 3; ++ch)
            for (std::size_t y = 0; y < 16; ++y)
                for (std::size_t xx = 0; xx < 16; ++xx) masked.at(ch, y, xx) *= mask(y, xx);
        const auto logits = model.net().forward(masked);
        weights.push_back(fixture::softmax_oracle(logits.data)[target]);
    }
    const auto got_weights = score_cam_weights(model, x, target);
    for (std::size_t c = 0; c < 3; ++c) CHECK(std::fabs(got_weights[c] - weights[c]) < 1e-12);
    const auto map = score_cam(model, x, target);
    CHECK(max_abs_diff(map.values, fixture::cam_oracle(a, weights, 16, 16)) < 1e-6);
    check_attention_invariants(map, 16, 16);
}

TEST_CASE("score_cam zero channel is weighted by the zero image") {
    const auto model = pointwise_model({{1, 0, 0}, {0, 0, 0}}, {{1, 0.5}, {-1, 2}}, 8);
    const auto x = fixture::random_tensor(model.net().input_shape(), 5);
    const auto weights = score_cam_weights(model, x, 0);
    const auto zero = predict_tensor(model, nn::Tensor(model.net().input_shape(), 0.0));
    CHECK(weights[1] == zero[0]);
}

TEST_CASE("gaussian blur equals a direct two-dimensional convolution") {
    const auto x = fixture::random_tensor(nn::Shape{2, 9, 13}, 6);
    const double sigma = 1.7;
    const int r = 3;
    const auto got = gaussian_blur(x, sigma, r);
    double total = 0.0;
    for (int dy = -r; dy <= r; ++dy)
        for (int dx = -r; dx <= r; ++dx) total += std::exp(-(dy * dy + dx * dx) / (2 * sigma * sigma));
    for (std::size_t c = 0; c < 2; ++c)
        for (int y = 0; y < 9; ++y)
            for (int xx = 0; xx < 13; ++xx) {
                double s = 0.0;
                for (int dy = -r; dy <= r; ++dy)
                    for (int dx = -r; dx <= r; ++dx) {
                        const int sy = std::clamp(y + dy, 0, 8);
                        const int sx = std::clamp(xx + dx, 0, 12);
                        s += std::exp(-(dy * dy + dx * dx) / (2 * sigma * sigma)) / total *
                             x.at(c, static_cast<std::size_t>(sy), static_cast<std::size_t>(sx));
                    }
                CHECK(got.at(c, static_cast<std::size_t>(y), static_cast<std::size_t>(xx)) == doctest::Approx(s).epsilon(1e-12));
            }
}

TEST_CASE("bbmp descent equals a hand-rolled finite-difference oracle") {
    const auto model = fixture::two_conv_model(3);
    const auto x = fixture::random_tensor(model.net().input_shape(), 51);
    const std::size_t target = argmax(predict_tensor(model, x));
    BbmpOptions options;
    options.iterations = 2;
    options.lr = 100.0;
    options.l1_coeff = 1e-4;
    options.tv_coeff = 0.2;
    options.mask_height = 4;
    options.mask_width = 4;
    options.perturbation = Perturbation::Constant;
    options.constant_value = -0.5;

    auto loss = [&](const Matrix& m) {
        const Matrix up = fixture::bilinear_oracle(m, 16, 16);
        nn::Tensor p(x.shape);
        for (std::size_t c = 0; c < 3; ++c)
            for (std::size_t y = 0; y < 16; ++y)
                for (std::size_t xx = 0; xx < 16; ++xx)
                    p.at(c, y, xx) = up(y, xx) * x.at(c, y, xx) + (1 - up(y, xx)) * -0.5;
        const double score = fixture::softmax_oracle(model.net().forward(p).data)[target];
        double l1 = 0.0, tv_r = 0.0, tv_c = 0.0;
        for (std::size_t y = 0; y < 4; ++y)
            for (std::size_t xx = 0; xx < 4; ++xx) {
                l1 += std::fabs(1 - m(y, xx)) / 16.0;
                if (y + 1 < 4) tv_r += std::pow(std::fabs(m(y, xx) - m(y + 1, xx)), 3.0) / 12.0;
                if (xx + 1 < 4) tv_c += std::pow(std::fabs(m(y, xx) - m(y, xx + 1)), 3.0) / 12.0;
            }
        return 1e-4 * l1 + 0.2 * (tv_r + tv_c) + score;
    };

    Matrix m(4, 4, 1.0);
    std::vector<double> losses;
    for (int it = 0; it < 2; ++it) {
        losses.push_back(loss(m));
        Matrix grad(4, 4);
        for (std::size_t i = 0; i < 16; ++i) {
            Matrix probe = m;
            grad.data()[i] = fixture::central_difference(
                [&](double d) {
                    probe.data()[i] = m.data()[i] + d;
                    return loss(probe);
                },
                1e-6);
        }
        for (std::size_t i = 0; i < 16; ++i) m.data()[i] = std::clamp(m.data()[i] - 100.0 * grad.data()[i], 0.0, 1.0);
    }

    const auto trace = bbmp_optimize(model, x, target, options);
    CHECK(max_abs_diff(trace.mask, m) < 1e-6);
    REQUIRE(trace.losses.size() == 2);
    for (int i = 0; i < 2; ++i) CHECK(trace.losses[i] == doctest::Approx(losses[i]).epsilon(1e-12));
    bool moved = false;
    for (double v : m.data()) moved = moved || v < 1.0;
    CHECK(moved);
}

TEST_CASE("bbmp with a zero step leaves the mask at its initialization") {
    const auto model = fixture::two_conv_model(3);
    const auto x = fixture::random_tensor(model.net().input_shape(), 52);
    BbmpOptions options;
    options.iterations = 1;
    options.lr = 0.0;
    options.l1_coeff = 0.0;
    options.tv_coeff = 0.0;
    const auto trace = bbmp_optimize(model, x, 1, options);
    CHECK(trace.mask.rows() == 28);
    for (double v : trace.mask.data()) CHECK(v == 1.0);
}

TEST_CASE("bbmp on a constant image keeps everything preserved") {
    const auto model = fixture::two_conv_model(3);
    const nn::Tensor x(model.net().input_shape(), 0.4);
    BbmpOptions options;
    options.iterations = 10;
    options.mask_height = 6;
    options.mask_width = 6;
    const auto map = bbmp(model, x, 0, options);
    CHECK(map.degenerate);
    for (double v : map.values.data()) CHECK(v == 0.0);
}

TEST_CASE("bbmp argument checks and determinism") {
    const auto model = fixture::two_conv_model(3);
    const auto x = fixture::random_tensor(model.net().input_shape(), 53);
    BbmpOptions options;
    options.iterations = 0;
    CHECK(error_code_of([&] { (void)bbmp(model, x, 0, options); }) == ErrorCode::InvalidArgument);
    options.iterations = 5;
    options.l1_coeff = -1;
    CHECK(error_code_of([&] { (void)bbmp(model, x, 0, options); }) == ErrorCode::InvalidArgument);
    options.l1_coeff = 0.01;
    options.mask_height = 7;
    options.mask_width = 5;
    const auto a = bbmp(model, x, 0, options);
    CHECK(bbmp(model, x, 0, options).values == a.values);
    check_attention_invariants(a, 16, 16);
}

TEST_CASE("every method satisfies the attention invariants") {
    const auto model = fixture::two_conv_model(4, 20);
    ExplainParams params;
    params.smooth.n_samples = 4;
    params.bbmp.iterations = 5;
    params.bbmp.mask_height = 7;
    params.bbmp.mask_width = 7;
    for (std::uint64_t seed = 0; seed < 4; ++seed) {
        const auto x = fixture::random_tensor(model.net().input_shape(), 100 + seed);
        for (Method method : kAllMethods) {
            CAPTURE(to_string(method));
            check_attention_invariants(run_method(method, model, x, seed % 4, params), 20, 20);
        }
    }
}

TEST_CASE("explain dispatches and fills prediction fields") {
    const auto model = fixture::two_conv_model(3);
    std::mt19937_64 rng(9);
    const RgbImage image = fixture::random_image(24, 24, rng);
    const auto probs = predict(model, image);
    const std::size_t best = argmax(probs);

    ExplainRequest request;
    request.method = Method::GradCam;
    request.target_class = best;
    request.image_ref = "0_a/img.png";
    const auto result = explain(model, image, request);
    CHECK(result.attention.values == grad_cam(model, preprocess(model, image), best).values);
    CHECK(result.correct);
    CHECK(result.predicted_class == best);
    CHECK(result.predicted_confidence == probs[best]);
    CHECK(result.attention.image_ref == "0_a/img.png");
    CHECK(result.attention.model_id == model.model_id);
    CHECK(result.wall_time_ms >= 0.0);

    request.target_class = (best + 1) % 3;
    request.ground_truth_class = (best + 1) % 3;
    CHECK_FALSE(explain(model, image, request).correct);

    request.method = Method::SmoothGradCamPlusPlus;
    const auto smooth = explain(model, image, request);
    check_attention_invariants(
        NormalizedMap{smooth.attention.values, smooth.attention.degenerate}, 16, 16);
}

TEST_CASE("params digest depends only on method hyperparameters") {
    ExplainParams a, b;
    b.bbmp.lr = 0.5;
    CHECK(a.method_json(Method::GradCam) == b.method_json(Method::GradCam));
    CHECK(a.method_json(Method::Bbmp) != b.method_json(Method::Bbmp));
    const auto back = ExplainParams::from_json({{"bbmp", b.method_json(Method::Bbmp)}});
    CHECK(back.method_json(Method::Bbmp) == b.method_json(Method::Bbmp));
}
