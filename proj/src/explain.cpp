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

#include "cnnlens/explain.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <random>
#include <string>

#include "cnnlens/digest.hpp"
#include "cnnlens/error.hpp"
#include "cnnlens/image.hpp"

namespace cnnlens {

namespace {

constexpr double kDenominatorOffset = 1e-8;
constexpr double kDenominatorFloor = 1e-7;

void check_target(const ModelRecord& model, std::size_t target_class) {
    if (target_class >= model.net().num_classes())
        throw Error(ErrorCode::InvalidArgument, "target class out of range", std::to_string(target_class));
}

std::size_t plane_size(const nn::Tensor& t) { return t.shape.h * t.shape.w; }

Matrix upsampled_plane(const nn::Tensor& t, std::size_t c, std::size_t rows, std::size_t cols) {
    return resample(t.plane(c), rows, cols, Interpolation::Bilinear);
}

nlohmann::json perturbation_json(Perturbation p) { return p == Perturbation::Blur ? "blur" : "constant"; }

}  // namespace

std::string_view to_string(Method method) noexcept {
    switch (method) {
        case Method::GradCam: return "grad_cam";
        case Method::Bbmp: return "bbmp";
        case Method::GradCamPlusPlus: return "grad_cam_pp";
        case Method::SmoothGradCamPlusPlus: return "smooth_grad_cam_pp";
        case Method::ScoreCam: return "score_cam";
    }
    return "unknown";
}

Method parse_method(std::string_view name) {
    for (Method m : kAllMethods)
        if (to_string(m) == name) return m;
    throw Error(ErrorCode::UnknownMethod, "unknown explanation method", std::string(name));
}

nlohmann::json ExplainParams::method_json(Method method) const {
    switch (method) {
        case Method::SmoothGradCamPlusPlus: {
            nlohmann::json j{{"n_samples", smooth.n_samples}, {"seed", smooth.seed}};
            if (smooth.sigma) j["sigma"] = *smooth.sigma;
            else j["sigma_fraction"] = smooth.sigma_fraction;
            return j;
        }
        case Method::Bbmp:
            return {{"iterations", bbmp.iterations},     {"lr", bbmp.lr},
                    {"l1_coeff", bbmp.l1_coeff},         {"tv_coeff", bbmp.tv_coeff},
                    {"tv_beta", bbmp.tv_beta},           {"mask_size", {bbmp.mask_height, bbmp.mask_width}},
                    {"perturbation", perturbation_json(bbmp.perturbation)},
                    {"blur_sigma", bbmp.blur_sigma},     {"blur_radius", bbmp.blur_radius},
                    {"constant_value", bbmp.constant_value}};
        default:
            return nlohmann::json::object();
    }
}

ExplainParams ExplainParams::from_json(const nlohmann::json& j) {
    ExplainParams p;
    if (j.contains("smooth_grad_cam_pp")) {
        const auto& s = j.at("smooth_grad_cam_pp");
        p.smooth.n_samples = s.value("n_samples", p.smooth.n_samples);
        p.smooth.sigma_fraction = s.value("sigma_fraction", p.smooth.sigma_fraction);
        if (s.contains("sigma")) p.smooth.sigma = s.at("sigma").get<double>();
        p.smooth.seed = s.value("seed", p.smooth.seed);
    }
    if (j.contains("bbmp")) {
        const auto& b = j.at("bbmp");
        p.bbmp.iterations = b.value("iterations", p.bbmp.iterations);
        p.bbmp.lr = b.value("lr", p.bbmp.lr);
        p.bbmp.l1_coeff = b.value("l1_coeff", p.bbmp.l1_coeff);
        p.bbmp.tv_coeff = b.value("tv_coeff", p.bbmp.tv_coeff);
        p.bbmp.tv_beta = b.value("tv_beta", p.bbmp.tv_beta);
        if (b.contains("mask_size")) {
            const auto size = b.at("mask_size").get<std::vector<std::size_t>>();
            if (size.size() != 2) throw Error(ErrorCode::InvalidArgument, "bbmp mask_size must be [h, w]");
            p.bbmp.mask_height = size[0];
            p.bbmp.mask_width = size[1];
        }
        const auto pert = b.value("perturbation", std::string("blur"));
        if (pert == "blur") p.bbmp.perturbation = Perturbation::Blur;
        else if (pert == "constant") p.bbmp.perturbation = Perturbation::Constant;
        else throw Error(ErrorCode::InvalidArgument, "unknown bbmp perturbation", pert);
        p.bbmp.blur_sigma = b.value("blur_sigma", p.bbmp.blur_sigma);
        p.bbmp.blur_radius = b.value("blur_radius", p.bbmp.blur_radius);
        p.bbmp.constant_value = b.value("constant_value", p.bbmp.constant_value);
    }
    return p;
}

// ---------------------------------------------------------------------------

TargetGradients target_gradients(const ModelRecord& model, const nn::Tensor& input, std::size_t target_class) {
    const nn::Network& net = model.net();
    check_target(model, target_class);
    if (model.target_index >= net.size())
        throw Error(ErrorCode::GradientUnavailable, "target layer index out of range", model.target_layer);
    const auto acts = net.forward_all(input);
    const std::size_t boundary = model.target_index + 1;
    nn::Tensor seed(acts.back().shape);
    seed.data[target_class] = 1.0;

    TargetGradients tg;
    tg.gradient = net.backward(acts, seed, boundary);
    tg.activation = acts[boundary];
    if (tg.gradient.shape != tg.activation.shape || plane_size(tg.activation) == 0)
        throw Error(ErrorCode::GradientUnavailable, "target layer gradient has no spatial extent", model.target_layer);
    tg.score = acts.back().data[target_class];
    tg.probabilities = nn::softmax(acts.back().data);
    return tg;
}

std::vector<double> grad_cam_weights(const TargetGradients& tg) {
    const std::size_t k = tg.gradient.shape.c;
    const std::size_t n = plane_size(tg.gradient);
    std::vector<double> weights(k, 0.0);
    for (std::size_t c = 0; c < k; ++c) {
        double s = 0.0;
        for (std::size_t p = 0; p < n; ++p) s += tg.gradient.data[c * n + p];
        weights[c] = s / static_cast<double>(n);
    }
    return weights;
}

HigherOrderTerms higher_order_terms(const TargetGradients& tg, double reference_score) {
    const double scale = std::exp(tg.score - reference_score);
    HigherOrderTerms t{nn::Tensor(tg.gradient.shape), nn::Tensor(tg.gradient.shape), nn::Tensor(tg.gradient.shape)};
    for (std::size_t i = 0; i < tg.gradient.data.size(); ++i) {
        const double g = tg.gradient.data[i];
        t.first.data[i] = scale * g;
        t.second.data[i] = scale * (g * g);
        t.third.data[i] = scale * (g * g * g);
    }
    return t;
}

std::vector<double> grad_cam_pp_weights(const nn::Tensor& activation, const HigherOrderTerms& terms) {
    const std::size_t k = activation.shape.c;
    const std::size_t n = plane_size(activation);
    std::vector<double> weights(k, 0.0);
    for (std::size_t c = 0; c < k; ++c) {
        double activation_sum = 0.0;
        for (std::size_t p = 0; p < n; ++p) activation_sum += activation.data[c * n + p];
        double w = 0.0;
        for (std::size_t p = 0; p < n; ++p) {
            const std::size_t i = c * n + p;
            const double denom = 2.0 * terms.second.data[i] + activation_sum * terms.third.data[i] + kDenominatorOffset;
            if (std::abs(denom) < kDenominatorFloor) continue;
            const double alpha = terms.second.data[i] / denom;
            w += alpha * std::max(terms.first.data[i], 0.0);
        }
        weights[c] = w;
    }
    return weights;
}

NormalizedMap normalize_map(Matrix raw) {
    NormalizedMap out;
    if (raw.empty()) {
        out.degenerate = true;
        return out;
    }
    const auto [lo_it, hi_it] = std::minmax_element(raw.data().begin(), raw.data().end());
    const double lo = *lo_it;
    const double hi = *hi_it;
    if (!(hi > lo) || !std::isfinite(hi - lo)) {
        std::fill(raw.data().begin(), raw.data().end(), 0.0);
        out.values = std::move(raw);
        out.degenerate = true;
        return out;
    }
    const double span = hi - lo;
    for (double& v : raw.data()) v = std::clamp((v - lo) / span, 0.0, 1.0);
    out.values = std::move(raw);
    return out;
}

NormalizedMap weighted_cam(const nn::Tensor& activation, std::span<const double> weights, std::size_t rows,
                           std::size_t cols) {
    if (weights.size() != activation.shape.c)
        throw Error(ErrorCode::ShapeMismatch, "one weight per channel expected");
    Matrix raw(activation.shape.h, activation.shape.w);
    const std::size_t n = plane_size(activation);
    for (std::size_t c = 0; c < weights.size(); ++c) {
        if (weights[c] == 0.0) continue;
        for (std::size_t p = 0; p < n; ++p) raw.data()[p] += weights[c] * activation.data[c * n + p];
    }
    for (double& v : raw.data()) v = std::max(v, 0.0);
    return normalize_map(resample(raw, rows, cols, Interpolation::Bilinear));
}

NormalizedMap grad_cam(const ModelRecord& model, const nn::Tensor& input, std::size_t target_class) {
    const TargetGradients tg = target_gradients(model, input, target_class);
    return weighted_cam(tg.activation, grad_cam_weights(tg), input.shape.h, input.shape.w);
}

NormalizedMap grad_cam_pp(const ModelRecord& model, const nn::Tensor& input, std::size_t target_class) {
    const TargetGradients tg = target_gradients(model, input, target_class);
    const HigherOrderTerms terms = higher_order_terms(tg, tg.score);
    return weighted_cam(tg.activation, grad_cam_pp_weights(tg.activation, terms), input.shape.h, input.shape.w);
}

NormalizedMap smooth_grad_cam_pp(const ModelRecord& model, const nn::Tensor& input, std::size_t target_class,
                                 const SmoothOptions& options) {
    if (options.n_samples == 0) throw Error(ErrorCode::InvalidArgument, "n_samples must be >= 1");
    double sigma = 0.0;
    if (options.sigma) {
        sigma = *options.sigma;
    } else {
        const auto [lo, hi] = std::minmax_element(input.data.begin(), input.data.end());
        sigma = options.sigma_fraction * (*hi - *lo);
    }
    if (!(sigma >= 0.0)) throw Error(ErrorCode::InvalidArgument, "sigma must be >= 0");

    // Clean pass provides the activations that are combined and the
    // reference score that keeps exp() bounded.
    const TargetGradients clean = target_gradients(model, input, target_class);
    HigherOrderTerms sum{nn::Tensor(clean.gradient.shape), nn::Tensor(clean.gradient.shape),
                         nn::Tensor(clean.gradient.shape)};

    std::mt19937_64 rng(options.seed);
    std::normal_distribution<double> noise(0.0, 1.0);
    nn::Tensor noisy = input;
    for (std::size_t s = 0; s < options.n_samples; ++s) {
        for (std::size_t i = 0; i < input.data.size(); ++i) noisy.data[i] = input.data[i] + sigma * noise(rng);
        const TargetGradients tg = target_gradients(model, noisy, target_class);
        const HigherOrderTerms t = higher_order_terms(tg, clean.score);
        for (std::size_t i = 0; i < t.first.data.size(); ++i) {
            sum.first.data[i] += t.first.data[i];
            sum.second.data[i] += t.second.data[i];
            sum.third.data[i] += t.third.data[i];
        }
    }
    const auto n = static_cast<double>(options.n_samples);
    for (std::size_t i = 0; i < sum.first.data.size(); ++i) {
        sum.first.data[i] /= n;
        sum.second.data[i] /= n;
        sum.third.data[i] /= n;
    }
    return weighted_cam(clean.activation, grad_cam_pp_weights(clean.activation, sum), input.shape.h, input.shape.w);
}

std::vector<double> score_cam_weights(const ModelRecord& model, const nn::Tensor& input, std::size_t target_class) {
    const nn::Network& net = model.net();
    check_target(model, target_class);
    const auto acts = net.forward_all(input);
    const nn::Tensor& activation = acts[model.target_index + 1];
    std::vector<double> weights(activation.shape.c, 0.0);
    for (std::size_t c = 0; c < activation.shape.c; ++c) {
        const NormalizedMap mask = normalize_map(upsampled_plane(activation, c, input.shape.h, input.shape.w));
        nn::Tensor masked = input;
        for (std::size_t ch = 0; ch < input.shape.c; ++ch)
            for (std::size_t y = 0; y < input.shape.h; ++y)
                for (std::size_t x = 0; x < input.shape.w; ++x) masked.at(ch, y, x) *= mask.values(y, x);
        weights[c] = predict_tensor(model, masked)[target_class];
    }
    return weights;
}

NormalizedMap score_cam(const ModelRecord& model, const nn::Tensor& input, std::size_t target_class) {
    const auto weights = score_cam_weights(model, input, target_class);
    const auto acts = model.net().forward_all(input);
    return weighted_cam(acts[model.target_index + 1], weights, input.shape.h, input.shape.w);
}

nn::Tensor gaussian_blur(const nn::Tensor& input, double sigma, std::size_t radius) {
    if (sigma <= 0.0 || radius == 0) return input;
    std::vector<double> kernel(2 * radius + 1);
    double total = 0.0;
    for (std::size_t i = 0; i < kernel.size(); ++i) {
        const double d = static_cast<double>(i) - static_cast<double>(radius);
        kernel[i] = std::exp(-d * d / (2.0 * sigma * sigma));
        total += kernel[i];
    }
    for (double& k : kernel) k /= total;

    const auto H = static_cast<std::ptrdiff_t>(input.shape.h);
    const auto W = static_cast<std::ptrdiff_t>(input.shape.w);
    const auto r = static_cast<std::ptrdiff_t>(radius);
    nn::Tensor tmp(input.shape);
    nn::Tensor out(input.shape);
    for (std::size_t c = 0; c < input.shape.c; ++c) {
        for (std::ptrdiff_t y = 0; y < H; ++y)
            for (std::ptrdiff_t x = 0; x < W; ++x) {
                double s = 0.0;
                for (std::ptrdiff_t d = -r; d <= r; ++d) {
                    const std::ptrdiff_t sx = std::clamp<std::ptrdiff_t>(x + d, 0, W - 1);
                    s += kernel[static_cast<std::size_t>(d + r)] *
                         input.at(c, static_cast<std::size_t>(y), static_cast<std::size_t>(sx));
                }
                tmp.at(c, static_cast<std::size_t>(y), static_cast<std::size_t>(x)) = s;
            }
        for (std::ptrdiff_t y = 0; y < H; ++y)
            for (std::ptrdiff_t x = 0; x < W; ++x) {
                double s = 0.0;
                for (std::ptrdiff_t d = -r; d <= r; ++d) {
                    const std::ptrdiff_t sy = std::clamp<std::ptrdiff_t>(y + d, 0, H - 1);
                    s += kernel[static_cast<std::size_t>(d + r)] *
                         tmp.at(c, static_cast<std::size_t>(sy), static_cast<std::size_t>(x));
                }
                out.at(c, static_cast<std::size_t>(y), static_cast<std::size_t>(x)) = s;
            }
    }
    return out;
}

BbmpTrace bbmp_optimize(const ModelRecord& model, const nn::Tensor& input, std::size_t target_class,
                        const BbmpOptions& options) {
    const nn::Network& net = model.net();
    check_target(model, target_class);
    if (options.iterations == 0) throw Error(ErrorCode::InvalidArgument, "bbmp needs at least one iteration");
    if (options.lr < 0.0 || options.l1_coeff < 0.0 || options.tv_coeff < 0.0)
        throw Error(ErrorCode::InvalidArgument, "bbmp coefficients must be non-negative");
    if (options.mask_height == 0 || options.mask_width == 0)
        throw Error(ErrorCode::InvalidArgument, "bbmp mask size must be positive");

    const std::size_t H = input.shape.h;
    const std::size_t W = input.shape.w;
    const std::size_t mh = options.mask_height;
    const std::size_t mw = options.mask_width;
    const nn::Tensor reference = options.perturbation == Perturbation::Blur
                                     ? gaussian_blur(input, options.blur_sigma, options.blur_radius)
                                     : nn::Tensor(input.shape, options.constant_value);
    // d(perturbed)/d(upsampled mask) per pixel and channel.
    nn::Tensor delta(input.shape);
    for (std::size_t i = 0; i < input.data.size(); ++i) delta.data[i] = input.data[i] - reference.data[i];

    const double n_mask = static_cast<double>(mh * mw);
    const double n_rows = static_cast<double>((mh - 1) * mw);
    const double n_cols = static_cast<double>(mh * (mw - 1));
    const double beta = options.tv_beta;

    BbmpTrace trace;
    trace.mask = Matrix(mh, mw, 1.0);
    for (std::size_t it = 0; it < options.iterations; ++it) {
        Matrix& m = trace.mask;
        const Matrix up = resample(m, H, W, Interpolation::Bilinear);
        nn::Tensor perturbed(input.shape);
        for (std::size_t c = 0; c < input.shape.c; ++c)
            for (std::size_t y = 0; y < H; ++y)
                for (std::size_t x = 0; x < W; ++x)
                    perturbed.at(c, y, x) = up(y, x) * input.at(c, y, x) + (1.0 - up(y, x)) * reference.at(c, y, x);

        const auto acts = net.forward_all(perturbed);
        const auto probs = nn::softmax(acts.back().data);
        const double p = probs[target_class];

        double l1 = 0.0;
        for (double v : m.data()) l1 += std::abs(1.0 - v);
        l1 /= n_mask;
        double tv_rows = 0.0, tv_cols = 0.0;
        for (std::size_t y = 0; y + 1 < mh; ++y)
            for (std::size_t x = 0; x < mw; ++x) tv_rows += std::pow(std::abs(m(y, x) - m(y + 1, x)), beta);
        for (std::size_t y = 0; y < mh; ++y)
            for (std::size_t x = 0; x + 1 < mw; ++x) tv_cols += std::pow(std::abs(m(y, x) - m(y, x + 1)), beta);
        if (mh > 1) tv_rows /= n_rows;
        if (mw > 1) tv_cols /= n_cols;
        const double loss = options.l1_coeff * l1 + options.tv_coeff * (tv_rows + tv_cols) + p;
        if (!std::isfinite(loss))
            throw Error(ErrorCode::NonFiniteLoss, "bbmp loss is not finite", "iteration " + std::to_string(it));
        trace.losses.push_back(loss);

        // d p_target / d logits = p_t (delta_tk - p_k)
        nn::Tensor grad_logits(acts.back().shape);
        for (std::size_t k = 0; k < probs.size(); ++k)
            grad_logits.data[k] = p * ((k == target_class ? 1.0 : 0.0) - probs[k]);
        const nn::Tensor grad_input = net.backward(acts, grad_logits, 0);

        Matrix grad_up(H, W);
        for (std::size_t c = 0; c < input.shape.c; ++c)
            for (std::size_t y = 0; y < H; ++y)
                for (std::size_t x = 0; x < W; ++x) grad_up(y, x) += grad_input.at(c, y, x) * delta.at(c, y, x);
        Matrix grad = resample_adjoint(grad_up, mh, mw);

        for (std::size_t i = 0; i < m.size(); ++i) {
            const double d = 1.0 - m.data()[i];
            const double sign = d > 0.0 ? 1.0 : (d < 0.0 ? -1.0 : 0.0);
            grad.data()[i] += -options.l1_coeff * sign / n_mask;
        }
        auto tv_grad = [&](double diff, double count) {
            if (diff == 0.0) return 0.0;
            const double sign = diff > 0.0 ? 1.0 : -1.0;
            return options.tv_coeff * beta * std::pow(std::abs(diff), beta - 1.0) * sign / count;
        };
        if (mh > 1)
            for (std::size_t y = 0; y + 1 < mh; ++y)
                for (std::size_t x = 0; x < mw; ++x) {
                    const double g = tv_grad(m(y, x) - m(y + 1, x), n_rows);
                    grad(y, x) += g;
                    grad(y + 1, x) -= g;
                }
        if (mw > 1)
            for (std::size_t y = 0; y < mh; ++y)
                for (std::size_t x = 0; x + 1 < mw; ++x) {
                    const double g = tv_grad(m(y, x) - m(y, x + 1), n_cols);
                    grad(y, x) += g;
                    grad(y, x + 1) -= g;
                }

        for (std::size_t i = 0; i < m.size(); ++i)
            m.data()[i] = std::clamp(m.data()[i] - options.lr * grad.data()[i], 0.0, 1.0);
    }
    return trace;
}

NormalizedMap bbmp(const ModelRecord& model, const nn::Tensor& input, std::size_t target_class,
                   const BbmpOptions& options) {
    const BbmpTrace trace = bbmp_optimize(model, input, target_class, options);
    Matrix attention = resample(trace.mask, input.shape.h, input.shape.w, Interpolation::Bilinear);
    for (double& v : attention.data()) v = 1.0 - v;
    return normalize_map(std::move(attention));
}

NormalizedMap run_method(Method method, const ModelRecord& model, const nn::Tensor& input, std::size_t target_class,
                         const ExplainParams& params) {
    switch (method) {
        case Method::GradCam: return grad_cam(model, input, target_class);
        case Method::Bbmp: return bbmp(model, input, target_class, params.bbmp);
        case Method::GradCamPlusPlus: return grad_cam_pp(model, input, target_class);
        case Method::SmoothGradCamPlusPlus: return smooth_grad_cam_pp(model, input, target_class, params.smooth);
        case Method::ScoreCam: return score_cam(model, input, target_class);
    }
    throw Error(ErrorCode::UnknownMethod, "unknown explanation method");
}

ExplanationResult explain(const ModelRecord& model, const RgbImage& image, const ExplainRequest& request) {
    const auto start = std::chrono::steady_clock::now();
    const nn::Tensor input = preprocess(model, image);
    const auto probs = predict_tensor(model, input);

    ExplanationResult result;
    NormalizedMap map = run_method(request.method, model, input, request.target_class, request.params);
    result.attention.values = std::move(map.values);
    result.attention.degenerate = map.degenerate;
    result.attention.image_ref = request.image_ref;
    result.attention.model_id = model.model_id;
    result.attention.method = request.method;
    result.attention.target_class = request.target_class;
    result.attention.params_digest = params_digest(request.params.method_json(request.method));

    result.predicted_class = argmax(probs);
    result.predicted_confidence = probs[result.predicted_class];
    result.ground_truth_class = request.ground_truth_class.value_or(request.target_class);
    result.correct = result.predicted_class == result.ground_truth_class;
    result.wall_time_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    return result;
}

}  // namespace cnnlens
