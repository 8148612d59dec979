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

// Acceptance gate: prints one PASS/FAIL line per criterion and exits non-zero
// when any criterion fails.

#include <httplib.h>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <latch>
#include <random>
#include <sstream>
#include <thread>

#include <sys/wait.h>

#include "cnnlens/analytics.hpp"
#include "cnnlens/explain.hpp"
#include "cnnlens/http_server.hpp"
#include "cnnlens/matrix_io.hpp"
#include "cnnlens/pipeline.hpp"
#include "cnnlens/saliency.hpp"
#include "cnnlens/service.hpp"
#include "cnnlens/toy.hpp"
#include "fixtures.hpp"

using namespace cnnlens;
using Clock = std::chrono::steady_clock;

namespace {

/// Collects failed checks for one criterion.
class Checks {
  public:
    void expect(bool ok, const std::string& what) {
        ++total_;
        if (!ok && failures_.size() < 5) failures_.push_back(what);
        if (!ok) ++failed_;
    }
    [[nodiscard]] bool ok() const noexcept { return failed_ == 0; }
    [[nodiscard]] std::string summary() const {
        std::ostringstream out;
        out << total_ - failed_ << '/' << total_ << " checks";
        for (const auto& f : failures_) out << "; " << f;
        return out.str();
    }

  private:
    std::size_t total_ = 0, failed_ = 0;
    std::vector<std::string> failures_;
};

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

int g_failures = 0;

void criterion(const std::string& name, double budget_seconds, const std::function<void(Checks&)>& body) {
    Checks checks;
    const auto start = Clock::now();
    try {
        body(checks);
    } catch (const std::exception& e) {
        checks.expect(false, std::string("exception: ") + e.what());
    }
    const double elapsed = seconds_since(start);
    if (budget_seconds > 0) checks.expect(elapsed < budget_seconds, "runtime over budget");
    std::cout << (checks.ok() ? "PASS " : "FAIL ") << name << " (" << checks.summary() << ", " << elapsed
              << " s)" << std::endl;
    if (!checks.ok()) ++g_failures;
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) return INFINITY;
    double d = 0.0;
    for (std::size_t i = 0; i < a.data().size(); ++i) d = std::max(d, std::fabs(a.data()[i] - b.data()[i]));
    return d;
}

Matrix rows_of(std::initializer_list<std::initializer_list<double>> rows) {
    Matrix m(rows.size(), rows.begin()->size());
    std::size_t r = 0;
    for (const auto& row : rows) {
        std::size_t c = 0;
        for (double v : row) m(r, c++) = v;
        ++r;
    }
    return m;
}

void distance_oracle_equivalence(Checks& checks) {
    const std::vector<std::size_t> classes{0, 0, 1, 1};
    const auto hand = build_distance_matrix(classes, rows_of({{0.9, 0.1}, {0.8, 0.2}, {0.3, 0.7}, {0.4, 0.6}}));
    checks.expect(std::fabs(hand.values(0, 1) - 0.75) < 1e-12, "hand-derived off-diagonal");
    checks.expect(hand.values(1, 0) == hand.values(0, 1), "hand-derived symmetry");

    std::mt19937_64 rng(2024);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = std::uniform_int_distribution<std::size_t>(1, 8)(rng);
        const std::size_t m = std::uniform_int_distribution<std::size_t>(n, 50)(rng);
        std::vector<std::size_t> img_classes(m);
        for (std::size_t i = 0; i < m; ++i)
            img_classes[i] = i < n ? i : std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
        std::shuffle(img_classes.begin(), img_classes.end(), rng);
        const Matrix conf = fixture::random_confidence(m, n, rng);
        const auto got = build_distance_matrix(img_classes, conf);
        const Matrix expected = fixture::distance_oracle(img_classes, conf, n);
        checks.expect(max_abs_diff(got.values, expected) <= 1e-12, "instance " + std::to_string(trial));
    }
}

void distance_invariants(Checks& checks) {
    std::mt19937_64 rng(99);
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t n = std::uniform_int_distribution<std::size_t>(1, 12)(rng);
        const std::size_t m = std::uniform_int_distribution<std::size_t>(1, 60)(rng);
        std::vector<std::size_t> img_classes(m);
        for (auto& c : img_classes) c = std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
        const auto d = build_distance_matrix(img_classes, fixture::random_confidence(m, n, rng)).values;
        bool ok = d.rows() == n && d.cols() == n;
        for (std::size_t i = 0; ok && i < n; ++i) {
            ok = d(i, i) == 0.0;
            for (std::size_t j = 0; ok && j < n; ++j) ok = d(i, j) == d(j, i) && d(i, j) >= 0.0 && d(i, j) <= 1.0;
        }
        checks.expect(ok, "instance " + std::to_string(trial));
    }
}

double similarity_oracle(const Matrix& a, const Matrix& b, Measure measure) {
    switch (measure) {
        case Measure::L1: return fixture::l1_oracle(a, b);
        case Measure::Mse: return fixture::mse_oracle(a, b);
        case Measure::Ssim: return fixture::ssim_oracle(a, b);
        case Measure::Hash: return fixture::hash_oracle(a, b);
    }
    return NAN;
}

void similarity_oracle_equivalence(Checks& checks) {
    std::mt19937_64 rng(7);
    for (std::size_t count : {1u, 2u, 3u, 5u}) {
        for (int trial = 0; trial < 10; ++trial) {
            std::vector<Matrix> maps;
            for (std::size_t i = 0; i < count; ++i) maps.push_back(fixture::random_matrix(16, 16, rng));
            for (Measure measure : kAllMeasures) {
                const auto sim = similarity_matrix(maps, measure);
                const std::string tag = std::string(to_string(measure)) + " L=" + std::to_string(count);
                for (std::size_t i = 0; i < count; ++i) {
                    checks.expect(sim.values(i, i) == 1.0, tag + " diagonal");
                    for (std::size_t j = 0; j < count; ++j) {
                        checks.expect(sim.values(i, j) == sim.values(j, i), tag + " symmetry");
                        if (i != j)
                            checks.expect(std::fabs(sim.values(i, j) - similarity_oracle(maps[i], maps[j], measure)) <=
                                              1e-9,
                                          tag + " oracle");
                    }
                }
            }
        }
    }
}

void gradient_fidelity(Checks& checks) {
    const auto model = fixture::two_conv_model(3, 16);

    for (std::uint64_t seed : {1u, 2u, 3u, 4u}) {
        const auto x = fixture::random_tensor(model.net().input_shape(), seed);
        for (std::size_t target = 0; target < 3; ++target) {
            const auto tg = target_gradients(model, x, target);
            const auto fd = fixture::fd_activation_gradient(model, tg.activation, target, 1e-6);
            const auto weights = grad_cam_weights(tg);
            const std::size_t n = tg.activation.shape.h * tg.activation.shape.w;
            for (std::size_t c = 0; c < weights.size(); ++c) {
                double mean = 0.0;
                for (std::size_t p = 0; p < n; ++p) mean += fd.data[c * n + p];
                mean /= static_cast<double>(n);
                checks.expect(std::fabs(weights[c] - mean) <= 1e-3 * std::fabs(mean), "grad_cam channel weight");
            }
        }
    }

    const auto x = fixture::random_tensor(model.net().input_shape(), 31);
    SmoothOptions one;
    one.n_samples = 1;
    one.sigma = 0.0;
    for (std::size_t target = 0; target < 3; ++target)
        checks.expect(smooth_grad_cam_pp(model, x, target, one).values == grad_cam_pp(model, x, target).values,
                      "smooth collapse");

    {
        const std::size_t target = 1;
        const auto acts = model.net().forward_all(x);
        const nn::Tensor& a = acts[model.target_index + 1];
        std::vector<double> weights;
        for (std::size_t c = 0; c < a.shape.c; ++c) {
            const Matrix mask = fixture::normalize_oracle(fixture::bilinear_oracle(a.plane(c), 16, 16));
            nn::Tensor masked = x;
            for (std::size_t ch = 0; ch < 3; ++ch)
                for (std::size_t yy = 0; yy < 16; ++yy)
                    for (std::size_t xx = 0; xx < 16; ++xx) masked.at(ch, yy, xx) *= mask(yy, xx);
            weights.push_back(fixture::softmax_oracle(model.net().forward(masked).data)[target]);
        }
        checks.expect(max_abs_diff(score_cam(model, x, target).values, fixture::cam_oracle(a, weights, 16, 16)) <= 1e-6,
                      "score_cam oracle");
    }

    {
        const auto xb = fixture::random_tensor(model.net().input_shape(), 51);
        const std::size_t target = argmax(predict_tensor(model, xb));
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
            nn::Tensor p(xb.shape);
            for (std::size_t c = 0; c < 3; ++c)
                for (std::size_t yy = 0; yy < 16; ++yy)
                    for (std::size_t xx = 0; xx < 16; ++xx)
                        p.at(c, yy, xx) = up(yy, xx) * xb.at(c, yy, xx) + (1 - up(yy, xx)) * -0.5;
            const double score = fixture::softmax_oracle(model.net().forward(p).data)[target];
            double l1 = 0.0, tv = 0.0;
            for (std::size_t yy = 0; yy < 4; ++yy)
                for (std::size_t xx = 0; xx < 4; ++xx) {
                    l1 += std::fabs(1 - m(yy, xx)) / 16.0;
                    if (yy + 1 < 4) tv += std::pow(std::fabs(m(yy, xx) - m(yy + 1, xx)), 3.0) / 12.0;
                    if (xx + 1 < 4) tv += std::pow(std::fabs(m(yy, xx) - m(yy, xx + 1)), 3.0) / 12.0;
                }
            return 1e-4 * l1 + 0.2 * tv + score;
        };
        Matrix m(4, 4, 1.0);
        for (int it = 0; it < 2; ++it) {
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
            for (std::size_t i = 0; i < 16; ++i)
                m.data()[i] = std::clamp(m.data()[i] - 100.0 * grad.data()[i], 0.0, 1.0);
        }
        checks.expect(max_abs_diff(bbmp_optimize(model, xb, target, options).mask, m) <= 1e-6, "bbmp descent");
    }
}

void saliency_invariants(Checks& checks) {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> unit(0.0, 1.0), signed_unit(-1.0, 1.0);
    for (int trial = 0; trial < 500; ++trial) {
        const std::size_t channels = std::uniform_int_distribution<std::size_t>(1, 6)(rng);
        const std::size_t h = std::uniform_int_distribution<std::size_t>(2, 9)(rng);
        const std::size_t w = std::uniform_int_distribution<std::size_t>(2, 9)(rng);
        nn::Tensor a(nn::Shape{channels, h, w});
        for (auto& v : a.data) v = signed_unit(rng);
        std::vector<double> weights(channels);
        for (auto& v : weights) v = signed_unit(rng);
        const std::size_t rows = 4 * h, cols = 3 * w;
        const auto map = weighted_cam(a, weights, rows, cols);
        double hi = 0.0;
        bool in_range = map.values.rows() == rows && map.values.cols() == cols;
        for (double v : map.values.data()) {
            in_range = in_range && v >= 0.0 && v <= 1.0;
            hi = std::max(hi, v);
        }
        checks.expect(in_range, "range");
        checks.expect(map.degenerate ? hi == 0.0 : hi == 1.0, "normalization peak");
        checks.expect(max_abs_diff(map.values, fixture::cam_oracle(a, weights, rows, cols)) <= 1e-9,
                      "normalization oracle");

        double t1 = unit(rng), t2 = unit(rng);
        if (t1 > t2) std::swap(t1, t2);
        const auto lo = threshold_mask(map.values, t1), hi_mask = threshold_mask(map.values, t2);
        bool nested = true;
        for (std::size_t i = 0; i < lo.bits.size(); ++i) nested = nested && (!hi_mask.bits[i] || lo.bits[i]);
        checks.expect(nested && hi_mask.popcount() <= lo.popcount(), "threshold monotonicity");
    }
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t w = std::uniform_int_distribution<std::size_t>(1, 24)(rng);
        const std::size_t h = std::uniform_int_distribution<std::size_t>(1, 24)(rng);
        const RgbImage image = fixture::random_image(w, h, rng);
        const Matrix attention = fixture::random_matrix(h, w, rng);
        const double t = unit(rng);
        const auto mask = threshold_mask(attention, t);
        const auto cih = color_intensity_histogram(image, mask, t);
        bool conserved = cih.kept_pixels == mask.popcount();
        for (const auto& channel : cih.bins) {
            std::uint64_t sum = 0;
            for (auto v : channel) sum += v;
            conserved = conserved && sum == mask.popcount();
        }
        checks.expect(conserved, "bin-sum conservation");
    }
}

double neighbor_purity(const Matrix& coords, const std::vector<std::size_t>& labels) {
    auto dist = [&](std::size_t a, std::size_t b) {
        return std::hypot(coords(a, 0) - coords(b, 0), coords(a, 1) - coords(b, 1));
    };
    std::size_t pure = 0;
    for (std::size_t i = 0; i < coords.rows(); ++i) {
        std::size_t best = i == 0 ? 1 : 0;
        for (std::size_t j = 0; j < coords.rows(); ++j)
            if (j != i && dist(i, j) < dist(i, best)) best = j;
        if (labels[best] == labels[i]) ++pure;
    }
    return static_cast<double>(pure) / static_cast<double>(coords.rows());
}

struct ToyRun {
    fixture::TempDir dir{"acceptance"};
    toy::ToyWorkspace workspace;
    std::filesystem::path store_root;
};

int run_cli(const std::string& args, const std::filesystem::path& log) {
    const std::string command = std::string("\"") + CNNLENS_CLI + "\" " + args + " > \"" + log.string() + "\" 2>&1";
    const int status = std::system(command.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string precompute_args(const ToyRun& run) {
    return "precompute --dataset \"" + run.workspace.dataset_root.string() + "\" --registry \"" +
           run.workspace.registry_path.string() + "\" --hierarchy \"" + run.workspace.hierarchy_path.string() +
           "\" --store \"" + run.store_root.string() + "\"";
}

void end_to_end(Checks& checks, ToyRun& run) {
    toy::ToyOptions options;
    options.per_class = 50;
    run.workspace = toy::make_toy_workspace(run.dir.path(), options);
    run.store_root = run.dir / "store";
    checks.expect(run.workspace.train_seconds < 300.0, "training under five minutes");

    const auto manifest = ingest(run.workspace.dataset_root);
    checks.expect(manifest.class_count() == 10 && manifest.images.size() == 500, "10 classes, 500 images");

    checks.expect(run_cli(precompute_args(run), run.dir / "precompute.log") == 0, "batch precompute exit code");

    const auto hierarchy = load_hierarchy(run.workspace.hierarchy_path);
    auto registry = load_registry(run.workspace.registry_path);
    ArtifactStore store(run.store_root);
    ComparisonService service(manifest, hierarchy, registry, store);

    const auto stats = service.get_class_stats(10);
    const auto overview = service.list_models();
    for (std::size_t m = 0; m < registry.size(); ++m) {
        std::vector<std::size_t> counts(10, 0), correct(10, 0);
        std::size_t total_correct = 0;
        for (std::size_t i = 0; i < manifest.images.size(); ++i) {
            const auto probs = predict(registry[m], read_image(manifest.path_of(i)));
            const std::size_t truth = manifest.images[i].class_index;
            const std::size_t predicted =
                static_cast<std::size_t>(std::max_element(probs.begin(), probs.end()) - probs.begin());
            ++counts[truth];
            if (predicted == truth) {
                ++correct[truth];
                ++total_correct;
            }
        }
        for (const auto& entry : stats.at("range")) {
            const std::size_t c = entry.at("class_index");
            const double expected = static_cast<double>(correct[c]) / static_cast<double>(counts[c]);
            checks.expect(entry.at("accuracies").at(registry[m].model_id).get<double>() == expected,
                          registry[m].model_id + " leaf " + std::to_string(c));
        }
        const auto& item = overview.at("items")[m];
        checks.expect(item.at("overall_accuracy").get<double>() == static_cast<double>(total_correct) / 500.0,
                      registry[m].model_id + " overall");
        for (std::size_t r = 0; r < hierarchy.root_labels.size(); ++r) {
            std::size_t n = 0, k = 0;
            for (std::size_t c = 0; c < 10; ++c)
                if (hierarchy.root_of[c] == r) {
                    n += counts[c];
                    k += correct[c];
                }
            checks.expect(item.at("per_root")[r].at("accuracy").get<double>() ==
                              static_cast<double>(k) / static_cast<double>(n),
                          registry[m].model_id + " root " + std::to_string(r));
        }
    }
    checks.expect(stats.at("range").size() == 10, "all ten classes ranked");

    DistanceMatrix blocks;
    blocks.values = Matrix(10, 10);
    blocks.populated.assign(10, true);
    std::vector<std::size_t> block(10);
    for (std::size_t i = 0; i < 10; ++i) {
        block[i] = i / 5;
        for (std::size_t j = 0; j < 10; ++j) blocks.values(i, j) = i == j ? 0.0 : (i / 5 == j / 5 ? 0.1 : 0.9);
    }
    const auto projection = project_classes(blocks, {}, block);
    checks.expect(neighbor_purity(projection.coords, block) >= 0.9, "block-separation purity");

    const auto id = service.create_task({{"model_ids", run.workspace.model_ids},
                                         {"class_ids", {4}},
                                         {"image_ref", manifest.images[200].image_ref}});
    checks.expect(manifest.images[200].class_index == 4, "task image class");
    service.wait(id, std::chrono::minutes(5));
    checks.expect(service.get_task(id).at("status") == "done", "task finished");
    for (Measure measure : kAllMeasures) {
        const auto sim = service.get_similarity(id, std::string(to_string(measure)));
        const auto values = sim.at("values").get<std::vector<std::vector<double>>>();
        const std::string tag = std::string(to_string(measure)) + " similarity";
        checks.expect(values.size() == 2 && values[0].size() == 2 && values[1].size() == 2, tag + " shape");
        if (values.size() != 2) continue;
        checks.expect(values[0][0] == 1.0 && values[1][1] == 1.0, tag + " diagonal");
        checks.expect(values[0][1] == values[1][0], tag + " symmetry");
        checks.expect(values[0][1] >= 0.0 && values[0][1] <= 1.0, tag + " range");
    }
}

void cache_and_service(Checks& checks, ToyRun& run) {
    {
        fixture::TempDir dir("acceptance-flight");
        ArtifactStore store(dir.path());
        const auto key = keys::confidence("flight", "digest");
        std::atomic<int> calls{0};
        std::latch start(8);
        std::vector<Bytes> results(8);
        std::vector<std::thread> threads;
        for (int t = 0; t < 8; ++t)
            threads.emplace_back([&, t] {
                start.arrive_and_wait();
                results[t] = store.get_or_compute(key, [&] {
                    ++calls;
                    std::this_thread::sleep_for(std::chrono::milliseconds(100));
                    return Bytes{1, 2, 3};
                });
            });
        for (auto& th : threads) th.join();
        checks.expect(calls == 1, "single-flight producer ran once");
        checks.expect(std::all_of(results.begin(), results.end(), [](const Bytes& b) { return b == Bytes{1, 2, 3}; }),
                      "all waiters see the payload");
    }

    const auto manifest = ingest(run.workspace.dataset_root);
    const auto hierarchy = load_hierarchy(run.workspace.hierarchy_path);
    ArtifactStore store(run.store_root);
    const auto before = store.keys();
    checks.expect(run_cli(precompute_args(run), run.dir / "rerun.log") == 0, "warm precompute exit code");
    checks.expect(fixture::read_text(run.dir / "rerun.log").find("status=computed") == std::string::npos,
                  "warm precompute computes nothing");

    ComparisonService service(manifest, hierarchy, load_registry(run.workspace.registry_path), store);
    {
        HttpServer server(service);
        const int port = server.bind_any("127.0.0.1");
        std::thread serving([&] { server.serve(); });
        server.wait_until_ready();
        httplib::Client client("127.0.0.1", port);
        double worst = 0.0;
        for (int i = 0; i < 20; ++i) {
            const auto start = Clock::now();
            const auto res = client.Get("/models");
            worst = std::max(worst, seconds_since(start));
            checks.expect(res && res->status == 200, "overview status");
        }
        checks.expect(worst < 0.2, "warm overview latency " + std::to_string(worst * 1000) + " ms");
        server.stop();
        serving.join();
    }

    const nlohmann::json spec{{"model_ids", run.workspace.model_ids},
                              {"class_ids", {7}},
                              {"image_ref", manifest.images[350].image_ref},
                              {"method", "smooth_grad_cam_pp"}};
    const auto first = service.create_task(spec);
    service.wait(first, std::chrono::minutes(5));
    const auto second = service.create_task(spec);
    service.wait(second, std::chrono::minutes(5));
    ComparisonService fresh(manifest, hierarchy, load_registry(run.workspace.registry_path), store);
    const auto third = fresh.create_task(spec);
    fresh.wait(third, std::chrono::minutes(5));
    const auto payload = service.get_task_results(first).dump();
    checks.expect(service.get_task_results(second).dump() == payload, "re-run results identical");
    checks.expect(fresh.get_task_results(third).dump() == payload, "fresh-service results identical");
    checks.expect(fresh.get_similarity(third).dump() == service.get_similarity(first).dump(),
                  "similarity payload identical");
    checks.expect(fresh.attention_producer_calls() == 0, "re-run served from cache");
    for (const auto& row : nlohmann::json::parse(payload).at("items")) {
        for (const char* ref : {"attention_ref", "overlay_ref", "contour_ref"}) {
            const auto [bytes, type] = fresh.get_artifact(row.at(ref).get<std::string>());
            checks.expect(bytes == *store.get(ArtifactKey::parse(row.at(ref).get<std::string>())), "artifact bytes");
        }
    }
    for (const auto& key : before)
        checks.expect(store.get(ArtifactKey::parse(key)).has_value(), "overview artifact kept");
}

}  // namespace

int main() {
    const auto start = Clock::now();
    criterion("distance-matrix oracle equivalence (200 random + hand case, 1e-12)", 10.0,
              distance_oracle_equivalence);
    criterion("distance-matrix invariants (1000 random instances)", 0.0, distance_invariants);
    criterion("similarity-matrix oracle equivalence (L in {1,2,3,5}, four measures, 1e-9)", 10.0,
              similarity_oracle_equivalence);
    criterion("explanation gradient fidelity (grad_cam 1e-3, smooth collapse, score_cam 1e-6, bbmp 1e-6)", 60.0,
              gradient_fidelity);
    criterion("saliency invariants (500 maps, 200 histograms)", 0.0, saliency_invariants);

    ToyRun run;
    criterion("end-to-end toy run (2 models, 10 classes, 500 images)", 600.0,
              [&](Checks& checks) { end_to_end(checks, run); });
    criterion("cache and service contracts", 0.0, [&](Checks& checks) { cache_and_service(checks, run); });

    std::cout << "SKIP full-scale per-class accuracy (requires the ImageNet validation set and pretrained weights)"
              << std::endl;
    std::cout << "total " << seconds_since(start) << " s, " << g_failures << " failing" << std::endl;
    return g_failures == 0 ? 0 : 1;
}
