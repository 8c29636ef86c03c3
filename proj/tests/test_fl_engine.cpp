#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "dtfl/dataset.hpp"
#include "dtfl/fl_engine.hpp"

using namespace dtfl;
using Catch::Approx;

namespace {

Dataset small_mixture(std::uint64_t seed = 3, std::size_t clients = 4,
                      std::size_t per_client = 80) {
    SyntheticSpec spec;
    spec.clients = clients;
    spec.samples_per_client = per_client;
    spec.validation_samples = 200;
    spec.feature_dim = 8;
    spec.num_classes = 4;
    spec.class_separation = 0.9;
    spec.seed = seed;
    return make_synthetic(spec);
}

ModelParams random_model(std::size_t dim, std::size_t classes, Rng& rng) {
    auto m = zero_model(dim, classes);
    for (auto& w : m.values) w = 0.3 * rng.normal();
    return m;
}

}  // namespace

TEST_CASE("gradients match finite differences") {
    Rng rng(10);
    const auto data = small_mixture();
    auto model = random_model(data.feature_dim, data.num_classes, rng);
    Batch batch{&data, {0, 40}, nullptr};
    const auto grad = model_gradient(model, batch, data.feature_dim, data.num_classes);
    double err2 = 0.0, ref2 = 0.0;
    for (std::size_t i = 0; i < model.values.size(); ++i) {
        const double h = 1e-6 * (1.0 + std::abs(model.values[i]));
        auto plus = model, minus = model;
        plus.values[i] += h;
        minus.values[i] -= h;
        const double fd = (model_loss(plus, batch, data.feature_dim, data.num_classes) -
                           model_loss(minus, batch, data.feature_dim, data.num_classes)) /
                          (2.0 * h);
        err2 += (grad[i] - fd) * (grad[i] - fd);
        ref2 += fd * fd;
    }
    REQUIRE(std::sqrt(err2) <= 1e-4 * std::sqrt(ref2));
}

TEST_CASE("local training") {
    const auto data = small_mixture();
    Rng rng(4);
    const auto start = random_model(data.feature_dim, data.num_classes, rng);

    SECTION("zero learning rate leaves the model untouched") {
        const auto out = local_train(start, data, data.client_spans[0], 0.0, 5, 0.0);
        REQUIRE(out.has_value());
        REQUIRE(out->values == start.values);
    }
    SECTION("one sample, one step is a single gradient update") {
        Dataset::Span one{data.client_spans[0].offset, 1};
        const auto out = local_train(start, data, one, 0.0, 1, 0.01);
        REQUIRE(out.has_value());
        Batch batch{&data, one, nullptr};
        const auto grad = model_gradient(start, batch, data.feature_dim, data.num_classes);
        for (std::size_t i = 0; i < grad.size(); ++i)
            REQUIRE(out->values[i] == Approx(start.values[i] - 0.01 * grad[i]).margin(1e-15));
    }
    SECTION("deterministic for identical inputs") {
        const auto a = local_train(start, data, data.client_spans[1], 0.25, 3, 0.01);
        const auto b = local_train(start, data, data.client_spans[1], 0.25, 3, 0.01);
        REQUIRE(a->values == b->values);
    }
    SECTION("a fully mapped client skips local training") {
        REQUIRE_FALSE(local_train(start, data, data.client_spans[0], 1.0, 3, 0.01).has_value());
    }
    SECTION("span splitting is exact and disjoint") {
        const auto split = split_client_span({100, 80}, 0.25);
        REQUIRE(split.local.offset == 100);
        REQUIRE(split.local.count == 60);
        REQUIRE(split.mapped.offset == 160);
        REQUIRE(split.mapped.count == 20);
    }
}

TEST_CASE("DT-side training") {
    const auto data = small_mixture();
    Rng rng(6);
    const auto start = random_model(data.feature_dim, data.num_classes, rng);
    const auto split = split_client_span(data.client_spans[0], 0.5);

    SECTION("zero deviation trains on the source slice exactly") {
        Rng noise(9);
        const auto dt = dt_train(start, data, {split.mapped}, 0, 0.0, 3, 0.01, noise);
        Batch mapped{&data, split.mapped, nullptr};
        const auto direct =
            gradient_descent(start, mapped, data.feature_dim, data.num_classes, 3, 0.01);
        REQUIRE(dt.values == direct.values);
    }
    SECTION("no mapped data returns the input model") {
        Rng noise(9);
        const auto dt = dt_train(start, data, {{0, 0}}, 0, 0.3, 3, 0.01, noise);
        REQUIRE(dt.values == start.values);
    }
    SECTION("extras resample the mapped slice deterministically") {
        Rng n1(9), n2(9);
        const auto a = dt_train(start, data, {split.mapped}, 5, 0.2, 2, 0.01, n1);
        const auto b = dt_train(start, data, {split.mapped}, 5, 0.2, 2, 0.01, n2);
        REQUIRE(a.values == b.values);
    }
}

TEST_CASE("aggregation") {
    const std::size_t dim = 3, classes = 2;
    Rng rng(8);
    ModelParams w1 = zero_model(dim, classes), w2 = w1, ws = w1;
    for (auto& v : w1.values) v = rng.normal();
    for (auto& v : w2.values) v = rng.normal();
    for (auto& v : ws.values) v = rng.normal();

    SECTION("a lone local client passes through") {
        const auto out = aggregate({{1000, 0.0, &w1}}, ws, 0.0);
        for (std::size_t i = 0; i < out.values.size(); ++i)
            REQUIRE(out.values[i] == Approx(w1.values[i]).margin(1e-15));
    }
    SECTION("data sizes weight the mean") {
        const auto out = aggregate({{600, 0.0, &w1}, {400, 0.0, &w2}}, ws, 0.0);
        for (std::size_t i = 0; i < out.values.size(); ++i)
            REQUIRE(out.values[i] ==
                    Approx(0.6 * w1.values[i] + 0.4 * w2.values[i]).margin(1e-12));
    }
    SECTION("identical inputs scale by the inflation factor") {
        const double eps = 50.0;
        const auto out = aggregate({{600, 0.3, &w1}, {400, 0.5, &w1}}, w1, eps);
        const double gamma = convergence_factor(eps, 2, 1000.0);
        REQUIRE(gamma == Approx(1.1));
        for (std::size_t i = 0; i < out.values.size(); ++i)
            REQUIRE(out.values[i] == Approx(gamma * w1.values[i]).epsilon(1e-12));
    }
    SECTION("with no size deviation the weights form a convex combination") {
        Rng trial_rng(12);
        for (int t = 0; t < 50; ++t) {
            const double d1 = trial_rng.uniform(100, 1000), d2 = trial_rng.uniform(100, 1000);
            const double v1 = trial_rng.uniform(0, 1), v2 = trial_rng.uniform(0, 1);
            const double total = d1 + d2;
            const double weight_sum =
                ((1 - v1) * d1 + v1 * d1 + (1 - v2) * d2 + v2 * d2) / total;
            REQUIRE(weight_sum == Approx(1.0).margin(1e-12));
        }
    }
    SECTION("degenerate inputs rejected") {
        REQUIRE_THROWS_AS(aggregate({}, ws, 0.0), std::invalid_argument);
        REQUIRE_THROWS_AS(aggregate({{0.0, 0.0, &w1}}, ws, 0.0), std::invalid_argument);
    }
}

TEST_CASE("convergence factor") {
    REQUIRE(convergence_factor(0.0, 5, 5000) == 1.0);
    REQUIRE(convergence_factor(50.0, 5, 5000) == Approx(1.05));
    // linear in the deviation
    REQUIRE(convergence_factor(100.0, 5, 5000) - 1.0 ==
            Approx(2.0 * (convergence_factor(50.0, 5, 5000) - 1.0)));
    REQUIRE_THROWS_AS(convergence_factor(1.0, 5, 0.0), std::invalid_argument);
}

TEST_CASE("label flipping") {
    REQUIRE(flip_label(0, 2) == 1);
    REQUIRE(flip_label(1, 2) == 0);
    for (int y = 0; y < 10; ++y) REQUIRE(flip_label(flip_label(y, 10), 10) == y);

    const auto data = small_mixture();
    const auto flipped = flipped_labels(data, data.client_spans[0]);
    for (std::size_t i = 0; i < flipped.size(); ++i)
        REQUIRE(flipped[i] ==
                static_cast<int>(data.num_classes) - 1 -
                    data.labels[data.client_spans[0].offset + i]);
}

TEST_CASE("update screening") {
    const auto data = small_mixture(21, 6, 100);
    const double lr = 0.05;

    // a reasonably trained global model so influence is measurable
    ModelParams global = zero_model(data.feature_dim, data.num_classes);
    Batch all{&data, {0, data.client_spans.back().offset + data.client_spans.back().count},
              nullptr};
    global = gradient_descent(global, all, data.feature_dim, data.num_classes, 60, lr);

    SECTION("a candidate equal to the global model is positive") {
        ModelParams copy = global;
        const auto verdicts =
            roni_screen(global, {{500, 0.0, &copy}}, global, 0.0, data, 0.02);
        REQUIRE(verdicts.positive[0]);
        REQUIRE(verdicts.negative_count == 0);
    }
    SECTION("a degenerate threshold accepts everything") {
        ModelParams junk = global;
        for (auto& v : junk.values) v = -5.0 * v;
        const auto verdicts =
            roni_screen(global, {{500, 0.0, &junk}}, global, 0.0, data, 1.0);
        REQUIRE(verdicts.positive[0]);
    }
    SECTION("label-flipped updates are rejected in almost every trial") {
        int rejected = 0;
        const int trials = 50;
        for (int t = 0; t < trials; ++t) {
            const auto trial_data = small_mixture(100 + t, 6, 100);
            ModelParams base = zero_model(trial_data.feature_dim, trial_data.num_classes);
            Batch train{&trial_data, {0, trial_data.validation.offset}, nullptr};
            base = gradient_descent(base, train, trial_data.feature_dim,
                                    trial_data.num_classes, 60, lr);
            // honest update from client 0, poisoned update from client 1
            const auto honest = local_train(base, trial_data, trial_data.client_spans[0], 0.0,
                                            10, lr);
            const auto flipped = flipped_labels(trial_data, trial_data.client_spans[1]);
            const auto poisoned = local_train(base, trial_data, trial_data.client_spans[1], 0.0,
                                              10, lr, flipped.data());
            const auto verdicts = roni_screen(
                base, {{100, 0.0, &*honest}, {100, 0.0, &*poisoned}}, base, 0.0, trial_data,
                0.02);
            if (!verdicts.positive[1]) ++rejected;
        }
        REQUIRE(rejected >= trials * 9 / 10);
    }
    SECTION("honest updates survive screening in almost every trial") {
        int excluded = 0;
        const int trials = 50;
        for (int t = 0; t < trials; ++t) {
            const auto trial_data = small_mixture(300 + t, 4, 100);
            ModelParams base = zero_model(trial_data.feature_dim, trial_data.num_classes);
            Batch train{&trial_data, {0, trial_data.validation.offset}, nullptr};
            base = gradient_descent(base, train, trial_data.feature_dim,
                                    trial_data.num_classes, 40, lr);
            std::vector<ModelParams> updates;
            updates.reserve(4);
            std::vector<Contribution> candidates;
            for (int c = 0; c < 4; ++c)
                updates.push_back(*local_train(base, trial_data, trial_data.client_spans[c],
                                               0.0, 10, lr));
            for (int c = 0; c < 4; ++c) candidates.push_back({100, 0.0, &updates[c]});
            const auto verdicts = roni_screen(base, candidates, base, 0.0, trial_data, 0.02);
            excluded += static_cast<int>(verdicts.negative_count);
        }
        REQUIRE(excluded <= trials * 4 * 5 / 100);
    }
    SECTION("rejected updates leave no trace in the aggregate") {
        ModelParams junk = global;
        for (auto& v : junk.values) v += 40.0;
        ModelParams honest = global;
        std::vector<Contribution> kept = {{500, 0.2, &honest}};
        const auto before = aggregate(kept, global, 10.0);
        for (auto& v : junk.values) v = -v;  // mutate the excluded update
        const auto after = aggregate(kept, global, 10.0);
        REQUIRE(before.values == after.values);
    }
}

TEST_CASE("idx ingestion") {
    namespace fs = std::filesystem;
    const auto dir = fs::temp_directory_path() / "dtfl_idx_test";
    fs::create_directories(dir);
    const auto images_path = (dir / "images.idx").string();
    const auto labels_path = (dir / "labels.idx").string();

    const auto write_be32 = [](std::ofstream& out, std::uint32_t x) {
        const unsigned char b[4] = {static_cast<unsigned char>(x >> 24),
                                    static_cast<unsigned char>(x >> 16),
                                    static_cast<unsigned char>(x >> 8),
                                    static_cast<unsigned char>(x)};
        out.write(reinterpret_cast<const char*>(b), 4);
    };

    const std::size_t count = 40;
    {
        std::ofstream img(images_path, std::ios::binary);
        write_be32(img, 0x00000803u);
        write_be32(img, count);
        write_be32(img, 2);
        write_be32(img, 2);
        for (std::size_t i = 0; i < count; ++i)
            for (int px = 0; px < 4; ++px) img.put(static_cast<char>((i * 4 + px) % 256));
        std::ofstream lab(labels_path, std::ios::binary);
        write_be32(lab, 0x00000801u);
        write_be32(lab, count);
        for (std::size_t i = 0; i < count; ++i) lab.put(static_cast<char>(i % 10));
    }

    SECTION("round trip") {
        std::size_t rows = 0, cols = 0;
        const auto images = read_idx_images(images_path, &rows, &cols);
        const auto labels = read_idx_labels(labels_path);
        REQUIRE(rows == 2);
        REQUIRE(cols == 2);
        REQUIRE(images.size() == count);
        REQUIRE(labels.size() == count);
        REQUIRE(images[3][1] == 13);
        REQUIRE(labels[7] == 7);
    }
    SECTION("partitioned load scales pixels and fills spans") {
        const auto data = load_mnist(images_path, labels_path, 3, 10, 5, true, 1, 11);
        REQUIRE(data.feature_dim == 4);
        REQUIRE(data.client_spans.size() == 3);
        REQUIRE(data.validation.count == 5);
        REQUIRE(data.size() == 35);
        for (double f : data.features) {
            REQUIRE(f >= 0.0);
            REQUIRE(f <= 1.0);
        }
        data.validate();
    }
    SECTION("bad magic rejected") {
        REQUIRE_THROWS(read_idx_images(labels_path));
        REQUIRE_THROWS(read_idx_labels(images_path));
    }
    fs::remove_all(dir);
}
