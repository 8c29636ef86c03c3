#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "dtfl/rng.hpp"

namespace dtfl {

// Classification data shared by the training loop: a flat row-major feature
// matrix, integer labels, per-client partition spans and a held-out
// validation span owned by the server.

struct Dataset {
    struct Span {
        std::size_t offset = 0;
        std::size_t count = 0;
    };

    std::size_t feature_dim = 0;
    std::size_t num_classes = 0;
    std::vector<double> features;  // row-major, count x feature_dim
    std::vector<int> labels;
    std::vector<Span> client_spans;
    Span validation;

    const double* row(std::size_t i) const { return features.data() + i * feature_dim; }
    std::size_t size() const { return labels.size(); }

    void validate() const {
        if (features.size() != labels.size() * feature_dim)
            throw std::invalid_argument("feature/label size mismatch");
        for (int y : labels)
            if (y < 0 || static_cast<std::size_t>(y) >= num_classes)
                throw std::invalid_argument("label out of range");
    }
};

// Gaussian-mixture toy task: num_classes isotropic clusters in
// feature_dim dimensions. Light enough to run thousands of rounds while
// still being sensitive to label flipping.
struct SyntheticSpec {
    std::size_t clients = 20;
    std::size_t samples_per_client = 1000;
    std::size_t validation_samples = 1000;
    std::size_t feature_dim = 20;
    std::size_t num_classes = 10;
    double class_separation = 0.55;  // per-coordinate std of the class means
    bool iid = true;
    int labels_per_client = 1;  // used by the non-iid split
    std::uint64_t seed = 0;
};

inline Dataset make_synthetic(const SyntheticSpec& spec) {
    if (spec.clients == 0 || spec.samples_per_client == 0)
        throw std::invalid_argument("need at least one client and one sample");
    Dataset data;
    data.feature_dim = spec.feature_dim;
    data.num_classes = spec.num_classes;

    Rng rng(derive_seed(spec.seed, 0x5dULL));
    std::vector<double> means(spec.num_classes * spec.feature_dim);
    for (auto& m : means) m = spec.class_separation * rng.normal();

    const std::size_t total =
        spec.clients * spec.samples_per_client + spec.validation_samples;
    data.features.reserve(total * spec.feature_dim);
    data.labels.reserve(total);

    const auto emit_sample = [&](int label) {
        const double* mu = means.data() + static_cast<std::size_t>(label) * spec.feature_dim;
        for (std::size_t j = 0; j < spec.feature_dim; ++j)
            data.features.push_back(mu[j] + rng.normal());
        data.labels.push_back(label);
    };

    for (std::size_t c = 0; c < spec.clients; ++c) {
        const std::size_t offset = data.labels.size();
        for (std::size_t i = 0; i < spec.samples_per_client; ++i) {
            int label;
            if (spec.iid) {
                label = static_cast<int>(rng.below(spec.num_classes));
            } else {
                const int pick = static_cast<int>(rng.below(
                    static_cast<std::uint64_t>(std::max(1, spec.labels_per_client))));
                label = static_cast<int>((c + pick) % spec.num_classes);
            }
            emit_sample(label);
        }
        data.client_spans.push_back({offset, spec.samples_per_client});
    }
    data.validation.offset = data.labels.size();
    data.validation.count = spec.validation_samples;
    for (std::size_t i = 0; i < spec.validation_samples; ++i)
        emit_sample(static_cast<int>(rng.below(spec.num_classes)));
    return data;
}

// --- IDX (MNIST) ingestion -------------------------------------------------

namespace idx_detail {

inline std::uint32_t read_be32(std::istream& in) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    if (!in) throw std::runtime_error("truncated idx header");
    return (std::uint32_t(b[0]) << 24) | (std::uint32_t(b[1]) << 16) |
           (std::uint32_t(b[2]) << 8) | std::uint32_t(b[3]);
}

}  // namespace idx_detail

// Raw IDX image file: magic 0x00000803, then count, rows, cols, then bytes.
inline std::vector<std::vector<std::uint8_t>> read_idx_images(const std::string& path,
                                                              std::size_t* rows_out = nullptr,
                                                              std::size_t* cols_out = nullptr) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    if (idx_detail::read_be32(in) != 0x00000803u)
        throw std::runtime_error("bad idx image magic in " + path);
    const std::uint32_t count = idx_detail::read_be32(in);
    const std::uint32_t rows = idx_detail::read_be32(in);
    const std::uint32_t cols = idx_detail::read_be32(in);
    if (rows_out) *rows_out = rows;
    if (cols_out) *cols_out = cols;
    std::vector<std::vector<std::uint8_t>> images(count,
                                                  std::vector<std::uint8_t>(rows * cols));
    for (auto& img : images) {
        in.read(reinterpret_cast<char*>(img.data()), static_cast<std::streamsize>(img.size()));
        if (!in) throw std::runtime_error("truncated idx image data in " + path);
    }
    return images;
}

// Raw IDX label file: magic 0x00000801, then count, then one byte per label.
inline std::vector<std::uint8_t> read_idx_labels(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    if (idx_detail::read_be32(in) != 0x00000801u)
        throw std::runtime_error("bad idx label magic in " + path);
    const std::uint32_t count = idx_detail::read_be32(in);
    std::vector<std::uint8_t> labels(count);
    in.read(reinterpret_cast<char*>(labels.data()), static_cast<std::streamsize>(labels.size()));
    if (!in) throw std::runtime_error("truncated idx label data in " + path);
    return labels;
}

// Partition an MNIST-style IDX pair into the per-client layout. Pixels are
// scaled to [0,1]. With iid=false each client keeps labels_per_client
// consecutive digit classes (client index mod 10 first).
inline Dataset load_mnist(const std::string& images_path, const std::string& labels_path,
                          std::size_t clients, std::size_t samples_per_client,
                          std::size_t validation_samples, bool iid, int labels_per_client,
                          std::uint64_t seed) {
    const auto images = read_idx_images(images_path);
    const auto raw_labels = read_idx_labels(labels_path);
    if (images.size() != raw_labels.size())
        throw std::runtime_error("idx image/label count mismatch");
    if (images.empty()) throw std::runtime_error("empty idx dataset");

    Dataset data;
    data.feature_dim = images[0].size();
    data.num_classes = 10;

    std::vector<std::size_t> pool(images.size());
    for (std::size_t i = 0; i < pool.size(); ++i) pool[i] = i;
    Rng rng(derive_seed(seed, 0x1dULL));
    for (std::size_t i = pool.size(); i > 1; --i)
        std::swap(pool[i - 1], pool[rng.below(i)]);

    std::vector<std::vector<std::size_t>> by_label(10);
    for (std::size_t i : pool) by_label[raw_labels[i]].push_back(i);

    const auto emit = [&](std::size_t src) {
        for (std::uint8_t px : images[src]) data.features.push_back(px / 255.0);
        data.labels.push_back(raw_labels[src]);
    };

    std::vector<std::size_t> label_cursor(10, 0);
    std::size_t pool_cursor = 0;
    for (std::size_t c = 0; c < clients; ++c) {
        const std::size_t offset = data.labels.size();
        for (std::size_t i = 0; i < samples_per_client; ++i) {
            if (iid) {
                if (pool_cursor >= pool.size()) throw std::runtime_error("idx dataset too small");
                emit(pool[pool_cursor++]);
            } else {
                const int label =
                    static_cast<int>((c + i % std::max(1, labels_per_client)) % 10);
                auto& cursor = label_cursor[label];
                if (cursor >= by_label[label].size())
                    throw std::runtime_error("idx dataset too small for non-iid split");
                emit(by_label[label][cursor++]);
            }
        }
        data.client_spans.push_back({offset, samples_per_client});
    }
    data.validation.offset = data.labels.size();
    data.validation.count = validation_samples;
    for (std::size_t i = 0; i < validation_samples; ++i) {
        if (pool_cursor >= pool.size()) throw std::runtime_error("idx dataset too small");
        emit(pool[pool_cursor++]);
    }
    return data;
}

}  // namespace dtfl
