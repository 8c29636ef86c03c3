#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <vector>

#include "dtfl/dataset.hpp"
#include "dtfl/rng.hpp"

namespace dtfl {

// Multinomial logistic regression trained with full-batch gradient steps,
// plus the aggregation, poisoning and screening machinery of the training
// loop. Model layout: per class, feature_dim weights followed by one bias.

struct ModelParams {
    std::vector<double> values;

    bool operator==(const ModelParams&) const = default;
};

inline ModelParams zero_model(std::size_t feature_dim, std::size_t num_classes) {
    return {std::vector<double>((feature_dim + 1) * num_classes, 0.0)};
}

// Borrowed view of a contiguous sample block; label_override lets callers
// swap in tampered labels without copying features.
struct Batch {
    const Dataset* data = nullptr;
    Dataset::Span span;
    const int* label_override = nullptr;

    std::size_t count() const { return span.count; }
    const double* features(std::size_t i) const { return data->row(span.offset + i); }
    int label(std::size_t i) const {
        return label_override ? label_override[i] : data->labels[span.offset + i];
    }
};

namespace fl_detail {

inline void softmax_inplace(std::vector<double>& logits) {
    const double peak = *std::max_element(logits.begin(), logits.end());
    double total = 0.0;
    for (double& z : logits) {
        z = std::exp(z - peak);
        total += z;
    }
    for (double& z : logits) z /= total;
}

inline void class_probabilities(const ModelParams& model, const double* x,
                                std::size_t feature_dim, std::size_t num_classes,
                                std::vector<double>& out) {
    out.resize(num_classes);
    for (std::size_t k = 0; k < num_classes; ++k) {
        const double* w = model.values.data() + k * (feature_dim + 1);
        double z = w[feature_dim];  // bias
        for (std::size_t j = 0; j < feature_dim; ++j) z += w[j] * x[j];
        out[k] = z;
    }
    softmax_inplace(out);
}

}  // namespace fl_detail

// Average cross-entropy over a batch.
inline double model_loss(const ModelParams& model, const Batch& batch, std::size_t feature_dim,
                         std::size_t num_classes) {
    if (batch.count() == 0) throw std::invalid_argument("empty batch");
    std::vector<double> probs;
    double total = 0.0;
    for (std::size_t i = 0; i < batch.count(); ++i) {
        fl_detail::class_probabilities(model, batch.features(i), feature_dim, num_classes, probs);
        total += -std::log(std::max(probs[batch.label(i)], 1e-300));
    }
    return total / static_cast<double>(batch.count());
}

// Gradient of the average cross-entropy, same layout as the model.
inline std::vector<double> model_gradient(const ModelParams& model, const Batch& batch,
                                          std::size_t feature_dim, std::size_t num_classes) {
    if (batch.count() == 0) throw std::invalid_argument("empty batch");
    std::vector<double> grad(model.values.size(), 0.0);
    std::vector<double> probs;
    for (std::size_t i = 0; i < batch.count(); ++i) {
        const double* x = batch.features(i);
        fl_detail::class_probabilities(model, x, feature_dim, num_classes, probs);
        probs[batch.label(i)] -= 1.0;
        for (std::size_t k = 0; k < num_classes; ++k) {
            double* g = grad.data() + k * (feature_dim + 1);
            const double delta = probs[k];
            for (std::size_t j = 0; j < feature_dim; ++j) g[j] += delta * x[j];
            g[feature_dim] += delta;
        }
    }
    const double inv = 1.0 / static_cast<double>(batch.count());
    for (double& g : grad) g *= inv;
    return grad;
}

inline double model_accuracy(const ModelParams& model, const Batch& batch,
                             std::size_t feature_dim, std::size_t num_classes) {
    if (batch.count() == 0) throw std::invalid_argument("empty batch");
    std::vector<double> probs;
    std::size_t hits = 0;
    for (std::size_t i = 0; i < batch.count(); ++i) {
        fl_detail::class_probabilities(model, batch.features(i), feature_dim, num_classes, probs);
        const auto best = std::max_element(probs.begin(), probs.end());
        if (static_cast<int>(best - probs.begin()) == batch.label(i)) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(batch.count());
}

inline ModelParams gradient_descent(ModelParams model, const Batch& batch,
                                    std::size_t feature_dim, std::size_t num_classes, int steps,
                                    double learning_rate) {
    for (int s = 0; s < steps; ++s) {
        const auto grad = model_gradient(model, batch, feature_dim, num_classes);
        for (std::size_t i = 0; i < model.values.size(); ++i)
            model.values[i] -= learning_rate * grad[i];
    }
    return model;
}

// Split a client span into the locally kept head and the DT-mapped tail.
struct SpanSplit {
    Dataset::Span local;
    Dataset::Span mapped;
};

inline SpanSplit split_client_span(Dataset::Span span, double mapped_fraction) {
    if (mapped_fraction < 0.0 || mapped_fraction > 1.0)
        throw std::invalid_argument("mapped fraction out of [0,1]");
    std::size_t mapped = static_cast<std::size_t>(
        std::llround(mapped_fraction * static_cast<double>(span.count)));
    mapped = std::min(mapped, span.count);
    const std::size_t local = span.count - mapped;
    return {{span.offset, local}, {span.offset + local, mapped}};
}

// Local update on the (1 - v) share of a client's data. Returns nothing when
// the share is empty (a DT-only client skips local training).
inline std::optional<ModelParams> local_train(const ModelParams& start, const Dataset& data,
                                              Dataset::Span client_span, double mapped_fraction,
                                              int steps, double learning_rate,
                                              const int* label_override = nullptr) {
    const auto split = split_client_span(client_span, mapped_fraction);
    if (split.local.count == 0) return std::nullopt;
    Batch batch{&data, split.local, label_override};
    return gradient_descent(start, batch, data.feature_dim, data.num_classes, steps,
                            learning_rate);
}

// Server-side update on the union of mapped slices. Each mapped feature is
// perturbed by deviation * u with u uniform in [-1, 1]; per-client extras
// (the size deviation) are resampled from the client's own mapped slice.
// With no mapped data at all the input model is returned unchanged.
inline ModelParams dt_train(const ModelParams& start, const Dataset& data,
                            const std::vector<Dataset::Span>& mapped_spans,
                            std::size_t extras_per_client, double deviation, int steps,
                            double learning_rate, Rng& rng) {
    Dataset staged;
    staged.feature_dim = data.feature_dim;
    staged.num_classes = data.num_classes;
    const auto stage_sample = [&](std::size_t src_row) {
        const double* x = data.row(src_row);
        for (std::size_t j = 0; j < data.feature_dim; ++j)
            staged.features.push_back(x[j] + deviation * rng.uniform(-1.0, 1.0));
        staged.labels.push_back(data.labels[src_row]);
    };
    for (const auto& span : mapped_spans) {
        for (std::size_t i = 0; i < span.count; ++i) stage_sample(span.offset + i);
        if (span.count > 0)
            for (std::size_t e = 0; e < extras_per_client; ++e)
                stage_sample(span.offset + e % span.count);
    }
    if (staged.labels.empty()) return start;
    Batch batch{&staged, {0, staged.labels.size()}, nullptr};
    return gradient_descent(start, batch, data.feature_dim, data.num_classes, steps,
                            learning_rate);
}

// One client's share of the aggregation.
struct Contribution {
    double data_size = 0.0;        // D_n
    double mapped_fraction = 0.0;  // v_n
    const ModelParams* update = nullptr;
};

// Weighted aggregation of local updates and the DT model:
//   w = sum[(1-v) D w_n + (v D + eps) w_S] / sum D.
inline ModelParams aggregate(const std::vector<Contribution>& included,
                             const ModelParams& dt_model, double size_deviation) {
    if (included.empty()) throw std::invalid_argument("empty selection");
    double total_data = 0.0;
    for (const auto& c : included) total_data += c.data_size;
    if (total_data <= 0.0) throw std::invalid_argument("aggregate needs positive data size");

    ModelParams out{std::vector<double>(dt_model.values.size(), 0.0)};
    for (const auto& c : included) {
        const double local_weight = (1.0 - c.mapped_fraction) * c.data_size;
        const double dt_weight = c.mapped_fraction * c.data_size + size_deviation;
        for (std::size_t i = 0; i < out.values.size(); ++i)
            out.values[i] += local_weight * c.update->values[i] + dt_weight * dt_model.values[i];
    }
    for (double& v : out.values) v /= total_data;
    return out;
}

// Aggregation inflation caused by the DT size deviation.
inline double convergence_factor(double size_deviation, std::size_t selected_count,
                                 double total_data) {
    if (total_data <= 0.0) throw std::invalid_argument("total data must be > 0");
    return 1.0 + size_deviation * static_cast<double>(selected_count) / total_data;
}

// Label-flipping attack: y -> (C - 1 - y).
inline int flip_label(int label, std::size_t num_classes) {
    return static_cast<int>(num_classes) - 1 - label;
}

inline std::vector<int> flipped_labels(const Dataset& data, Dataset::Span span) {
    std::vector<int> out(span.count);
    for (std::size_t i = 0; i < span.count; ++i)
        out[i] = flip_label(data.labels[span.offset + i], data.num_classes);
    return out;
}

// Reject-on-negative-influence screening. For every candidate the validation
// accuracy of the aggregate with and without it is compared; a drop larger
// than the threshold marks the update as a negative interaction and bars it
// from the final aggregate.
struct ScreeningResult {
    std::vector<bool> positive;  // verdict per candidate
    std::size_t negative_count = 0;
};

inline ScreeningResult roni_screen(const ModelParams& global,
                                   const std::vector<Contribution>& candidates,
                                   const ModelParams& dt_model, double size_deviation,
                                   const Dataset& data, double threshold) {
    if (data.validation.count == 0) throw std::invalid_argument("empty validation set");
    Batch validation{&data, data.validation, nullptr};
    const auto acc = [&](const ModelParams& m) {
        return model_accuracy(m, validation, data.feature_dim, data.num_classes);
    };
    const double acc_with = acc(aggregate(candidates, dt_model, size_deviation));

    ScreeningResult result;
    result.positive.assign(candidates.size(), true);
    for (std::size_t k = 0; k < candidates.size(); ++k) {
        std::vector<Contribution> rest;
        rest.reserve(candidates.size() - 1);
        for (std::size_t i = 0; i < candidates.size(); ++i)
            if (i != k) rest.push_back(candidates[i]);
        const double acc_without =
            rest.empty() ? acc(global) : acc(aggregate(rest, dt_model, size_deviation));
        if (acc_without - acc_with > threshold) {
            result.positive[k] = false;
            ++result.negative_count;
        }
    }
    return result;
}

// Per-round record kept by the simulation loop.
struct FlRound {
    long index = 0;
    std::vector<int> selected;
    std::vector<bool> verdicts;  // aligned with selected
    std::size_t negative_count = 0;
    double accuracy = 0.0;
    double weight_sum = 0.0;  // aggregation weights, should equal the inflation factor
};

}  // namespace dtfl
