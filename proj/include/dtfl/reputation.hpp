#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "dtfl/cost_model.hpp"

namespace dtfl {

// Reputation bookkeeping for client selection. Three factors per client:
//  - accuracy contribution (saturating curve of the training data size),
//  - model staleness (rounds since last selection, normalized system-wide),
//  - interaction quality (fraction of accepted updates).
// The weighted score ranks clients; the server picks the top N each round.

struct ReputationWeights {
    double accuracy = 0.3;
    double staleness = 0.5;
    double interactions = 0.2;
};

struct InteractionCounts {
    std::uint64_t positive = 0;
    std::uint64_t negative = 0;
};

// Data-size value curve: saturation - scale * exp(-rate * (D + epsilon)).
inline double accuracy_contribution(const ClientProfile& profile, double size_deviation) {
    if (profile.ac.scale < 0.0 || profile.ac.rate <= 0.0)
        throw std::invalid_argument("invalid accuracy-contribution parameters");
    return profile.ac.saturation -
           profile.ac.scale * std::exp(-profile.ac.rate * (profile.data_size + size_deviation));
}

struct ReputationState {
    struct Entry {
        int client_id = 0;
        double accuracy_contribution = 0.0;
        std::uint64_t staleness = 1;  // >= 1 after initialization
        InteractionCounts interactions;
        long last_selected_round = -1;  // -1: never
    };

    std::vector<Entry> entries;
    ReputationWeights weights;
    double interaction_prior = 0.5;  // score when no history exists

    std::size_t index_of(int client_id) const {
        for (std::size_t i = 0; i < entries.size(); ++i)
            if (entries[i].client_id == client_id) return i;
        throw std::invalid_argument("unknown client id " + std::to_string(client_id));
    }
};

inline ReputationState make_reputation(const std::vector<ClientProfile>& profiles,
                                       double size_deviation, ReputationWeights weights,
                                       double interaction_prior = 0.5) {
    ReputationState state;
    state.weights = weights;
    state.interaction_prior = interaction_prior;
    state.entries.reserve(profiles.size());
    for (const auto& p : profiles)
        state.entries.push_back({p.id, accuracy_contribution(p, size_deviation), 1, {}, -1});
    return state;
}

// Staleness transition: selected clients reset to 1, everyone else ages by 1.
inline void update_staleness(ReputationState& state, const std::vector<int>& selected,
                             long round = -1) {
    for (int id : selected) state.index_of(id);  // reject unknown ids up front
    for (auto& e : state.entries) {
        const bool was_selected =
            std::find(selected.begin(), selected.end(), e.client_id) != selected.end();
        if (was_selected) {
            e.staleness = 1;
            e.last_selected_round = round;
        } else {
            e.staleness += 1;
        }
    }
}

// Per-client staleness normalized over all clients; sums to 1.
inline std::vector<double> normalized_staleness(const ReputationState& state) {
    if (state.entries.empty()) throw std::invalid_argument("no clients");
    double total = 0.0;
    for (const auto& e : state.entries) total += static_cast<double>(e.staleness);
    std::vector<double> result(state.entries.size());
    for (std::size_t i = 0; i < result.size(); ++i)
        result[i] = static_cast<double>(state.entries[i].staleness) / total;
    return result;
}

inline double pi_degree(const InteractionCounts& counts, double prior = 0.5) {
    const double total = static_cast<double>(counts.positive + counts.negative);
    if (total == 0.0) return prior;
    return static_cast<double>(counts.positive) / total;
}

// Weighted reputation of one client.
inline double reputation(const ReputationState& state, int client_id) {
    const auto& e = state.entries[state.index_of(client_id)];
    const auto staleness = normalized_staleness(state);
    const double ms_bar = staleness[state.index_of(client_id)];
    return state.weights.accuracy * e.accuracy_contribution + state.weights.staleness * ms_bar +
           state.weights.interactions * pi_degree(e.interactions, state.interaction_prior);
}

// Highest-reputation clients, ties broken by ascending client id.
inline std::vector<int> select_top_n(const ReputationState& state, std::size_t n) {
    if (n < 1 || n > state.entries.size())
        throw std::invalid_argument("selection count out of range");
    const auto staleness = normalized_staleness(state);
    struct Scored {
        int id;
        double score;
    };
    std::vector<Scored> scored;
    scored.reserve(state.entries.size());
    for (std::size_t i = 0; i < state.entries.size(); ++i) {
        const auto& e = state.entries[i];
        const double z = state.weights.accuracy * e.accuracy_contribution +
                         state.weights.staleness * staleness[i] +
                         state.weights.interactions *
                             pi_degree(e.interactions, state.interaction_prior);
        scored.push_back({e.client_id, z});
    }
    std::sort(scored.begin(), scored.end(), [](const Scored& a, const Scored& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.id < b.id;
    });
    std::vector<int> picked(n);
    for (std::size_t i = 0; i < n; ++i) picked[i] = scored[i].id;
    return picked;
}

}  // namespace dtfl
