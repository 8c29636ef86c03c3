#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "dtfl/errors.hpp"
#include "dtfl/rng.hpp"

namespace dtfl {

// NOMA uplink model: per-client channel gains, SIC decoding order, achievable
// rates, and transmission latency/energy. All quantities are SI (watts, hertz,
// bits, seconds); gains are dimensionless power ratios |h|^2.

struct ClientGain {
    int client_id = 0;
    double gain = 0.0;  // |h|^2
};

struct ChannelState {
    std::vector<ClientGain> gains;
    double noise_power_w = 0.0;  // sigma^2
    double bandwidth_hz = 0.0;   // B

    void validate() const {
        if (noise_power_w <= 0.0) throw std::invalid_argument("noise power must be > 0");
        if (bandwidth_hz <= 0.0) throw std::invalid_argument("bandwidth must be > 0");
        for (const auto& g : gains)
            if (g.gain <= 0.0) throw std::invalid_argument("channel gains must be > 0");
    }

    std::size_t index_of(int client_id) const {
        for (std::size_t i = 0; i < gains.size(); ++i)
            if (gains[i].client_id == client_id) return i;
        throw std::invalid_argument("unknown client id " + std::to_string(client_id));
    }

    double gain_of(int client_id) const { return gains[index_of(client_id)].gain; }
};

// Per-round transmission decision. powers_w and payload_bits align with
// ChannelState::gains; decode_order lists client ids, first decoded first.
struct TransmitPlan {
    std::vector<double> powers_w;
    std::vector<double> payload_bits;
    std::vector<int> decode_order;
};

// sigma^2 in watts from a spectral density in dBm/Hz and the bandwidth.
inline double noise_power_from_density(double dbm_per_hz, double bandwidth_hz) {
    return std::pow(10.0, (dbm_per_hz - 30.0) / 10.0) * bandwidth_hz;
}

// SIC decoding order: descending channel gain, ties broken by ascending
// client id.
inline std::vector<int> decoding_order(const ChannelState& state) {
    state.validate();
    std::vector<std::size_t> idx(state.gains.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        const auto& ga = state.gains[a];
        const auto& gb = state.gains[b];
        if (ga.gain != gb.gain) return ga.gain > gb.gain;
        return ga.client_id < gb.client_id;
    });
    std::vector<int> order(idx.size());
    for (std::size_t i = 0; i < idx.size(); ++i) order[i] = state.gains[idx[i]].client_id;
    return order;
}

// Achievable rate of one client under SIC: clients decoded later act as
// interference; the last-decoded client sees none.
inline double rate_bps(const ChannelState& state, const TransmitPlan& plan, int client_id) {
    const std::size_t n = state.index_of(client_id);
    const auto pos = std::find(plan.decode_order.begin(), plan.decode_order.end(), client_id);
    if (pos == plan.decode_order.end())
        throw std::invalid_argument("client not in decode order");
    double interference = 0.0;
    for (auto it = pos + 1; it != plan.decode_order.end(); ++it) {
        const std::size_t j = state.index_of(*it);
        interference += plan.powers_w[j] * state.gains[j].gain;
    }
    const double denom = interference + state.noise_power_w;
    if (denom <= 0.0) throw std::invalid_argument("non-positive rate denominator");
    const double sinr = plan.powers_w[n] * state.gains[n].gain / denom;
    return state.bandwidth_hz * std::log2(1.0 + sinr);
}

struct TransmitCost {
    double latency_s = 0.0;
    double energy_j = 0.0;
};

inline TransmitCost transmit_cost(const ChannelState& state, const TransmitPlan& plan,
                                  int client_id) {
    const std::size_t n = state.index_of(client_id);
    const double bits = plan.payload_bits[n];
    if (bits == 0.0) return {0.0, 0.0};
    const double r = rate_bps(state, plan, client_id);
    if (r <= 0.0)
        throw InfeasibleError("zero rate with nonzero payload", client_id);
    const double t = bits / r;
    return {t, plan.powers_w[n] * t};
}

// Block-fading gain draw: |h|^2 = g * dist^-exponent with g unit-mean
// exponential. Deterministic for a given generator state; one draw per
// client in input order.
inline ChannelState sample_gains(const std::vector<std::pair<int, double>>& distances_m,
                                 double bandwidth_hz, double noise_power_w, Rng& rng,
                                 double path_loss_exponent = 3.76) {
    ChannelState state;
    state.bandwidth_hz = bandwidth_hz;
    state.noise_power_w = noise_power_w;
    state.gains.reserve(distances_m.size());
    for (const auto& [id, dist] : distances_m) {
        if (dist <= 0.0)
            throw std::invalid_argument("distance must be > 0 for client " + std::to_string(id));
        const double fading = rng.exponential();
        state.gains.push_back({id, fading * std::pow(dist, -path_loss_exponent)});
    }
    return state;
}

}  // namespace dtfl
