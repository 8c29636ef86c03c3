#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <stdexcept>
#include <vector>

#include "dtfl/cost_model.hpp"

namespace dtfl {

// Exhaustive-search verifiers used by tests and the selftest command. They
// evaluate objectives from first principles and deliberately share no code
// with the solvers they certify.

struct GridAxis {
    double lo = 0.0;
    double hi = 0.0;
    int steps = 1;  // 1 means a singleton axis at lo

    void validate() const {
        if (steps < 1) throw std::invalid_argument("grid axis needs >= 1 step");
        if (lo > hi) throw std::invalid_argument("grid axis lo > hi");
        if (steps == 1 && lo != hi) throw std::invalid_argument("singleton axis needs lo == hi");
    }
    double value(int i) const {
        return steps == 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / (steps - 1);
    }
};

struct GridSpec {
    GridAxis power;
    GridAxis frequency;
    GridAxis mapped;
    double tolerance = 0.0;
    std::uint64_t seed = 0;
};

// One client solving alone: channel gain, noise and bandwidth pin the rate,
// the profile pins the compute side.
struct SingleClientInstance {
    ClientProfile profile;
    ServerProfile server;
    double gain = 0.0;          // |h|^2
    double noise_power_w = 0.0;
    double bandwidth_hz = 0.0;
    double payload_bits = 0.0;
};

struct EnergyGridResult {
    bool feasible = false;
    double power_w = 0.0;
    double frequency_hz = 0.0;
    double mapped_fraction = 0.0;
    double energy_j = std::numeric_limits<double>::infinity();
    double latency_s = 0.0;
    // largest objective change to an adjacent feasible grid point at the
    // minimizer; callers use multiples of this as the match tolerance
    double cell_spread_j = 0.0;
};

namespace oracle_detail {

inline double single_rate(const SingleClientInstance& inst, double power_w) {
    return inst.bandwidth_hz * std::log2(1.0 + power_w * inst.gain / inst.noise_power_w);
}

// Energy at one grid point; returns infinity when the point violates the
// deadline. The server share is the follower's balanced response.
inline double point_energy(const SingleClientInstance& inst, double p, double f, double v,
                           double* latency_out) {
    const double inf = std::numeric_limits<double>::infinity();
    const double rate = single_rate(inst, p);
    if (rate <= 0.0) return inf;
    const double t_com = inst.payload_bits / rate;
    const double t_cmp = inst.profile.cycles_per_sample * (1.0 - v) * inst.profile.data_size / f;
    const double t_total = t_cmp + t_com;
    if (t_total > inst.server.round_deadline_s * (1.0 + 1e-12)) return inf;
    const double dt_work = inst.profile.cycles_per_sample *
                           (v * inst.profile.data_size + inst.server.size_deviation);
    double t_dt = 0.0;
    if (dt_work > 0.0) {
        const double share = dt_work / (t_total * inst.server.frequency_hz);
        t_dt = share <= 1.0 ? t_total : dt_work / inst.server.frequency_hz;
        if (t_dt > inst.server.round_deadline_s * (1.0 + 1e-12)) return inf;
    }
    if (latency_out) *latency_out = std::max(t_total, t_dt);
    const double e_cmp = 0.5 * inst.server.capacitance * inst.profile.cycles_per_sample *
                         (1.0 - v) * inst.profile.data_size * f * f;
    return e_cmp + p * t_com;
}

}  // namespace oracle_detail

// Exhaustive minimum of the client energy over the (p, f, v) grid under the
// deadline constraints. Ties resolve to the lexicographically smallest point
// in (p, f, v) scan order.
inline EnergyGridResult grid_min_energy(const SingleClientInstance& inst, const GridSpec& grid) {
    grid.power.validate();
    grid.frequency.validate();
    grid.mapped.validate();
    EnergyGridResult best;
    int best_ijk[3] = {-1, -1, -1};
    for (int i = 0; i < grid.power.steps; ++i) {
        const double p = grid.power.value(i);
        for (int j = 0; j < grid.frequency.steps; ++j) {
            const double f = grid.frequency.value(j);
            for (int k = 0; k < grid.mapped.steps; ++k) {
                const double v = grid.mapped.value(k);
                double latency = 0.0;
                const double e = oracle_detail::point_energy(inst, p, f, v, &latency);
                if (e < best.energy_j) {
                    best.feasible = true;
                    best.power_w = p;
                    best.frequency_hz = f;
                    best.mapped_fraction = v;
                    best.energy_j = e;
                    best.latency_s = latency;
                    best_ijk[0] = i;
                    best_ijk[1] = j;
                    best_ijk[2] = k;
                }
            }
        }
    }
    if (!best.feasible) return best;
    const GridAxis* axes[3] = {&grid.power, &grid.frequency, &grid.mapped};
    for (int axis = 0; axis < 3; ++axis) {
        for (int delta : {-1, 1}) {
            int ijk[3] = {best_ijk[0], best_ijk[1], best_ijk[2]};
            ijk[axis] += delta;
            if (ijk[axis] < 0 || ijk[axis] >= axes[axis]->steps) continue;
            const double e = oracle_detail::point_energy(
                inst, grid.power.value(ijk[0]), grid.frequency.value(ijk[1]),
                grid.mapped.value(ijk[2]), nullptr);
            if (std::isfinite(e))
                best.cell_spread_j = std::max(best.cell_spread_j, std::abs(e - best.energy_j));
        }
    }
    return best;
}

struct AlphaGridResult {
    bool feasible = false;
    std::vector<double> shares;
    double makespan_s = std::numeric_limits<double>::infinity();
};

// Exhaustive search over the share simplex (sum <= 1, resolution 1/steps)
// for the follower's objective max(t_total, max_n t_dt_n). Zero-share cells
// with nonzero DT work are infeasible and skipped.
inline AlphaGridResult grid_min_makespan_alpha(const std::vector<ClientProfile>& profiles,
                                               const ServerProfile& server,
                                               const std::vector<double>& mapped_fractions,
                                               double t_total_s, int steps) {
    if (steps < 1) throw std::invalid_argument("simplex grid needs >= 1 step");
    const std::size_t n = profiles.size();
    std::vector<double> workload(n);
    for (std::size_t i = 0; i < n; ++i)
        workload[i] = profiles[i].cycles_per_sample *
                      (mapped_fractions[i] * profiles[i].data_size + server.size_deviation);

    AlphaGridResult best;
    std::vector<int> ticks(n, 0);
    std::vector<double> shares(n, 0.0);
    std::function<void(std::size_t, int)> recurse = [&](std::size_t i, int remaining) {
        if (i == n) {
            double makespan = t_total_s;
            for (std::size_t k = 0; k < n; ++k) {
                if (workload[k] == 0.0) continue;
                if (ticks[k] == 0) return;  // starved DT: infeasible point
                const double t_dt =
                    workload[k] / ((static_cast<double>(ticks[k]) / steps) * server.frequency_hz);
                makespan = std::max(makespan, t_dt);
            }
            if (makespan < best.makespan_s) {
                best.feasible = true;
                best.makespan_s = makespan;
                for (std::size_t k = 0; k < n; ++k)
                    shares[k] = static_cast<double>(ticks[k]) / steps;
                best.shares = shares;
            }
            return;
        }
        for (int t = 0; t <= remaining; ++t) {
            ticks[i] = t;
            recurse(i + 1, remaining - t);
        }
    };
    recurse(0, steps);
    return best;
}

struct RatioGridResult {
    bool feasible = false;
    double power_w = 0.0;
    double ratio = -std::numeric_limits<double>::infinity();
};

// Scan of the rate-per-energy ratio B log2(1 + p F) / (p d) over feasible
// powers at the given resolution. Feasible means the rate meets the
// payload/budget floor and the power sits inside the box.
inline RatioGridResult ratio_grid_max(double sinr_per_watt, double payload_bits,
                                      double bandwidth_hz, double transmit_budget_s,
                                      double p_min_w, double p_max_w, double resolution_w) {
    if (resolution_w <= 0.0) throw std::invalid_argument("resolution must be > 0");
    RatioGridResult best;
    const double required_rate =
        transmit_budget_s > 0.0 ? payload_bits / transmit_budget_s
                                : std::numeric_limits<double>::infinity();
    const auto consider = [&](double p) {
        const double rate = bandwidth_hz * std::log2(1.0 + p * sinr_per_watt);
        if (rate + 1e-9 * std::max(rate, 1.0) < required_rate) return;
        const double ratio = rate / (p * payload_bits);
        if (ratio > best.ratio) {
            best.feasible = true;
            best.ratio = ratio;
            best.power_w = p;
        }
    };
    const long cells = std::lround(std::ceil((p_max_w - p_min_w) / resolution_w));
    for (long i = 0; i <= cells; ++i)
        consider(std::min(p_min_w + static_cast<double>(i) * resolution_w, p_max_w));
    consider(p_max_w);
    return best;
}

}  // namespace dtfl
