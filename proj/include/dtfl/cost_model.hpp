#pragma once

#include <algorithm>
#include <stdexcept>
#include <string>
#include <vector>

#include "dtfl/errors.hpp"

namespace dtfl {

// Latency/energy accounting for local training and server-side (DT)
// computation, plus the per-round totals under synchronous aggregation.

inline constexpr double kEffectiveCapacitance = 2e-28;  // tau

// Parameters of the accuracy-contribution curve (monotone saturating in the
// training data size): ac = saturation - scale * exp(-rate * samples).
struct AcCurve {
    double saturation = 1.0;
    double scale = 1.0;
    double rate = 1e-4;
};

struct ClientProfile {
    int id = 0;
    double data_size = 0.0;           // D, samples
    double cycles_per_sample = 0.0;   // c
    double f_min_hz = 0.0;
    double f_max_hz = 0.0;
    double p_min_w = 0.0;
    double p_max_w = 0.0;
    double max_mapped_fraction = 0.0; // v_max
    bool honest = true;
    AcCurve ac;

    void validate() const {
        if (data_size < 1.0) throw std::invalid_argument("data_size must be >= 1");
        if (cycles_per_sample <= 0.0) throw std::invalid_argument("cycles_per_sample must be > 0");
        if (f_min_hz <= 0.0 || f_min_hz > f_max_hz)
            throw std::invalid_argument("need 0 < f_min <= f_max");
        if (p_min_w <= 0.0 || p_min_w > p_max_w)
            throw std::invalid_argument("need 0 < p_min <= p_max");
        if (max_mapped_fraction < 0.0 || max_mapped_fraction > 1.0)
            throw std::invalid_argument("max_mapped_fraction must lie in [0,1]");
    }
};

struct ServerProfile {
    double frequency_hz = 0.0;        // f_S
    double size_deviation = 0.0;      // epsilon, samples
    double round_deadline_s = 0.0;    // T_max
    double capacitance = kEffectiveCapacitance;

    void validate() const {
        if (frequency_hz <= 0.0) throw std::invalid_argument("server frequency must be > 0");
        if (size_deviation < 0.0) throw std::invalid_argument("size deviation must be >= 0");
        if (round_deadline_s <= 0.0) throw std::invalid_argument("round deadline must be > 0");
        if (capacitance <= 0.0) throw std::invalid_argument("capacitance must be > 0");
    }
};

struct ComputeCost {
    double latency_s = 0.0;
    double energy_j = 0.0;
};

// Local training cost for the (1 - v) fraction kept on the client:
//   t = c (1-v) D / f,   e = (tau/2) c (1-v) D f^2.
inline ComputeCost local_cost(const ClientProfile& profile, double mapped_fraction,
                              double frequency_hz, double capacitance = kEffectiveCapacitance) {
    if (mapped_fraction < 0.0 || mapped_fraction > profile.max_mapped_fraction + 1e-12)
        throw std::invalid_argument("mapped fraction out of [0, v_max]");
    if (frequency_hz < profile.f_min_hz * (1.0 - 1e-12) ||
        frequency_hz > profile.f_max_hz * (1.0 + 1e-12))
        throw std::invalid_argument("frequency out of bounds");
    const double workload = profile.cycles_per_sample * (1.0 - mapped_fraction) * profile.data_size;
    return {workload / frequency_hz, 0.5 * capacitance * workload * frequency_hz * frequency_hz};
}

// Server-side computing latency for one client's mapped data
// (v D + epsilon samples) under a frequency share alpha. DT energy is not
// accounted: the server is mains powered.
inline double dt_cost(const ClientProfile& profile, const ServerProfile& server,
                      double mapped_fraction, double server_share) {
    if (server_share < 0.0 || server_share > 1.0 + 1e-12)
        throw std::invalid_argument("server share out of [0,1]");
    const double mapped_samples = mapped_fraction * profile.data_size + server.size_deviation;
    if (mapped_samples < 0.0) throw std::invalid_argument("negative mapped data size");
    if (mapped_samples == 0.0) return 0.0;
    if (server_share == 0.0)
        throw InfeasibleError("zero server share with nonzero DT workload", profile.id);
    return profile.cycles_per_sample * mapped_samples / (server_share * server.frequency_hz);
}

struct ClientCost {
    int client_id = 0;
    double t_cmp_s = 0.0;
    double e_cmp_j = 0.0;
    double t_com_s = 0.0;
    double e_com_j = 0.0;
    double t_dt_s = 0.0;
};

struct CostReport {
    std::vector<ClientCost> clients;
    double total_latency_s = 0.0;  // max over clients of max(t_cmp + t_com, t_dt)
    double total_energy_j = 0.0;   // sum of e_cmp + e_com
};

inline CostReport aggregate_cost(std::vector<ClientCost> entries) {
    if (entries.empty()) throw std::invalid_argument("empty selection");
    CostReport report;
    for (const auto& c : entries) {
        if (c.t_cmp_s < 0 || c.e_cmp_j < 0 || c.t_com_s < 0 || c.e_com_j < 0 || c.t_dt_s < 0)
            throw std::invalid_argument("negative cost entry for client " +
                                        std::to_string(c.client_id));
        report.total_latency_s =
            std::max(report.total_latency_s, std::max(c.t_cmp_s + c.t_com_s, c.t_dt_s));
        report.total_energy_j += c.e_cmp_j + c.e_com_j;
    }
    report.clients = std::move(entries);
    return report;
}

}  // namespace dtfl
