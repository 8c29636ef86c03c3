#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "dtfl/channel.hpp"
#include "dtfl/cost_model.hpp"
#include "dtfl/errors.hpp"

namespace dtfl {

// Two-level resource-allocation game between the selected clients (leader,
// minimizing total energy via mapped fraction v, CPU frequency f and transmit
// power p) and the server (follower, minimizing round latency via its DT
// frequency shares alpha). Solved with closed forms for v and f, Dinkelbach
// iteration for p, the balanced-share rule for alpha, and an outer loop that
// alternates the two levels until the energy stabilizes.

struct SolverOptions {
    double dinkelbach_delta = 1e-6;
    int dinkelbach_max_iterations = 100;
    std::array<double, 3> dual_step0 = {0.1, 0.1, 0.1};
    int dual_max_iterations = 500;
    double dual_movement_tol = 1e-8;
    double equilibrium_rel_tol = 1e-4;
    int max_outer_iterations = 50;
};

// One client's power subproblem: maximize B log2(1 + p F) / (p d) subject to
// the rate keeping the transmission inside its time budget and the box
// bounds. F is the per-watt SINR seen by this client under the already-fixed
// later-decoded powers.
struct PowerProblem {
    double sinr_per_watt = 0.0;    // F, 1/W
    double payload_bits = 0.0;     // d
    double bandwidth_hz = 0.0;     // B
    double transmit_budget_s = 0.0;  // G = deadline minus compute time
    double p_min_w = 0.0;
    double p_max_w = 0.0;
};

struct DinkelbachTrace {
    struct Step {
        double q = 0.0;
        double w = 0.0;        // W(q) = max_p { R(p) - q U(p) }
        double power_w = 0.0;  // the maximizer
    };
    std::vector<Step> steps;
    bool converged = false;
    int iterations = 0;
};

struct PowerResult {
    double power_w = 0.0;
    double rate_bps = 0.0;
    DinkelbachTrace trace;
};

// Multiplier state of the dual subgradient method, together with the
// per-client constants the inner problem caches.
struct DualState {
    std::array<double, 3> lambda = {0.0, 0.0, 0.0};
    std::array<double, 3> step0 = {0.1, 0.1, 0.1};
    int iteration = 0;
    // cached constants of the subproblem this state belongs to
    double sinr_per_watt = 0.0;
    double transmit_budget_s = 0.0;
    double compute_budget_s = 0.0;
    double f_tilde_hz = 0.0;
};

namespace detail {

inline double rate_of(const PowerProblem& prob, double power_w) {
    return prob.bandwidth_hz * std::log2(1.0 + power_w * prob.sinr_per_watt);
}

// R(p) - q U(p)
inline double q_objective(const PowerProblem& prob, double q, double power_w) {
    return rate_of(prob, power_w) - q * power_w * prob.payload_bits;
}

}  // namespace detail

// Stationary point of the Lagrangian, p = B(1 - l1) / (ln2 (q d + l2 - l3))
// - 1/F, clamped to the box. A nonpositive denominator means no interior
// stationary point exists; the better box endpoint is returned instead.
inline double kkt_stationary_power(double q, const PowerProblem& prob, const DualState& duals) {
    const double denom =
        std::log(2.0) * (q * prob.payload_bits + duals.lambda[1] - duals.lambda[2]);
    if (denom <= 0.0) {
        const double at_min = detail::q_objective(prob, q, prob.p_min_w);
        const double at_max = detail::q_objective(prob, q, prob.p_max_w);
        return at_max >= at_min ? prob.p_max_w : prob.p_min_w;
    }
    const double p = prob.bandwidth_hz * (1.0 - duals.lambda[0]) / denom - 1.0 / prob.sinr_per_watt;
    return std::clamp(p, prob.p_min_w, prob.p_max_w);
}

// Projected subgradient update of the three multipliers with diminishing
// steps. Slacks follow the dual formulation: {d/G - R(p), p_min - p,
// p - p_max}.
inline DualState subgradient_duals(const DualState& duals, const std::array<double, 3>& slacks) {
    DualState next = duals;
    const double shrink = std::sqrt(static_cast<double>(duals.iteration) + 1.0);
    for (int i = 0; i < 3; ++i) {
        const double step = duals.step0[i] / shrink;
        next.lambda[i] = std::max(0.0, duals.lambda[i] - step * slacks[i]);
    }
    next.iteration = duals.iteration + 1;
    return next;
}

// Dinkelbach iteration for the rate-per-energy ratio. The transmit-time
// budget G enters as a rate floor R(p) >= d/G, i.e. a power floor
// p >= (2^(d/(G B)) - 1)/F; together with the box this leaves an interval,
// over which each inner problem is concave and solved exactly by the
// clamped stationary point.
inline PowerResult dinkelbach_power(const PowerProblem& prob, const SolverOptions& opts = {},
                                    int client_id = -1) {
    if (prob.sinr_per_watt <= 0.0) throw std::invalid_argument("sinr_per_watt must be > 0");
    if (prob.payload_bits <= 0.0) throw std::invalid_argument("payload_bits must be > 0");
    if (prob.bandwidth_hz <= 0.0) throw std::invalid_argument("bandwidth_hz must be > 0");
    if (prob.p_min_w <= 0.0 || prob.p_min_w > prob.p_max_w)
        throw std::invalid_argument("need 0 < p_min <= p_max");
    if (opts.dinkelbach_delta <= 0.0) throw std::invalid_argument("delta must be > 0");
    if (prob.transmit_budget_s <= 0.0)
        throw InfeasibleError("no time left for transmission", client_id);

    const double required_rate = prob.payload_bits / prob.transmit_budget_s;
    const double p_floor = (std::exp2(required_rate / prob.bandwidth_hz) - 1.0) / prob.sinr_per_watt;
    if (p_floor > prob.p_max_w * (1.0 + 1e-12))
        throw InfeasibleError("transmit-time budget unreachable even at p_max", client_id);
    const double lo = std::max(prob.p_min_w, p_floor);
    const double hi = prob.p_max_w;

    PowerResult result;
    DualState zero_duals;
    zero_duals.step0 = opts.dual_step0;
    zero_duals.sinr_per_watt = prob.sinr_per_watt;
    zero_duals.transmit_budget_s = prob.transmit_budget_s;

    double q = 0.0;
    for (int j = 0; j < opts.dinkelbach_max_iterations; ++j) {
        const double stationary = kkt_stationary_power(q, prob, zero_duals);
        const double p_hat = std::clamp(stationary, lo, hi);
        const double w = detail::q_objective(prob, q, p_hat);
        result.trace.steps.push_back({q, w, p_hat});
        result.trace.iterations = j + 1;
        if (std::abs(w) <= opts.dinkelbach_delta) {
            result.trace.converged = true;
            result.power_w = p_hat;
            result.rate_bps = detail::rate_of(prob, p_hat);
            return result;
        }
        q = detail::rate_of(prob, p_hat) / (p_hat * prob.payload_bits);
    }
    std::ostringstream msg;
    msg << "dinkelbach stalled after " << result.trace.iterations << " iterations, last q=" << q
        << " W=" << result.trace.steps.back().w;
    throw NonConvergenceError(msg.str());
}

// Server's best response. The balanced candidate alpha_n = c_n D_hat_n /
// (t_total f_S) makes every DT finish exactly at t_total; if it overruns the
// unit budget, the full capacity is split in proportion to the DT workloads
// and all DTs finish together later than t_total.
struct FollowerResponse {
    std::vector<double> shares;
    bool capacity_bound = false;
    double dt_latency_s = 0.0;  // common finish time of the loaded DTs
};

inline FollowerResponse follower_alpha(const std::vector<ClientProfile>& profiles,
                                       const ServerProfile& server,
                                       const std::vector<double>& mapped_fractions,
                                       double t_total_s) {
    if (t_total_s <= 0.0) throw std::invalid_argument("t_total must be > 0");
    if (profiles.size() != mapped_fractions.size())
        throw std::invalid_argument("profiles/fractions size mismatch");
    const std::size_t n = profiles.size();
    std::vector<double> workload(n);  // cycles of DT work per client
    double workload_sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double mapped = mapped_fractions[i] * profiles[i].data_size + server.size_deviation;
        if (mapped < 0.0)
            throw std::invalid_argument("negative DT data size for client " +
                                        std::to_string(profiles[i].id));
        workload[i] = profiles[i].cycles_per_sample * mapped;
        workload_sum += workload[i];
    }

    FollowerResponse response;
    response.shares.resize(n);
    double candidate_sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        response.shares[i] = workload[i] / (t_total_s * server.frequency_hz);
        candidate_sum += response.shares[i];
    }
    if (candidate_sum <= 1.0) {
        response.capacity_bound = false;
        response.dt_latency_s = workload_sum > 0.0 ? t_total_s : 0.0;
        return response;
    }
    // capacity bound: shares sum to exactly 1, DTs finish together
    response.capacity_bound = true;
    for (std::size_t i = 0; i < n; ++i) response.shares[i] = workload[i] / workload_sum;
    response.dt_latency_s = workload_sum / server.frequency_hz;
    return response;
}

// Mapping as much data as allowed minimizes local-training energy, provided
// the remaining workload still fits the compute budget at some feasible
// frequency. compute_budget_s is the deadline minus the transmit time.
inline double leader_mapped_fraction(const ClientProfile& profile, double compute_budget_s) {
    if (compute_budget_s <= 0.0)
        throw InfeasibleError("round budget exhausted before local computing", profile.id);
    const double needed_hz = (1.0 - profile.max_mapped_fraction) * profile.cycles_per_sample *
                             profile.data_size / compute_budget_s;
    if (needed_hz > profile.f_max_hz * (1.0 + 1e-12))
        throw InfeasibleError("deadline requires frequency above f_max", profile.id);
    return profile.max_mapped_fraction;
}

// Slowest feasible frequency: the deadline-induced floor f~ = (1-v) c D / A,
// lifted to f_min when it falls below.
inline double leader_frequency(const ClientProfile& profile, double mapped_fraction,
                               double compute_budget_s) {
    if (compute_budget_s <= 0.0)
        throw InfeasibleError("round budget exhausted before local computing", profile.id);
    const double f_tilde = (1.0 - mapped_fraction) * profile.cycles_per_sample *
                           profile.data_size / compute_budget_s;
    if (f_tilde > profile.f_max_hz * (1.0 + 1e-12))
        throw InfeasibleError("deadline requires frequency above f_max", profile.id);
    return std::max(f_tilde, profile.f_min_hz);
}

// Successive power optimization along the reversed decoding order: the
// last-decoded client is solved interference-free, and every earlier client
// sees the already-fixed powers of those decoded after it.
inline std::vector<PowerResult> successive_power(const ChannelState& channel,
                                                 const std::vector<int>& decode_order,
                                                 const std::vector<double>& payload_bits,
                                                 const std::vector<double>& transmit_budgets_s,
                                                 const std::vector<double>& p_min_w,
                                                 const std::vector<double>& p_max_w,
                                                 const SolverOptions& opts = {}) {
    const std::size_t n = channel.gains.size();
    if (payload_bits.size() != n || transmit_budgets_s.size() != n || p_min_w.size() != n ||
        p_max_w.size() != n || decode_order.size() != n)
        throw std::invalid_argument("successive_power: size mismatch");
    std::vector<PowerResult> results(n);
    double interference = 0.0;  // sum of p_j |h_j|^2 over already-solved (later) clients
    for (auto it = decode_order.rbegin(); it != decode_order.rend(); ++it) {
        const std::size_t i = channel.index_of(*it);
        PowerProblem prob;
        prob.sinr_per_watt = channel.gains[i].gain / (interference + channel.noise_power_w);
        prob.payload_bits = payload_bits[i];
        prob.bandwidth_hz = channel.bandwidth_hz;
        prob.transmit_budget_s = transmit_budgets_s[i];
        prob.p_min_w = p_min_w[i];
        prob.p_max_w = p_max_w[i];
        results[i] = dinkelbach_power(prob, opts, *it);
        interference += results[i].power_w * channel.gains[i].gain;
    }
    return results;
}

struct AllocationDecision {
    struct ClientAllocation {
        int client_id = 0;
        double power_w = 0.0;
        double frequency_hz = 0.0;
        double mapped_fraction = 0.0;
        double server_share = 0.0;
        double rate_bps = 0.0;
    };
    std::vector<ClientAllocation> clients;
    // common round timing: compute window, shared transmit time, DT finish
    double t_cmp_s = 0.0;
    double t_com_s = 0.0;
    double t_dt_s = 0.0;
    double t_total_s = 0.0;
    std::vector<DinkelbachTrace> traces;  // aligned with clients
};

struct Equilibrium {
    AllocationDecision decision;
    CostReport report;
    int outer_iterations = 0;
    bool follower_capacity_bound = false;
};

// Total client energy as the leader values it: per-client compute energy
// plus transmit power times the client's own transmit time.
inline double leader_objective(const std::vector<ClientProfile>& profiles,
                               const std::vector<double>& payload_bits,
                               const AllocationDecision& decision,
                               double capacitance = kEffectiveCapacitance) {
    double total = 0.0;
    for (std::size_t i = 0; i < profiles.size(); ++i) {
        const auto& a = decision.clients[i];
        total += local_cost(profiles[i], a.mapped_fraction, a.frequency_hz, capacitance).energy_j;
        if (a.rate_bps > 0.0) total += a.power_w * payload_bits[i] / a.rate_bps;
    }
    return total;
}

// Alternates the follower's share rule and the leader's closed forms until
// the reported energy settles. Initialization is at full resources
// (v_max, f_max, p_max): the first transmit time is then the shortest
// possible, which keeps the first leader pass feasible whenever the
// instance is feasible at all.
inline Equilibrium stackelberg_solve(const std::vector<ClientProfile>& profiles,
                                     const ServerProfile& server, const ChannelState& channel,
                                     const std::vector<double>& payload_bits,
                                     const SolverOptions& opts = {}) {
    const std::size_t n = profiles.size();
    if (n == 0) throw std::invalid_argument("empty selection");
    if (payload_bits.size() != n) throw std::invalid_argument("payload size mismatch");
    server.validate();
    channel.validate();
    for (const auto& p : profiles) p.validate();

    // align channel entries with the profile order
    std::vector<std::size_t> chan_idx(n);
    for (std::size_t i = 0; i < n; ++i) chan_idx[i] = channel.index_of(profiles[i].id);
    const std::vector<int> order = decoding_order(channel);

    std::vector<double> mapped(n), freq(n), power(n), own_t_cmp(n);
    std::vector<double> p_lo(n), p_hi(n), payload_by_chan(channel.gains.size()),
        budget_by_chan(channel.gains.size()), p_lo_chan(channel.gains.size()),
        p_hi_chan(channel.gains.size());
    for (std::size_t i = 0; i < n; ++i) {
        mapped[i] = profiles[i].max_mapped_fraction;
        freq[i] = profiles[i].f_max_hz;
        power[i] = profiles[i].p_max_w;
        p_lo[i] = profiles[i].p_min_w;
        p_hi[i] = profiles[i].p_max_w;
    }

    const auto common_transmit_time = [&](const std::vector<double>& powers,
                                          std::vector<double>* rates_out) -> double {
        TransmitPlan plan;
        plan.powers_w.assign(channel.gains.size(), 0.0);
        plan.payload_bits.assign(channel.gains.size(), 0.0);
        plan.decode_order = order;
        for (std::size_t i = 0; i < n; ++i) {
            plan.powers_w[chan_idx[i]] = powers[i];
            plan.payload_bits[chan_idx[i]] = payload_bits[i];
        }
        double worst = 0.0;
        if (rates_out) rates_out->assign(n, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            const double r = rate_bps(channel, plan, profiles[i].id);
            if (r <= 0.0) throw InfeasibleError("zero achievable rate", profiles[i].id);
            if (rates_out) (*rates_out)[i] = r;
            worst = std::max(worst, payload_bits[i] / r);
        }
        return worst;
    };

    std::vector<double> rates(n);
    double t_com = common_transmit_time(power, &rates);
    std::vector<DinkelbachTrace> traces(n);
    FollowerResponse follower;
    double energy_prev = std::numeric_limits<double>::infinity();
    double energy = energy_prev;
    int outer = 0;
    bool converged = false;
    std::vector<double> energy_history;

    while (outer < opts.max_outer_iterations) {
        ++outer;
        // follower: balance DT finish times around the current round length
        double window = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            own_t_cmp[i] =
                profiles[i].cycles_per_sample * (1.0 - mapped[i]) * profiles[i].data_size / freq[i];
            window = std::max(window, own_t_cmp[i]);
        }
        follower = follower_alpha(profiles, server, mapped, window + t_com);

        // leader: closed forms for v and f, then successive power updates
        const double compute_budget = server.round_deadline_s - t_com;
        for (std::size_t i = 0; i < n; ++i) {
            mapped[i] = leader_mapped_fraction(profiles[i], compute_budget);
            freq[i] = leader_frequency(profiles[i], mapped[i], compute_budget);
            own_t_cmp[i] =
                profiles[i].cycles_per_sample * (1.0 - mapped[i]) * profiles[i].data_size / freq[i];
        }
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t c = chan_idx[i];
            payload_by_chan[c] = payload_bits[i];
            budget_by_chan[c] = server.round_deadline_s - own_t_cmp[i];
            p_lo_chan[c] = p_lo[i];
            p_hi_chan[c] = p_hi[i];
        }
        auto power_results = successive_power(channel, order, payload_by_chan, budget_by_chan,
                                              p_lo_chan, p_hi_chan, opts);
        for (std::size_t i = 0; i < n; ++i) {
            power[i] = power_results[chan_idx[i]].power_w;
            traces[i] = std::move(power_results[chan_idx[i]].trace);
        }
        t_com = common_transmit_time(power, &rates);

        energy = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            energy += local_cost(profiles[i], mapped[i], freq[i], server.capacitance).energy_j;
            energy += power[i] * t_com;
        }
        energy_history.push_back(energy);
        if (std::abs(energy - energy_prev) <= opts.equilibrium_rel_tol * std::max(energy, 1e-30)) {
            converged = true;
            break;
        }
        energy_prev = energy;
    }
    if (!converged) {
        std::ostringstream msg;
        msg << "equilibrium loop hit " << outer << " iterations; energy history:";
        for (double e : energy_history) msg << ' ' << e;
        throw NonConvergenceError(msg.str());
    }

    double window = 0.0;
    for (std::size_t i = 0; i < n; ++i) window = std::max(window, own_t_cmp[i]);
    const double t_total = window + t_com;
    follower = follower_alpha(profiles, server, mapped, t_total);
    if (follower.dt_latency_s > server.round_deadline_s * (1.0 + 1e-9))
        throw InfeasibleError("DT computing cannot meet the round deadline");

    Equilibrium eq;
    eq.outer_iterations = outer;
    eq.follower_capacity_bound = follower.capacity_bound;
    eq.decision.t_cmp_s = window;
    eq.decision.t_com_s = t_com;
    eq.decision.t_dt_s = follower.dt_latency_s;
    eq.decision.t_total_s = t_total;
    eq.decision.traces = std::move(traces);
    eq.decision.clients.resize(n);

    std::vector<ClientCost> costs(n);
    for (std::size_t i = 0; i < n; ++i) {
        auto& a = eq.decision.clients[i];
        a.client_id = profiles[i].id;
        a.power_w = power[i];
        a.frequency_hz = freq[i];
        a.mapped_fraction = mapped[i];
        a.server_share = follower.shares[i];
        a.rate_bps = rates[i];

        const auto compute = local_cost(profiles[i], mapped[i], freq[i], server.capacitance);
        costs[i].client_id = profiles[i].id;
        costs[i].t_cmp_s = compute.latency_s;
        costs[i].e_cmp_j = compute.energy_j;
        costs[i].t_com_s = t_com;  // shared transmission window
        costs[i].e_com_j = power[i] * t_com;
        costs[i].t_dt_s = dt_cost(profiles[i], server, mapped[i], follower.shares[i]);
    }
    eq.report = aggregate_cost(std::move(costs));
    return eq;
}

}  // namespace dtfl
