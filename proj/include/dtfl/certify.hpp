#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <sstream>
#include <string>
#include <vector>

#include "dtfl/fl_engine.hpp"
#include "dtfl/game_solver.hpp"
#include "dtfl/oracle.hpp"
#include "dtfl/reputation.hpp"

namespace dtfl::certify {

// Solver-vs-oracle certifications shared by the `selftest` command and the
// acceptance suite. Instances are drawn inside the nominal operating ranges
// (the regime the closed forms cover); fading is clamped away from deep
// fades that would push an instance outside its deadline envelope.

struct Check {
    std::string name;
    bool passed = true;
    std::string detail;

    void fail(const std::string& why) {
        if (passed) detail = why;
        passed = false;
    }
};

inline ClientProfile random_profile(Rng& rng, int id) {
    ClientProfile p;
    p.id = id;
    p.data_size = std::floor(rng.uniform(500.0, 1300.0));
    p.cycles_per_sample = 1e7;
    p.f_min_hz = 1e9;
    p.f_max_hz = 1e10;
    p.p_min_w = 0.01;
    p.p_max_w = 0.1;
    // keep the residual local workload small enough that the deadline never
    // forces the frequency above its floor, even under NOMA interference
    p.max_mapped_fraction = rng.uniform(0.45, 0.8);
    return p;
}

inline double random_gain(Rng& rng) {
    const double distance = rng.uniform(50.0, 500.0);
    const double fading = std::clamp(rng.exponential(), 0.05, 8.0);
    return fading * std::pow(distance, -3.76);
}

inline ServerProfile random_server(Rng& rng) {
    ServerProfile s;
    s.frequency_hz = 1e11;
    s.size_deviation = std::floor(rng.uniform(0.0, 50.0));
    s.round_deadline_s = 10.0;
    return s;
}

inline SingleClientInstance random_single_instance(Rng& rng) {
    SingleClientInstance inst;
    inst.profile = random_profile(rng, 0);
    inst.server = random_server(rng);
    inst.bandwidth_hz = 1e6;
    inst.noise_power_w = noise_power_from_density(-174.0, inst.bandwidth_hz);
    inst.gain = random_gain(rng);
    inst.payload_bits = 1e6;
    return inst;
}

inline ChannelState instance_channel(const SingleClientInstance& inst) {
    ChannelState chan;
    chan.bandwidth_hz = inst.bandwidth_hz;
    chan.noise_power_w = inst.noise_power_w;
    chan.gains = {{inst.profile.id, inst.gain}};
    return chan;
}

// Criterion: the equilibrium energy of the closed forms matches (and is not
// beaten by) an exhaustive (p, f, v) grid.
inline Check closed_form_vs_grid(int instances = 200, std::uint64_t seed = 101) {
    Check check{"closed-form-vs-grid"};
    Rng rng(seed);
    for (int t = 0; t < instances && check.passed; ++t) {
        const auto inst = random_single_instance(rng);
        const auto eq = stackelberg_solve({inst.profile}, inst.server, instance_channel(inst),
                                          {inst.payload_bits});
        GridSpec grid;
        grid.power = {inst.profile.p_min_w, inst.profile.p_max_w, 64};
        grid.frequency = {inst.profile.f_min_hz, inst.profile.f_max_hz, 64};
        grid.mapped = {0.0, inst.profile.max_mapped_fraction, 64};
        const auto oracle = grid_min_energy(inst, grid);
        if (!oracle.feasible) {
            check.fail("instance " + std::to_string(t) + ": oracle found no feasible point");
            break;
        }
        const double solver_e = eq.report.total_energy_j;
        if (solver_e > oracle.energy_j + 1e-6) {
            std::ostringstream msg;
            msg << "instance " << t << ": solver energy " << solver_e
                << " above grid optimum " << oracle.energy_j;
            check.fail(msg.str());
        }
        if (oracle.energy_j - solver_e > 2.0 * oracle.cell_spread_j + 1e-9) {
            std::ostringstream msg;
            msg << "instance " << t << ": grid optimum " << oracle.energy_j
                << " more than two cells below solver energy " << solver_e;
            check.fail(msg.str());
        }
    }
    return check;
}

// Criterion: the follower's shares equalize the DT finish times, respect the
// unit budget, and are not beaten by the simplex grid.
inline Check follower_balance(int instances = 200, std::uint64_t seed = 102) {
    Check check{"follower-balance"};
    Rng rng(seed);
    for (int t = 0; t < instances && check.passed; ++t) {
        std::vector<ClientProfile> profiles;
        std::vector<double> mapped;
        for (int i = 0; i < 3; ++i) {
            profiles.push_back(random_profile(rng, i));
            mapped.push_back(rng.uniform(0.1, profiles[i].max_mapped_fraction));
        }
        auto server = random_server(rng);
        server.size_deviation = std::floor(rng.uniform(1.0, 50.0));
        // log-uniform total time so both budget branches appear
        const double t_total = std::exp(rng.uniform(std::log(0.02), std::log(10.0)));
        const auto response = follower_alpha(profiles, server, mapped, t_total);

        double share_sum = 0.0, t_min = 1e300, t_max = 0.0;
        for (std::size_t i = 0; i < profiles.size(); ++i) {
            share_sum += response.shares[i];
            const double t_dt = dt_cost(profiles[i], server, mapped[i], response.shares[i]);
            t_min = std::min(t_min, t_dt);
            t_max = std::max(t_max, t_dt);
        }
        if (share_sum > 1.0 + 1e-12) check.fail("share budget exceeded");
        if (response.capacity_bound && std::abs(share_sum - 1.0) > 1e-12)
            check.fail("capacity branch must spend the whole budget");
        if ((t_max - t_min) / t_max > 1e-9) check.fail("DT finish times not equalized");
        if (t_max + 1e-12 < t_total * (1.0 - 1e-12))
            check.fail("DT finish time below the round length");

        const double makespan = std::max(t_total, t_max);
        const auto oracle =
            grid_min_makespan_alpha(profiles, server, mapped, t_total, 64);
        if (!oracle.feasible) {
            check.fail("simplex oracle found no feasible point");
        } else if (oracle.makespan_s < makespan * (1.0 - 1e-9)) {
            std::ostringstream msg;
            msg << "instance " << t << ": grid found makespan " << oracle.makespan_s
                << " below the balanced " << makespan;
            check.fail(msg.str());
        }
    }
    return check;
}

inline PowerProblem random_power_problem(Rng& rng) {
    PowerProblem prob;
    prob.bandwidth_hz = 1e6;
    prob.payload_bits = 1e6;
    prob.p_min_w = 0.01;
    prob.p_max_w = 0.1;
    const double noise = noise_power_from_density(-174.0, prob.bandwidth_hz);
    prob.sinr_per_watt = random_gain(rng) / noise;
    prob.transmit_budget_s = rng.uniform(2.0, 9.5);
    return prob;
}

// Criterion: monotone q-sequence, terminal |W| within delta, few iterations,
// and agreement with the fine ratio grid.
inline Check dinkelbach_convergence(int instances = 200, std::uint64_t seed = 103) {
    Check check{"dinkelbach-convergence"};
    Rng rng(seed);
    for (int t = 0; t < instances && check.passed; ++t) {
        const auto prob = random_power_problem(rng);
        const auto result = dinkelbach_power(prob);
        if (!result.trace.converged) check.fail("no convergence flag");
        if (result.trace.iterations > 20)
            check.fail("needed " + std::to_string(result.trace.iterations) + " iterations");
        for (std::size_t i = 1; i < result.trace.steps.size(); ++i)
            if (result.trace.steps[i].q < result.trace.steps[i - 1].q - 1e-12)
                check.fail("q sequence decreased");
        const auto& last = result.trace.steps.back();
        if (std::abs(last.w) > 1e-6) check.fail("terminal |W(q)| above delta");

        const double rate = prob.bandwidth_hz * std::log2(1.0 + result.power_w * prob.sinr_per_watt);
        const double ratio = rate / (result.power_w * prob.payload_bits);
        if (std::abs(ratio - last.q) > 1e-9 * std::abs(last.q))
            check.fail("terminal q does not equal the achieved ratio");

        const auto oracle =
            ratio_grid_max(prob.sinr_per_watt, prob.payload_bits, prob.bandwidth_hz,
                           prob.transmit_budget_s, prob.p_min_w, prob.p_max_w, 1e-6);
        if (!oracle.feasible) {
            check.fail("ratio grid found no feasible power");
        } else {
            if (std::abs(result.power_w - oracle.power_w) > 2e-6)
                check.fail("power differs from the grid argmax by more than two cells");
            if (ratio < oracle.ratio * (1.0 - 1e-9))
                check.fail("grid found a strictly better ratio");
        }
    }
    return check;
}

// Independent two-client transmit-energy oracle: exhaustive coarse grid
// refined once around the incumbent. Objective and constraints are written
// out from the rate formula directly.
struct TwoClientPowerInstance {
    double gain_first = 0.0;   // decoded first, sees the other as interference
    double gain_second = 0.0;  // decoded second, interference-free
    double noise_w = 0.0;
    double bandwidth_hz = 0.0;
    double payload_bits = 0.0;
    double budget_first_s = 0.0;
    double budget_second_s = 0.0;
    double p_min_w = 0.0;
    double p_max_w = 0.0;
};

inline double two_client_energy(const TwoClientPowerInstance& inst, double p1, double p2) {
    const double r2 = inst.bandwidth_hz * std::log2(1.0 + p2 * inst.gain_second / inst.noise_w);
    const double r1 = inst.bandwidth_hz *
                      std::log2(1.0 + p1 * inst.gain_first /
                                          (p2 * inst.gain_second + inst.noise_w));
    const double slack = 1.0 + 1e-12;
    if (r1 * slack < inst.payload_bits / inst.budget_first_s) return 1e300;
    if (r2 * slack < inst.payload_bits / inst.budget_second_s) return 1e300;
    return p1 * inst.payload_bits / r1 + p2 * inst.payload_bits / r2;
}

inline double two_client_grid_min(const TwoClientPowerInstance& inst, int steps = 301) {
    double best = 1e300, best_p1 = inst.p_min_w, best_p2 = inst.p_min_w;
    const double span = inst.p_max_w - inst.p_min_w;
    const auto scan = [&](double lo1, double hi1, double lo2, double hi2) {
        for (int i = 0; i < steps; ++i) {
            const double p1 = lo1 + (hi1 - lo1) * i / (steps - 1);
            for (int j = 0; j < steps; ++j) {
                const double p2 = lo2 + (hi2 - lo2) * j / (steps - 1);
                const double e = two_client_energy(inst, p1, p2);
                if (e < best) {
                    best = e;
                    best_p1 = p1;
                    best_p2 = p2;
                }
            }
        }
    };
    scan(inst.p_min_w, inst.p_max_w, inst.p_min_w, inst.p_max_w);
    if (best >= 1e300) return best;
    const double cell = span / (steps - 1);
    const auto clampp = [&](double x) { return std::clamp(x, inst.p_min_w, inst.p_max_w); };
    scan(clampp(best_p1 - 1.5 * cell), clampp(best_p1 + 1.5 * cell),
         clampp(best_p2 - 1.5 * cell), clampp(best_p2 + 1.5 * cell));
    return best;
}

// Criterion: successive per-client optimization reaches the joint grid
// optimum of the two-client transmit energy.
inline Check successive_vs_grid(int instances = 100, std::uint64_t seed = 104) {
    Check check{"successive-power-vs-grid"};
    Rng rng(seed);
    for (int t = 0; t < instances && check.passed; ++t) {
        TwoClientPowerInstance inst;
        inst.bandwidth_hz = 1e6;
        inst.noise_w = noise_power_from_density(-174.0, inst.bandwidth_hz);
        double g1 = random_gain(rng), g2 = random_gain(rng);
        if (g1 < g2) std::swap(g1, g2);
        inst.gain_first = g1;
        inst.gain_second = g2;
        inst.payload_bits = 1e6;
        inst.budget_first_s = rng.uniform(1.0, 9.0);
        inst.budget_second_s = rng.uniform(1.0, 9.0);
        inst.p_min_w = 0.01;
        inst.p_max_w = 0.1;

        ChannelState chan;
        chan.bandwidth_hz = inst.bandwidth_hz;
        chan.noise_power_w = inst.noise_w;
        chan.gains = {{0, g1}, {1, g2}};
        std::vector<PowerResult> results;
        try {
            results = successive_power(chan, {0, 1}, {inst.payload_bits, inst.payload_bits},
                                       {inst.budget_first_s, inst.budget_second_s},
                                       {inst.p_min_w, inst.p_min_w},
                                       {inst.p_max_w, inst.p_max_w});
        } catch (const InfeasibleError&) {
            const double grid = two_client_grid_min(inst);
            if (grid < 1e300) check.fail("solver infeasible but grid found a point");
            continue;
        }
        const double solver_e =
            two_client_energy(inst, results[0].power_w, results[1].power_w);
        const double grid_e = two_client_grid_min(inst);
        if (grid_e >= 1e300) {
            check.fail("grid infeasible but solver returned a point");
            continue;
        }
        if (std::abs(solver_e - grid_e) > 1e-3 * grid_e) {
            std::ostringstream msg;
            msg << "instance " << t << ": solver energy " << solver_e << " vs grid " << grid_e;
            check.fail(msg.str());
        }
    }
    return check;
}

namespace stability_detail {

struct Instance {
    std::vector<ClientProfile> profiles;
    ServerProfile server;
    ChannelState channel;
    std::vector<double> payloads;
};

inline Instance random_instance(Rng& rng, int n_clients) {
    Instance inst;
    inst.server = random_server(rng);
    inst.channel.bandwidth_hz = 1e6;
    inst.channel.noise_power_w = noise_power_from_density(-174.0, 1e6);
    for (int i = 0; i < n_clients; ++i) {
        inst.profiles.push_back(random_profile(rng, i));
        inst.channel.gains.push_back({i, random_gain(rng)});
        inst.payloads.push_back(1e6);
    }
    return inst;
}

// Leader-side bookkeeping of a (possibly deviated) strategy under
// synchronized phases: everyone computes inside a shared window, then
// everyone transmits together.
struct LeaderOutcome {
    bool feasible = false;
    double energy_j = 0.0;
};

inline LeaderOutcome evaluate_leader(const Instance& inst, const std::vector<double>& powers,
                                     const std::vector<double>& freqs,
                                     const std::vector<double>& mapped) {
    LeaderOutcome out;
    const std::size_t n = inst.profiles.size();
    TransmitPlan plan;
    plan.powers_w.assign(n, 0.0);
    plan.payload_bits.assign(n, 0.0);
    plan.decode_order = decoding_order(inst.channel);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t c = inst.channel.index_of(inst.profiles[i].id);
        plan.powers_w[c] = powers[i];
        plan.payload_bits[c] = inst.payloads[i];
    }
    double window = 0.0, t_com = 0.0, energy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const auto& p = inst.profiles[i];
        if (powers[i] < p.p_min_w - 1e-15 || powers[i] > p.p_max_w + 1e-15) return out;
        if (freqs[i] < p.f_min_hz - 1e-6 || freqs[i] > p.f_max_hz + 1e-6) return out;
        if (mapped[i] < -1e-15 || mapped[i] > p.max_mapped_fraction + 1e-15) return out;
        const double rate = rate_bps(inst.channel, plan, p.id);
        if (rate <= 0.0) return out;
        const double t_cmp = p.cycles_per_sample * (1.0 - mapped[i]) * p.data_size / freqs[i];
        window = std::max(window, t_cmp);
        t_com = std::max(t_com, inst.payloads[i] / rate);
        energy += 0.5 * inst.server.capacitance * p.cycles_per_sample * (1.0 - mapped[i]) *
                  p.data_size * freqs[i] * freqs[i];
        energy += powers[i] * inst.payloads[i] / rate;
    }
    if (window + t_com > inst.server.round_deadline_s * (1.0 + 1e-12)) return out;
    out.feasible = true;
    out.energy_j = energy;
    return out;
}

}  // namespace stability_detail

// Criterion: no feasible unilateral deviation improves the deviator. The
// follower deviates in its shares against the round length; the leader
// deviates one coordinate of (p, f, v) under synchronized-phase
// feasibility, scored by its own objective (compute energy plus own
// transmit energy).
inline Check equilibrium_stability(int instances = 50, int deviations = 100,
                                   std::uint64_t seed = 105) {
    Check check{"equilibrium-stability"};
    Rng rng(seed);
    for (int t = 0; t < instances && check.passed; ++t) {
        const auto inst = stability_detail::random_instance(rng, 3);
        const auto eq = stackelberg_solve(inst.profiles, inst.server, inst.channel, inst.payloads);
        const std::size_t n = inst.profiles.size();

        std::vector<double> powers(n), freqs(n), mapped(n), shares(n);
        for (std::size_t i = 0; i < n; ++i) {
            powers[i] = eq.decision.clients[i].power_w;
            freqs[i] = eq.decision.clients[i].frequency_hz;
            mapped[i] = eq.decision.clients[i].mapped_fraction;
            shares[i] = eq.decision.clients[i].server_share;
        }
        const auto base = stability_detail::evaluate_leader(inst, powers, freqs, mapped);
        if (!base.feasible) {
            check.fail("equilibrium failed its own feasibility audit");
            break;
        }
        const double t_round = eq.decision.t_total_s;
        const double base_latency = std::max(t_round, eq.decision.t_dt_s);

        for (int d = 0; d < deviations; ++d) {
            const std::size_t who = rng.below(n);
            const double factor = 1.0 + rng.uniform(-0.05, 0.05);
            if (d % 2 == 0) {
                // follower deviation: scale one share, keep the budget
                auto dev = shares;
                dev[who] = std::clamp(dev[who] * factor, 0.0, 1.0);
                double total = 0.0;
                for (double s : dev) total += s;
                if (total > 1.0 + 1e-12) continue;
                double latency = t_round;
                bool feasible = true;
                for (std::size_t i = 0; i < n && feasible; ++i) {
                    const double work = inst.profiles[i].cycles_per_sample *
                                        (mapped[i] * inst.profiles[i].data_size +
                                         inst.server.size_deviation);
                    if (work == 0.0) continue;
                    if (dev[i] <= 0.0) feasible = false;
                    else latency = std::max(latency, work / (dev[i] * inst.server.frequency_hz));
                }
                if (!feasible) continue;
                if (latency < base_latency - 1e-6) {
                    std::ostringstream msg;
                    msg << "instance " << t << ": follower deviation improved latency "
                        << base_latency << " -> " << latency;
                    check.fail(msg.str());
                    break;
                }
            } else {
                // leader deviation: one coordinate of one client
                auto p2 = powers;
                auto f2 = freqs;
                auto v2 = mapped;
                switch (rng.below(3)) {
                    case 0: p2[who] = std::clamp(p2[who] * factor, inst.profiles[who].p_min_w,
                                                 inst.profiles[who].p_max_w); break;
                    case 1: f2[who] = std::clamp(f2[who] * factor, inst.profiles[who].f_min_hz,
                                                 inst.profiles[who].f_max_hz); break;
                    default: v2[who] = std::clamp(v2[who] * factor, 0.0,
                                                  inst.profiles[who].max_mapped_fraction); break;
                }
                const auto dev = stability_detail::evaluate_leader(inst, p2, f2, v2);
                if (!dev.feasible) continue;
                if (dev.energy_j < base.energy_j - 1e-6) {
                    std::ostringstream msg;
                    msg << "instance " << t << ": leader deviation improved energy "
                        << base.energy_j << " -> " << dev.energy_j;
                    check.fail(msg.str());
                    break;
                }
            }
        }
    }
    return check;
}

// Criterion: gradient correctness, KKT residuals, staleness normalization,
// and bit-exact absence of rejected updates.
inline Check numerical_hygiene(std::uint64_t seed = 109) {
    Check check{"numerical-hygiene"};
    Rng rng(seed);

    // analytic gradient vs central finite differences
    for (int t = 0; t < 20 && check.passed; ++t) {
        const std::size_t dim = 4 + rng.below(4), classes = 2 + rng.below(3);
        Dataset data;
        data.feature_dim = dim;
        data.num_classes = classes;
        const std::size_t count = 12;
        for (std::size_t i = 0; i < count; ++i) {
            for (std::size_t j = 0; j < dim; ++j) data.features.push_back(rng.normal());
            data.labels.push_back(static_cast<int>(rng.below(classes)));
        }
        ModelParams model = zero_model(dim, classes);
        for (auto& w : model.values) w = 0.5 * rng.normal();
        Batch batch{&data, {0, count}, nullptr};
        const auto grad = model_gradient(model, batch, dim, classes);
        double err2 = 0.0, norm2 = 0.0;
        for (std::size_t i = 0; i < model.values.size(); ++i) {
            const double h = 1e-6 * (1.0 + std::abs(model.values[i]));
            ModelParams plus = model, minus = model;
            plus.values[i] += h;
            minus.values[i] -= h;
            const double fd = (model_loss(plus, batch, dim, classes) -
                               model_loss(minus, batch, dim, classes)) /
                              (2.0 * h);
            err2 += (grad[i] - fd) * (grad[i] - fd);
            norm2 += fd * fd;
        }
        if (std::sqrt(err2) > 1e-4 * std::max(std::sqrt(norm2), 1e-12))
            check.fail("analytic gradient disagrees with finite differences");
    }

    // KKT residual at interior stationary points, and bound activation at
    // Dinkelbach exits
    for (int t = 0; t < 50 && check.passed; ++t) {
        const auto prob = random_power_problem(rng);
        const double p_target = rng.uniform(prob.p_min_w * 1.2, prob.p_max_w * 0.8);
        const double q = prob.bandwidth_hz /
                         (std::log(2.0) * prob.payload_bits * (p_target + 1.0 / prob.sinr_per_watt));
        DualState zeros;
        const double p_star = kkt_stationary_power(q, prob, zeros);
        const double h = 1e-9 * p_star;
        const double fd = (detail::q_objective(prob, q, p_star + h) -
                           detail::q_objective(prob, q, p_star - h)) /
                          (2.0 * h);
        // residual normalized by the common magnitude of the two gradient terms
        if (std::abs(fd) / (q * prob.payload_bits) > 1e-6)
            check.fail("interior KKT residual above tolerance");

        // at the Dinkelbach exit either the point is interior-stationary or
        // the active bound has the right slope sign
        const auto result = dinkelbach_power(prob);
        const double q_exit = result.trace.steps.back().q;
        const double slope =
            prob.bandwidth_hz * prob.sinr_per_watt /
                (std::log(2.0) * (1.0 + result.power_w * prob.sinr_per_watt)) -
            q_exit * prob.payload_bits;
        const double p_floor =
            (std::exp2(prob.payload_bits / (prob.transmit_budget_s * prob.bandwidth_hz)) - 1.0) /
            prob.sinr_per_watt;
        const double lo = std::max(prob.p_min_w, p_floor);
        const bool at_lower = std::abs(result.power_w - lo) <= 1e-12 + 1e-9 * lo;
        const bool at_upper = std::abs(result.power_w - prob.p_max_w) <= 1e-9 * prob.p_max_w;
        const double tol = 1e-6 * q_exit * prob.payload_bits;
        if (at_lower) {
            if (slope > tol) check.fail("lower bound active but the objective still ascends");
        } else if (at_upper) {
            if (slope < -tol) check.fail("upper bound active but the objective still descends");
        } else if (std::abs(slope) > tol) {
            check.fail("exit point neither stationary nor at a bound");
        }
    }

    // staleness normalization across rounds
    {
        std::vector<ClientProfile> profiles;
        for (int i = 0; i < 20; ++i) profiles.push_back(random_profile(rng, i));
        auto state = make_reputation(profiles, 0.0, {});
        for (int round = 0; round < 100 && check.passed; ++round) {
            std::vector<int> picked;
            for (int id = 0; id < 20; ++id)
                if (rng.uniform() < 0.25) picked.push_back(id);
            update_staleness(state, picked, round);
            double sum = 0.0;
            for (double x : normalized_staleness(state)) sum += x;
            if (std::abs(sum - 1.0) > 1e-12) check.fail("staleness normalization drifted");
        }
    }

    // rejected updates leave no trace in the aggregate
    if (check.passed) {
        const std::size_t dim = 6, classes = 3;
        ModelParams clean = zero_model(dim, classes), dirty = clean, spare = clean;
        for (auto& w : clean.values) w = rng.normal();
        for (auto& w : spare.values) w = rng.normal();
        for (auto& w : dirty.values) w = 100.0 * rng.normal();
        std::vector<Contribution> kept = {{1000, 0.4, &clean}, {800, 0.2, &spare}};
        const auto before = aggregate(kept, clean, 10.0);
        for (auto& w : dirty.values) w = -w;  // mutate the excluded update
        const auto after = aggregate(kept, clean, 10.0);
        if (!(before == after)) check.fail("excluded update leaked into the aggregate");
    }
    return check;
}

inline std::vector<Check> run_all() {
    return {closed_form_vs_grid(), follower_balance(), dinkelbach_convergence(),
            successive_vs_grid(), equilibrium_stability(), numerical_hygiene()};
}

}  // namespace dtfl::certify
