#pragma once

#include <cmath>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "dtfl/dataset.hpp"
#include "dtfl/fl_engine.hpp"
#include "dtfl/game_solver.hpp"
#include "dtfl/reputation.hpp"
#include "dtfl/scenario.hpp"

namespace dtfl {

// End-to-end round loop: reputation selection, channel draw, resource
// allocation (game solver or a baseline), local + DT training, screening,
// aggregation, and cost accounting, streamed out as CSV rows.

enum class Scheme { proposed, no_dt, oma, ideal, random_alloc };

inline Scheme scheme_from_string(const std::string& name) {
    if (name == "proposed") return Scheme::proposed;
    if (name == "no_dt") return Scheme::no_dt;
    if (name == "oma") return Scheme::oma;
    if (name == "ideal") return Scheme::ideal;
    if (name == "random") return Scheme::random_alloc;
    throw std::invalid_argument("unknown scheme " + name);
}

inline const char* scheme_name(Scheme s) {
    switch (s) {
        case Scheme::proposed: return "proposed";
        case Scheme::no_dt: return "no_dt";
        case Scheme::oma: return "oma";
        case Scheme::ideal: return "ideal";
        default: return "random";
    }
}

struct MetricsRow {
    long round = 0;
    std::string scheme;
    double accuracy = 0.0;
    double total_latency_s = 0.0;
    double total_energy_j = 0.0;
    double t_cmp_s = 0.0;
    double t_com_s = 0.0;
    double t_dt_s = 0.0;
    std::size_t ni_count = 0;
    std::vector<int> selected;  // ascending ids
};

inline std::string metrics_csv_header() {
    return "round,scheme,accuracy,total_latency_s,total_energy_j,t_cmp_s,t_com_s,t_dt_s,"
           "ni_count,selected_ids";
}

inline std::string to_csv(const MetricsRow& row) {
    std::ostringstream out;
    out << std::setprecision(12);
    out << row.round << ',' << row.scheme << ',' << row.accuracy << ',' << row.total_latency_s
        << ',' << row.total_energy_j << ',' << row.t_cmp_s << ',' << row.t_com_s << ','
        << row.t_dt_s << ',' << row.ni_count << ',';
    for (std::size_t i = 0; i < row.selected.size(); ++i) {
        if (i) out << ';';
        out << row.selected[i];
    }
    return out.str();
}

namespace sim_detail {

struct RatePlan {
    std::vector<double> rates_bps;  // aligned with the given profiles
    double t_com_s = 0.0;           // shared transmission window
};

inline RatePlan noma_rates(const ChannelState& channel, const std::vector<ClientProfile>& profiles,
                           const std::vector<double>& payload_bits,
                           const std::vector<double>& powers) {
    TransmitPlan plan;
    plan.powers_w.assign(channel.gains.size(), 0.0);
    plan.payload_bits.assign(channel.gains.size(), 0.0);
    plan.decode_order = decoding_order(channel);
    for (std::size_t i = 0; i < profiles.size(); ++i) {
        const std::size_t c = channel.index_of(profiles[i].id);
        plan.powers_w[c] = powers[i];
        plan.payload_bits[c] = payload_bits[i];
    }
    RatePlan result;
    result.rates_bps.resize(profiles.size());
    for (std::size_t i = 0; i < profiles.size(); ++i) {
        const double r = rate_bps(channel, plan, profiles[i].id);
        if (r <= 0.0) throw InfeasibleError("zero achievable rate", profiles[i].id);
        result.rates_bps[i] = r;
        result.t_com_s = std::max(result.t_com_s, payload_bits[i] / r);
    }
    return result;
}

inline Equilibrium assemble(const std::vector<ClientProfile>& profiles,
                            const ServerProfile& server, const std::vector<double>& powers,
                            const std::vector<double>& freqs, const std::vector<double>& mapped,
                            const std::vector<double>& shares, const RatePlan& rates,
                            double t_dt_s, bool capacity_bound, bool zero_compute) {
    Equilibrium eq;
    eq.follower_capacity_bound = capacity_bound;
    eq.decision.t_com_s = rates.t_com_s;
    eq.decision.t_dt_s = t_dt_s;
    std::vector<ClientCost> costs(profiles.size());
    eq.decision.clients.resize(profiles.size());
    for (std::size_t i = 0; i < profiles.size(); ++i) {
        auto& a = eq.decision.clients[i];
        a.client_id = profiles[i].id;
        a.power_w = powers[i];
        a.frequency_hz = freqs[i];
        a.mapped_fraction = mapped[i];
        a.server_share = shares[i];
        a.rate_bps = rates.rates_bps[i];
        ComputeCost compute{0.0, 0.0};
        if (!zero_compute) compute = local_cost(profiles[i], mapped[i], freqs[i], server.capacitance);
        eq.decision.t_cmp_s = std::max(eq.decision.t_cmp_s, compute.latency_s);
        costs[i] = {profiles[i].id, compute.latency_s,      compute.energy_j,
                    rates.t_com_s,  powers[i] * rates.t_com_s, 0.0};
        if (shares[i] > 0.0 || mapped[i] * profiles[i].data_size + server.size_deviation == 0.0)
            costs[i].t_dt_s = dt_cost(profiles[i], server, mapped[i], shares[i]);
        else
            costs[i].t_dt_s = t_dt_s;
    }
    eq.decision.t_total_s = eq.decision.t_cmp_s + eq.decision.t_com_s;
    eq.report = aggregate_cost(std::move(costs));
    return eq;
}

// DT-assisted allocation over orthogonal subbands: every client gets B/N and
// the matching share of the noise, rates are interference-free, v and f use
// the same closed forms as the game solver.
inline Equilibrium oma_allocate(const std::vector<ClientProfile>& profiles,
                                const ServerProfile& server, const ChannelState& channel,
                                const std::vector<double>& payload_bits,
                                const SolverOptions& opts) {
    const std::size_t n = profiles.size();
    const double sub_band = channel.bandwidth_hz / static_cast<double>(n);
    const double sub_noise = channel.noise_power_w / static_cast<double>(n);

    std::vector<double> mapped(n), freqs(n), powers(n), own_t_cmp(n, 0.0), rates(n);
    for (std::size_t i = 0; i < n; ++i) {
        mapped[i] = profiles[i].max_mapped_fraction;
        freqs[i] = profiles[i].f_max_hz;
        powers[i] = profiles[i].p_max_w;
    }
    const auto transmit_time = [&]() {
        double worst = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            rates[i] = sub_band *
                       std::log2(1.0 + powers[i] * channel.gain_of(profiles[i].id) / sub_noise);
            worst = std::max(worst, payload_bits[i] / rates[i]);
        }
        return worst;
    };
    double t_com = transmit_time();
    double energy_prev = std::numeric_limits<double>::infinity();
    bool converged = false;
    for (int outer = 0; outer < opts.max_outer_iterations && !converged; ++outer) {
        const double compute_budget = server.round_deadline_s - t_com;
        double energy = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            mapped[i] = leader_mapped_fraction(profiles[i], compute_budget);
            freqs[i] = leader_frequency(profiles[i], mapped[i], compute_budget);
            own_t_cmp[i] = profiles[i].cycles_per_sample * (1.0 - mapped[i]) *
                           profiles[i].data_size / freqs[i];
            PowerProblem prob;
            prob.sinr_per_watt = channel.gain_of(profiles[i].id) / sub_noise;
            prob.payload_bits = payload_bits[i];
            prob.bandwidth_hz = sub_band;
            prob.transmit_budget_s = server.round_deadline_s - own_t_cmp[i];
            prob.p_min_w = profiles[i].p_min_w;
            prob.p_max_w = profiles[i].p_max_w;
            powers[i] = dinkelbach_power(prob, opts, profiles[i].id).power_w;
            energy += local_cost(profiles[i], mapped[i], freqs[i], server.capacitance).energy_j;
        }
        t_com = transmit_time();
        for (std::size_t i = 0; i < n; ++i) energy += powers[i] * t_com;
        converged = std::abs(energy - energy_prev) <= opts.equilibrium_rel_tol * energy;
        energy_prev = energy;
    }
    if (!converged) throw NonConvergenceError("oma allocation loop stalled");

    double window = 0.0;
    for (std::size_t i = 0; i < n; ++i) window = std::max(window, own_t_cmp[i]);
    const auto follower = follower_alpha(profiles, server, mapped, window + t_com);

    RatePlan plan;
    plan.rates_bps = rates;
    plan.t_com_s = t_com;
    return assemble(profiles, server, powers, freqs, mapped, follower.shares, plan,
                    follower.dt_latency_s, follower.capacity_bound, false);
}

inline Equilibrium ideal_allocate(const std::vector<ClientProfile>& profiles,
                                  const ServerProfile& server, const ChannelState& channel,
                                  const std::vector<double>& payload_bits,
                                  const SolverOptions& opts) {
    const std::size_t n = profiles.size();
    const auto order = decoding_order(channel);
    std::vector<double> budgets(channel.gains.size(), server.round_deadline_s);
    std::vector<double> payload_chan(channel.gains.size(), 0.0), lo(channel.gains.size(), 0.0),
        hi(channel.gains.size(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t c = channel.index_of(profiles[i].id);
        payload_chan[c] = payload_bits[i];
        lo[c] = profiles[i].p_min_w;
        hi[c] = profiles[i].p_max_w;
    }
    const auto results = successive_power(channel, order, payload_chan, budgets, lo, hi, opts);
    std::vector<double> powers(n), freqs(n), mapped(n, 0.0), shares(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        powers[i] = results[channel.index_of(profiles[i].id)].power_w;
        freqs[i] = profiles[i].f_min_hz;
    }
    ServerProfile no_dt_server = server;
    no_dt_server.size_deviation = 0.0;
    const auto plan = noma_rates(channel, profiles, payload_bits, powers);
    return assemble(profiles, no_dt_server, powers, freqs, mapped, shares, plan, 0.0, false, true);
}

inline Equilibrium random_allocate(const std::vector<ClientProfile>& profiles,
                                   const ServerProfile& server, const ChannelState& channel,
                                   const std::vector<double>& payload_bits, Rng& rng) {
    const std::size_t n = profiles.size();
    std::vector<double> powers(n), freqs(n), mapped(n), shares(n);
    double share_total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        powers[i] = rng.uniform(profiles[i].p_min_w, profiles[i].p_max_w);
        freqs[i] = rng.uniform(profiles[i].f_min_hz, profiles[i].f_max_hz);
        mapped[i] = rng.uniform(0.0, profiles[i].max_mapped_fraction);
        shares[i] = rng.exponential();
        share_total += shares[i];
    }
    double t_dt = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        shares[i] /= share_total;  // uniform over the simplex
        t_dt = std::max(t_dt, dt_cost(profiles[i], server, mapped[i], shares[i]));
    }
    const auto plan = noma_rates(channel, profiles, payload_bits, powers);
    return assemble(profiles, server, powers, freqs, mapped, shares, plan, t_dt, true, false);
}

}  // namespace sim_detail

// Resource allocation for the comparison schemes; `proposed` goes through
// stackelberg_solve instead.
inline Equilibrium baseline_allocate(Scheme scheme, const std::vector<ClientProfile>& profiles,
                                     const ServerProfile& server, const ChannelState& channel,
                                     const std::vector<double>& payload_bits, Rng& rng,
                                     const SolverOptions& opts = {}) {
    switch (scheme) {
        case Scheme::no_dt: {
            auto local_only = profiles;
            for (auto& p : local_only) p.max_mapped_fraction = 0.0;
            ServerProfile s = server;
            s.size_deviation = 0.0;
            return stackelberg_solve(local_only, s, channel, payload_bits, opts);
        }
        case Scheme::oma:
            return sim_detail::oma_allocate(profiles, server, channel, payload_bits, opts);
        case Scheme::ideal:
            return sim_detail::ideal_allocate(profiles, server, channel, payload_bits, opts);
        case Scheme::random_alloc:
            return sim_detail::random_allocate(profiles, server, channel, payload_bits, rng);
        default:
            throw std::invalid_argument("baseline_allocate called with the proposed scheme");
    }
}

// Swap infeasible clients for the next-ranked spares; a client dropped in a
// round is never retried in that round.
template <typename Allocator>
std::pair<std::vector<int>, Equilibrium> allocate_with_reselect(std::vector<int> selection,
                                                                std::vector<int> spares,
                                                                Allocator&& allocate,
                                                                std::vector<int>* dropped_log = nullptr) {
    for (;;) {
        try {
            Equilibrium eq = allocate(selection);
            return {selection, std::move(eq)};
        } catch (const InfeasibleError& e) {
            if (e.client_id() < 0) throw;
            const auto it = std::find(selection.begin(), selection.end(), e.client_id());
            if (it == selection.end()) throw;
            if (dropped_log) dropped_log->push_back(e.client_id());
            selection.erase(it);
            if (!spares.empty()) {
                selection.push_back(spares.front());
                spares.erase(spares.begin());
            }
            if (selection.empty()) throw;
        }
    }
}

struct SimulationResult {
    std::vector<MetricsRow> rows;
    std::vector<FlRound> fl_rounds;
    double final_accuracy = 0.0;
};

inline SimulationResult run_simulation(const Scenario& scenario, std::ostream* csv = nullptr) {
    scenario.validate();
    const Scheme scheme = scheme_from_string(scenario.scheme);
    const bool uses_dt = scheme != Scheme::no_dt && scheme != Scheme::ideal;
    const double eps_eff = uses_dt ? scenario.size_deviation : 0.0;

    const auto profiles = build_profiles(scenario);
    const auto positions = client_positions(scenario);
    const ServerProfile server = scenario.server();
    const double noise_w = scenario.noise_power_w();

    Dataset data;
    if (scenario.dataset == "synthetic") {
        SyntheticSpec spec;
        spec.clients = static_cast<std::size_t>(scenario.clients);
        spec.samples_per_client = static_cast<std::size_t>(std::llround(scenario.data_size));
        spec.validation_samples = scenario.validation_samples;
        spec.class_separation = scenario.class_separation;
        spec.iid = scenario.distribution == "iid";
        spec.labels_per_client = scenario.labels_per_client;
        spec.seed = derive_seed(scenario.seed, 0xda7aULL);
        data = make_synthetic(spec);
    } else {
        data = load_mnist(scenario.mnist_images, scenario.mnist_labels,
                          static_cast<std::size_t>(scenario.clients),
                          static_cast<std::size_t>(std::llround(scenario.data_size)),
                          scenario.validation_samples, scenario.distribution == "iid",
                          scenario.labels_per_client, scenario.seed);
    }

    auto reputation_state = make_reputation(profiles, scenario.size_deviation,
                                            scenario.reputation_weights(),
                                            scenario.interaction_prior);
    ModelParams global = zero_model(data.feature_dim, data.num_classes);
    const Batch validation{&data, data.validation, nullptr};

    SimulationResult result;
    if (csv) *csv << metrics_csv_header() << '\n';

    for (long round = 0; round < scenario.rounds; ++round) {
        // selection by reputation rank, with drop-and-reselect on infeasibility
        const auto ranked = select_top_n(reputation_state, reputation_state.entries.size());
        std::vector<int> selection(ranked.begin(), ranked.begin() + scenario.selected);
        std::vector<int> spares(ranked.begin() + scenario.selected, ranked.end());

        Rng fading_rng(derive_seed(scenario.seed, 0xfadeULL, static_cast<std::uint64_t>(round)));
        const auto channel_all = sample_gains(positions, scenario.bandwidth_hz, noise_w,
                                              fading_rng, scenario.path_loss_exponent);

        Rng alloc_rng(derive_seed(scenario.seed, 0xa110cULL, static_cast<std::uint64_t>(round)));
        const auto allocate = [&](const std::vector<int>& ids) {
            std::vector<ClientProfile> sub;
            ChannelState chan;
            chan.bandwidth_hz = channel_all.bandwidth_hz;
            chan.noise_power_w = channel_all.noise_power_w;
            std::vector<double> payloads;
            for (int id : ids) {
                sub.push_back(profiles[id]);
                chan.gains.push_back({id, channel_all.gain_of(id)});
                payloads.push_back(scenario.model_bits);
            }
            if (scheme == Scheme::proposed)
                return stackelberg_solve(sub, server, chan, payloads);
            return baseline_allocate(scheme, sub, server, chan, payloads, alloc_rng);
        };
        auto [chosen, eq] = allocate_with_reselect(selection, spares, allocate);

        // training
        std::vector<ModelParams> updates(chosen.size());
        std::vector<Dataset::Span> mapped_spans(chosen.size());
        std::vector<Contribution> candidates(chosen.size());
        for (std::size_t i = 0; i < chosen.size(); ++i) {
            const int id = chosen[i];
            const double v = eq.decision.clients[i].mapped_fraction;
            const auto split = split_client_span(data.client_spans[id], v);
            mapped_spans[i] = uses_dt ? split.mapped : Dataset::Span{0, 0};
            std::vector<int> tampered;
            const int* override_ptr = nullptr;
            if (!profiles[id].honest && split.local.count > 0) {
                tampered = flipped_labels(data, split.local);
                override_ptr = tampered.data();
            }
            const auto local = local_train(global, data, data.client_spans[id], v,
                                           scenario.local_steps, scenario.learning_rate,
                                           override_ptr);
            updates[i] = local.value_or(global);
            candidates[i] = {profiles[id].data_size, v, &updates[i]};
        }
        Rng dt_rng(derive_seed(scenario.seed, 0xd7ULL, static_cast<std::uint64_t>(round)));
        const ModelParams dt_model =
            uses_dt ? dt_train(global, data, mapped_spans,
                               static_cast<std::size_t>(std::llround(eps_eff)),
                               scenario.dt_deviation, scenario.dt_steps,
                               scenario.learning_rate, dt_rng)
                    : global;

        // screening and aggregation
        ScreeningResult screening;
        if (scenario.roni_enabled)
            screening = roni_screen(global, candidates, dt_model, eps_eff, data,
                                    scenario.roni_threshold);
        else
            screening.positive.assign(candidates.size(), true);

        FlRound fl_round;
        fl_round.index = round;
        fl_round.selected = chosen;
        fl_round.verdicts = screening.positive;
        fl_round.negative_count = screening.negative_count;

        std::vector<Contribution> kept;
        double kept_data = 0.0;
        for (std::size_t i = 0; i < candidates.size(); ++i) {
            auto& counts = reputation_state.entries[reputation_state.index_of(chosen[i])]
                               .interactions;
            if (screening.positive[i]) {
                ++counts.positive;
                kept.push_back(candidates[i]);
                kept_data += candidates[i].data_size;
            } else {
                ++counts.negative;
            }
        }
        if (!kept.empty()) {
            global = aggregate(kept, dt_model, eps_eff);
            fl_round.weight_sum = convergence_factor(eps_eff, kept.size(), kept_data);
        }

        update_staleness(reputation_state, chosen, round);
        {
            double norm_sum = 0.0;
            for (double x : normalized_staleness(reputation_state)) norm_sum += x;
            if (std::abs(norm_sum - 1.0) > 1e-12)
                throw std::logic_error("staleness normalization drifted");
        }

        fl_round.accuracy = model_accuracy(global, validation, data.feature_dim, data.num_classes);
        result.fl_rounds.push_back(fl_round);

        MetricsRow row;
        row.round = round;
        row.scheme = scenario.scheme;
        row.accuracy = fl_round.accuracy;
        row.total_latency_s = eq.report.total_latency_s;
        row.total_energy_j = eq.report.total_energy_j;
        row.t_cmp_s = eq.decision.t_cmp_s;
        row.t_com_s = eq.decision.t_com_s;
        row.t_dt_s = eq.decision.t_dt_s;
        row.ni_count = screening.negative_count;
        row.selected = chosen;
        std::sort(row.selected.begin(), row.selected.end());
        if (csv) *csv << to_csv(row) << '\n';
        result.rows.push_back(std::move(row));
    }
    result.final_accuracy =
        model_accuracy(global, validation, data.feature_dim, data.num_classes);
    return result;
}

// --- parameter sweeps -------------------------------------------------------

struct SweepRow {
    std::string axis;
    double value = 0.0;
    std::string scheme;
    std::uint64_t seed = 0;
    std::string status;  // ok | skipped_invalid
    double mean_latency_s = 0.0;
    double mean_energy_j = 0.0;
    double mean_total_cost = 0.0;
};

inline std::string sweep_csv_header() {
    return "axis,value,scheme,seed,status,mean_latency_s,mean_energy_j,mean_total_cost";
}

inline std::string to_csv(const SweepRow& row) {
    std::ostringstream out;
    out << std::setprecision(12);
    out << row.axis << ',' << row.value << ',' << row.scheme << ',' << row.seed << ','
        << row.status << ',' << row.mean_latency_s << ',' << row.mean_energy_j << ','
        << row.mean_total_cost;
    return out.str();
}

// Cost pipeline per axis value per scheme per seed; total cost is latency
// plus energy. Invalid axis values produce a warning row and are skipped.
inline std::vector<SweepRow> sweep(const Scenario& base, const std::string& axis,
                                   const std::vector<double>& values,
                                   const std::vector<std::string>& schemes, int seeds,
                                   std::ostream* csv = nullptr) {
    if (values.empty()) throw std::invalid_argument("sweep needs at least one value");
    if (axis != "dn" && axis != "n" && axis != "b")
        throw std::invalid_argument("sweep axis must be one of dn|n|b");
    std::vector<SweepRow> rows;
    if (csv) *csv << sweep_csv_header() << '\n';
    const auto emit = [&](SweepRow row) {
        if (csv) *csv << to_csv(row) << '\n';
        rows.push_back(std::move(row));
    };

    for (double value : values) {
        const bool valid = (axis == "dn" && value > 0) || (axis == "b" && value > 0) ||
                           (axis == "n" && value >= 1 && value <= base.clients &&
                            value == std::floor(value));
        for (const auto& scheme : schemes) {
            if (!valid) {
                emit({axis, value, scheme, base.seed, "skipped_invalid", 0, 0, 0});
                continue;
            }
            for (int k = 0; k < seeds; ++k) {
                Scenario s = base;
                s.scheme = scheme;
                s.seed = base.seed + static_cast<std::uint64_t>(k);
                if (axis == "dn") s.model_bits = value;
                if (axis == "n") s.selected = static_cast<int>(value);
                if (axis == "b") s.bandwidth_hz = value;
                const auto sim = run_simulation(s);
                double lat = 0.0, eng = 0.0;
                for (const auto& r : sim.rows) {
                    lat += r.total_latency_s;
                    eng += r.total_energy_j;
                }
                const double n_rows = std::max<std::size_t>(sim.rows.size(), 1);
                SweepRow row{axis, value, scheme, s.seed, "ok",
                             lat / n_rows, eng / n_rows, (lat + eng) / n_rows};
                emit(std::move(row));
            }
        }
    }
    return rows;
}

}  // namespace dtfl
