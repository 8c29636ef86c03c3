#include <catch2/catch_amalgamated.hpp>

#include <sstream>

#include "dtfl/simulation.hpp"

using namespace dtfl;
using Catch::Approx;

namespace {

// small and fast: 6 clients, 2 selected, short rounds
Scenario tiny_scenario() {
    Scenario s;
    s.clients = 6;
    s.selected = 2;
    s.rounds = 3;
    s.data_size = 60;
    s.validation_samples = 120;
    s.local_steps = 2;
    s.dt_steps = 2;
    s.seed = 7;
    return s;
}

}  // namespace

TEST_CASE("config parsing") {
    SECTION("reference defaults") {
        const Scenario s;
        REQUIRE(s.clients == 20);
        REQUIRE(s.selected == 5);
        REQUIRE(s.bandwidth_hz == 1e6);
        REQUIRE(s.noise_density_dbm == -174.0);
        REQUIRE(s.path_loss_exponent == 3.76);
        REQUIRE(s.p_min_w == 0.01);
        REQUIRE(s.p_max_w == 0.1);
        REQUIRE(s.cycles_per_sample == 1e7);
        REQUIRE(s.f_min_hz == 1e9);
        REQUIRE(s.f_max_hz == 1e10);
        REQUIRE(s.server_frequency_hz == 1e11);
        REQUIRE(s.round_deadline_s == 10.0);
        REQUIRE(s.model_bits == 1e6);
        REQUIRE(s.learning_rate == 0.01);
        REQUIRE(s.radius_m == 500.0);
        REQUIRE(s.weight_accuracy == Approx(0.3));
        REQUIRE(s.weight_staleness == Approx(0.5));
        REQUIRE(s.weight_interactions == Approx(0.2));
        REQUIRE(s.noise_power_w() == Approx(3.9810717055349695e-15).epsilon(1e-12));
    }
    SECTION("key=value text with comments") {
        std::istringstream in(
            "# experiment\n"
            "clients = 10\n"
            "selected=3\n"
            "bandwidth_hz = 2e6   # wider band\n"
            "scheme = oma\n"
            "roni_enabled = false\n"
            "\n");
        const auto s = parse_config(in);
        REQUIRE(s.clients == 10);
        REQUIRE(s.selected == 3);
        REQUIRE(s.bandwidth_hz == 2e6);
        REQUIRE(s.scheme == "oma");
        REQUIRE_FALSE(s.roni_enabled);
        s.validate();
    }
    SECTION("unknown keys and malformed lines fail loudly") {
        std::istringstream bad_key("not_a_key = 3\n");
        REQUIRE_THROWS_AS(parse_config(bad_key), std::invalid_argument);
        std::istringstream bad_line("clients 3\n");
        REQUIRE_THROWS_AS(parse_config(bad_line), std::invalid_argument);
    }
    SECTION("validation catches inconsistent scenarios") {
        Scenario s;
        s.selected = 30;
        REQUIRE_THROWS_AS(s.validate(), std::invalid_argument);
        s = Scenario{};
        s.scheme = "nope";
        REQUIRE_THROWS_AS(s.validate(), std::invalid_argument);
    }
}

TEST_CASE("profile and position synthesis") {
    Scenario s = tiny_scenario();
    s.poisoner_ratio = 0.5;
    const auto profiles = build_profiles(s);
    REQUIRE(profiles.size() == 6);
    int poisoned = 0;
    for (const auto& p : profiles) poisoned += p.honest ? 0 : 1;
    REQUIRE(poisoned == 3);

    const auto again = build_profiles(s);
    for (std::size_t i = 0; i < profiles.size(); ++i)
        REQUIRE(profiles[i].honest == again[i].honest);

    const auto positions = client_positions(s);
    for (const auto& [id, dist] : positions) {
        REQUIRE(dist >= 1.0);
        REQUIRE(dist <= s.radius_m);
    }
    REQUIRE(client_positions(s) == positions);
}

TEST_CASE("reselection drops the infeasible client for the round") {
    std::vector<int> dropped;
    int calls = 0;
    const auto allocator = [&](const std::vector<int>& sel) -> Equilibrium {
        ++calls;
        for (int id : sel)
            if (id == 3) throw InfeasibleError("deadline", 3);
        Equilibrium eq;
        for (int id : sel) eq.decision.clients.push_back({id});
        return eq;
    };
    const auto [chosen, eq] =
        allocate_with_reselect({1, 3, 5}, {7, 9}, allocator, &dropped);
    REQUIRE(chosen == std::vector<int>{1, 5, 7});
    REQUIRE(dropped == std::vector<int>{3});
    REQUIRE(calls == 2);

    SECTION("pool exhaustion shrinks the selection") {
        dropped.clear();
        const auto [fewer, eq2] = allocate_with_reselect({1, 3}, {}, allocator, &dropped);
        REQUIRE(fewer == std::vector<int>{1});
    }
    SECTION("global infeasibility propagates") {
        const auto broken = [](const std::vector<int>&) -> Equilibrium {
            throw InfeasibleError("DT capacity");
        };
        REQUIRE_THROWS_AS(allocate_with_reselect({1, 2}, {3}, broken), InfeasibleError);
    }
}

TEST_CASE("baseline allocators") {
    Scenario s = tiny_scenario();
    const auto profiles = build_profiles(s);
    const auto positions = client_positions(s);
    Rng fade(derive_seed(s.seed, 0xfadeULL, 0));
    const auto channel_all =
        sample_gains(positions, s.bandwidth_hz, s.noise_power_w(), fade, s.path_loss_exponent);
    const ServerProfile server = s.server();

    std::vector<ClientProfile> sel_profiles = {profiles[0], profiles[1]};
    ChannelState chan;
    chan.bandwidth_hz = channel_all.bandwidth_hz;
    chan.noise_power_w = channel_all.noise_power_w;
    chan.gains = {{0, channel_all.gain_of(0)}, {1, channel_all.gain_of(1)}};
    const std::vector<double> payloads = {s.model_bits, s.model_bits};
    Rng alloc_rng(99);

    SECTION("no_dt forces everything local") {
        const auto eq =
            baseline_allocate(Scheme::no_dt, sel_profiles, server, chan, payloads, alloc_rng);
        for (const auto& c : eq.decision.clients) {
            REQUIRE(c.mapped_fraction == 0.0);
            REQUIRE(c.server_share == 0.0);
        }
        REQUIRE(eq.decision.t_dt_s == 0.0);
    }
    SECTION("ideal pays only for transmission") {
        const auto eq =
            baseline_allocate(Scheme::ideal, sel_profiles, server, chan, payloads, alloc_rng);
        REQUIRE(eq.decision.t_cmp_s == 0.0);
        for (const auto& c : eq.report.clients) {
            REQUIRE(c.e_cmp_j == 0.0);
            REQUIRE(c.t_cmp_s == 0.0);
        }
        REQUIRE(eq.report.total_energy_j ==
                Approx(eq.report.clients[0].e_com_j + eq.report.clients[1].e_com_j));
    }
    SECTION("oma with one client equals the single-client NOMA solve") {
        std::vector<ClientProfile> solo = {profiles[0]};
        ChannelState chan1;
        chan1.bandwidth_hz = chan.bandwidth_hz;
        chan1.noise_power_w = chan.noise_power_w;
        chan1.gains = {{0, chan.gains[0].gain}};
        const auto oma = baseline_allocate(Scheme::oma, solo, server, chan1, {s.model_bits},
                                           alloc_rng);
        const auto noma = stackelberg_solve(solo, server, chan1, {s.model_bits});
        REQUIRE(oma.report.total_energy_j == Approx(noma.report.total_energy_j).epsilon(1e-9));
        REQUIRE(oma.report.total_latency_s == Approx(noma.report.total_latency_s).epsilon(1e-9));
        REQUIRE(oma.decision.clients[0].rate_bps ==
                Approx(noma.decision.clients[0].rate_bps).epsilon(1e-9));
    }
    SECTION("random draws stay inside every box") {
        Rng draw_rng(123);
        for (int t = 0; t < 1000; ++t) {
            const auto eq = baseline_allocate(Scheme::random_alloc, sel_profiles, server, chan,
                                              payloads, draw_rng);
            double share_total = 0.0;
            for (std::size_t i = 0; i < eq.decision.clients.size(); ++i) {
                const auto& c = eq.decision.clients[i];
                REQUIRE(c.power_w >= sel_profiles[i].p_min_w);
                REQUIRE(c.power_w <= sel_profiles[i].p_max_w);
                REQUIRE(c.frequency_hz >= sel_profiles[i].f_min_hz);
                REQUIRE(c.frequency_hz <= sel_profiles[i].f_max_hz);
                REQUIRE(c.mapped_fraction >= 0.0);
                REQUIRE(c.mapped_fraction <= sel_profiles[i].max_mapped_fraction);
                share_total += c.server_share;
            }
            REQUIRE(share_total <= 1.0 + 1e-12);
        }
    }
}

TEST_CASE("simulation rounds") {
    SECTION("zero rounds emit only the header") {
        Scenario s = tiny_scenario();
        s.rounds = 0;
        std::ostringstream csv;
        const auto result = run_simulation(s, &csv);
        REQUIRE(result.rows.empty());
        REQUIRE(csv.str() == metrics_csv_header() + "\n");
    }
    SECTION("identical scenario and seed give byte-identical CSV") {
        const Scenario s = tiny_scenario();
        std::ostringstream a, b;
        run_simulation(s, &a);
        run_simulation(s, &b);
        REQUIRE(a.str() == b.str());
        REQUIRE(a.str().find("proposed") != std::string::npos);
    }
    SECTION("rows carry sane fields for every scheme") {
        for (const char* scheme : {"proposed", "no_dt", "oma", "ideal", "random"}) {
            Scenario s = tiny_scenario();
            s.scheme = scheme;
            const auto result = run_simulation(s);
            REQUIRE(result.rows.size() == 3);
            for (const auto& row : result.rows) {
                REQUIRE(row.scheme == scheme);
                REQUIRE(row.accuracy >= 0.0);
                REQUIRE(row.accuracy <= 1.0);
                REQUIRE(std::isfinite(row.total_latency_s));
                REQUIRE(std::isfinite(row.total_energy_j));
                REQUIRE(row.total_energy_j > 0.0);
                REQUIRE(row.ni_count <= row.selected.size());
                REQUIRE(row.selected.size() <= 2);
                REQUIRE(std::is_sorted(row.selected.begin(), row.selected.end()));
            }
        }
    }
    SECTION("poisoned runs record negative interactions") {
        Scenario s = tiny_scenario();
        s.clients = 8;
        s.selected = 4;
        s.rounds = 6;
        s.poisoner_ratio = 0.5;
        s.local_steps = 6;
        s.learning_rate = 0.05;
        const auto result = run_simulation(s);
        std::size_t total_ni = 0;
        for (const auto& row : result.rows) total_ni += row.ni_count;
        REQUIRE(total_ni > 0);
    }
    SECTION("staleness bookkeeping holds over a longer run") {
        Scenario s = tiny_scenario();
        s.rounds = 12;
        REQUIRE_NOTHROW(run_simulation(s));
    }
}

TEST_CASE("metrics csv") {
    MetricsRow row;
    row.round = 4;
    row.scheme = "proposed";
    row.accuracy = 0.875;
    row.total_latency_s = 5.0625;
    row.total_energy_j = 2.5;
    row.t_cmp_s = 5.0;
    row.t_com_s = 0.0625;
    row.t_dt_s = 5.0625;
    row.ni_count = 1;
    row.selected = {2, 5, 11};
    REQUIRE(to_csv(row) == "4,proposed,0.875,5.0625,2.5,5,0.0625,5.0625,1,2;5;11");
    REQUIRE(metrics_csv_header().rfind("round,scheme,accuracy", 0) == 0);
}

TEST_CASE("sweeps") {
    Scenario s = tiny_scenario();
    s.rounds = 2;

    SECTION("invalid axis values produce warning rows") {
        std::ostringstream csv;
        const auto rows = sweep(s, "n", {-1.0, 2.0}, {"proposed"}, 1, &csv);
        REQUIRE(rows.size() == 2);
        REQUIRE(rows[0].status == "skipped_invalid");
        REQUIRE(rows[1].status == "ok");
        REQUIRE(csv.str().find("skipped_invalid") != std::string::npos);
    }
    SECTION("unknown axes rejected") {
        REQUIRE_THROWS_AS(sweep(s, "xyz", {1.0}, {"proposed"}, 1), std::invalid_argument);
        REQUIRE_THROWS_AS(sweep(s, "dn", {}, {"proposed"}, 1), std::invalid_argument);
    }
    SECTION("larger updates cost more under the proposed scheme") {
        const auto rows = sweep(s, "dn", {5e5, 2e6}, {"proposed"}, 1);
        REQUIRE(rows.size() == 2);
        REQUIRE(rows[0].mean_latency_s < rows[1].mean_latency_s);
        REQUIRE(rows[0].mean_energy_j < rows[1].mean_energy_j);
    }
}
