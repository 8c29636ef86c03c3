#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "dtfl/channel.hpp"

using namespace dtfl;
using Catch::Approx;

namespace {

ChannelState three_clients() {
    ChannelState s;
    s.gains = {{1, 4e-10}, {2, 1e-10}, {3, 9e-10}};
    s.noise_power_w = noise_power_from_density(-174.0, 1e6);
    s.bandwidth_hz = 1e6;
    return s;
}

// independent SINR arithmetic used to cross-check rate_bps
double sinr_rate(double bandwidth, double p, double h, double interference, double noise) {
    return bandwidth * std::log2(1.0 + p * h / (interference + noise));
}

}  // namespace

TEST_CASE("noise power from Table-style spectral density") {
    // -174 dBm/Hz over 1 MHz
    REQUIRE(noise_power_from_density(-174.0, 1e6) == Approx(3.9810717055349695e-15).epsilon(1e-12));
}

TEST_CASE("decoding order sorts by gain, descending") {
    auto s = three_clients();
    REQUIRE(decoding_order(s) == std::vector<int>{3, 1, 2});

    SECTION("equal gains break ties by ascending id") {
        for (auto& g : s.gains) g.gain = 5e-10;
        REQUIRE(decoding_order(s) == std::vector<int>{1, 2, 3});
    }
    SECTION("single client") {
        s.gains = {{7, 2e-10}};
        REQUIRE(decoding_order(s) == std::vector<int>{7});
    }
}

TEST_CASE("achievable rate under SIC") {
    ChannelState s;
    s.bandwidth_hz = 1e6;
    s.noise_power_w = noise_power_from_density(-174.0, 1e6);

    SECTION("zero power gives zero rate for the last-decoded client") {
        s.gains = {{1, 1e-10}};
        TransmitPlan plan{{0.0}, {1e6}, {1}};
        REQUIRE(rate_bps(s, plan, 1) == 0.0);
    }
    SECTION("single client matches the hand evaluation") {
        s.gains = {{1, 1e-10}};
        TransmitPlan plan{{0.1}, {1e6}, {1}};
        REQUIRE(rate_bps(s, plan, 1) == Approx(1.1295129755562190e7).epsilon(1e-9));
    }
    SECTION("interference from the later-decoded client") {
        s.gains = {{1, 1e-10}, {2, 1e-12}};
        // weak interferer at 0.01 W
        TransmitPlan plan{{0.1, 0.01}, {1e6, 1e6}, {1, 2}};
        REQUIRE(rate_bps(s, plan, 1) == Approx(9.48432496489022e6).epsilon(1e-9));
        REQUIRE(rate_bps(s, plan, 1) ==
                Approx(sinr_rate(1e6, 0.1, 1e-10, 0.01 * 1e-12, s.noise_power_w)).epsilon(1e-12));
        // equal-power interferer
        plan.powers_w = {0.1, 0.1};
        REQUIRE(rate_bps(s, plan, 1) == Approx(6.602459101455859e6).epsilon(1e-9));
        // last decoded sees no interference
        REQUIRE(rate_bps(s, plan, 2) ==
                Approx(sinr_rate(1e6, 0.1, 1e-12, 0.0, s.noise_power_w)).epsilon(1e-12));
    }
    SECTION("client missing from decode order is rejected") {
        s.gains = {{1, 1e-10}};
        TransmitPlan plan{{0.1}, {1e6}, {}};
        REQUIRE_THROWS_AS(rate_bps(s, plan, 1), std::invalid_argument);
    }
}

TEST_CASE("rate monotonicity properties") {
    Rng rng(42);
    for (int trial = 0; trial < 200; ++trial) {
        ChannelState s;
        s.bandwidth_hz = 1e6;
        s.noise_power_w = noise_power_from_density(-174.0, 1e6);
        const int n = 2 + static_cast<int>(rng.below(3));
        TransmitPlan plan;
        for (int i = 0; i < n; ++i) {
            s.gains.push_back({i, rng.uniform(1e-13, 1e-9)});
            plan.powers_w.push_back(rng.uniform(0.01, 0.1));
            plan.payload_bits.push_back(1e6);
        }
        plan.decode_order = decoding_order(s);
        const int victim = static_cast<int>(rng.below(n));
        const double with_interference = rate_bps(s, plan, victim);

        // removing all other powers never decreases the rate
        TransmitPlan alone = plan;
        for (int i = 0; i < n; ++i)
            if (i != victim) alone.powers_w[i] = 0.0;
        REQUIRE(rate_bps(s, alone, victim) >= with_interference);

        // strictly increasing in own power, all else fixed
        TransmitPlan boosted = plan;
        boosted.powers_w[victim] *= 1.5;
        REQUIRE(rate_bps(s, boosted, victim) > with_interference);
    }
}

TEST_CASE("sum-rate consistency for two clients") {
    Rng rng(7);
    for (int trial = 0; trial < 200; ++trial) {
        ChannelState s;
        s.bandwidth_hz = rng.uniform(5e5, 4e6);
        s.noise_power_w = noise_power_from_density(-174.0, s.bandwidth_hz);
        s.gains = {{0, rng.uniform(1e-13, 1e-9)}, {1, rng.uniform(1e-13, 1e-9)}};
        TransmitPlan plan;
        plan.powers_w = {rng.uniform(0.01, 0.1), rng.uniform(0.01, 0.1)};
        plan.payload_bits = {1e6, 1e6};
        plan.decode_order = decoding_order(s);
        const double sum = rate_bps(s, plan, 0) + rate_bps(s, plan, 1);
        const double pooled =
            s.bandwidth_hz *
            std::log2(1.0 + (plan.powers_w[0] * s.gains[0].gain +
                             plan.powers_w[1] * s.gains[1].gain) /
                                s.noise_power_w);
        REQUIRE(sum == Approx(pooled).epsilon(1e-9));
    }
}

TEST_CASE("transmit cost") {
    ChannelState s;
    s.bandwidth_hz = 1e6;
    s.noise_power_w = noise_power_from_density(-174.0, 1e6);
    s.gains = {{1, 1e-10}};

    SECTION("latency is payload over rate, energy is power times latency") {
        TransmitPlan plan{{0.1}, {1e6}, {1}};
        const double r = rate_bps(s, plan, 1);
        const auto cost = transmit_cost(s, plan, 1);
        REQUIRE(cost.latency_s == Approx(1e6 / r));
        REQUIRE(cost.energy_j == Approx(0.1 * 1e6 / r));
    }
    SECTION("worked example at round numbers") {
        // choose gain so the rate is exactly 1e7 bit/s at 0.1 W
        ChannelState t = s;
        t.gains[0].gain = (std::exp2(10.0) - 1.0) * t.noise_power_w / 0.1;
        TransmitPlan plan{{0.1}, {1e6}, {1}};
        REQUIRE(rate_bps(t, plan, 1) == Approx(1e7).epsilon(1e-12));
        const auto cost = transmit_cost(t, plan, 1);
        REQUIRE(cost.latency_s == Approx(0.1).epsilon(1e-12));
        REQUIRE(cost.energy_j == Approx(0.01).epsilon(1e-12));
    }
    SECTION("zero payload costs nothing") {
        TransmitPlan plan{{0.1}, {0.0}, {1}};
        const auto cost = transmit_cost(s, plan, 1);
        REQUIRE(cost.latency_s == 0.0);
        REQUIRE(cost.energy_j == 0.0);
    }
    SECTION("zero rate with payload is infeasible") {
        TransmitPlan plan{{0.0}, {1e6}, {1}};
        REQUIRE_THROWS_AS(transmit_cost(s, plan, 1), InfeasibleError);
    }
}

TEST_CASE("sampled gains follow the path-loss law deterministically") {
    const std::vector<std::pair<int, double>> positions = {{0, 1.0}, {1, 10.0}, {2, 381.5}};
    Rng a(123), b(123);
    const auto s1 = sample_gains(positions, 1e6, 3.981e-15, a);
    const auto s2 = sample_gains(positions, 1e6, 3.981e-15, b);
    for (std::size_t i = 0; i < positions.size(); ++i)
        REQUIRE(s1.gains[i].gain == s2.gains[i].gain);

    // divide out the fading draw: what remains is dist^-3.76
    Rng c(123);
    for (std::size_t i = 0; i < positions.size(); ++i) {
        const double fading = c.exponential();
        REQUIRE(s1.gains[i].gain / fading ==
                Approx(std::pow(positions[i].second, -3.76)).epsilon(1e-12));
    }
    // at 1 m the law gives exactly the fading draw; at 10 m, 10^-3.76
    Rng d(123);
    REQUIRE(s1.gains[0].gain == Approx(d.exponential()).epsilon(1e-15));
    REQUIRE(std::pow(10.0, -3.76) == Approx(1.7378008287493763e-4).epsilon(1e-12));

    Rng e(5);
    REQUIRE_THROWS_AS(sample_gains({{0, 0.0}}, 1e6, 3.981e-15, e), std::invalid_argument);
}
