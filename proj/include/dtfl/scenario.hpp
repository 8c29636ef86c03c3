#pragma once

#include <cstdint>
#include <istream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "dtfl/channel.hpp"
#include "dtfl/cost_model.hpp"
#include "dtfl/reputation.hpp"

namespace dtfl {

// Everything one experiment needs, with defaults at the reference operating
// point (1 MHz band, -174 dBm/Hz noise, 0.01-0.1 W transmitters, 1-10 GHz
// clients against a 100 GHz server, 10 s rounds, 1 Mbit model updates).
struct Scenario {
    // population and selection
    int clients = 20;  // M
    int selected = 5;  // N
    double radius_m = 500.0;

    // physical constants
    double bandwidth_hz = 1e6;
    double noise_density_dbm = -174.0;
    double path_loss_exponent = 3.76;
    double p_min_w = 0.01;
    double p_max_w = 0.1;
    double cycles_per_sample = 1e7;
    double f_min_hz = 1e9;
    double f_max_hz = 1e10;
    double server_frequency_hz = 1e11;
    double round_deadline_s = 10.0;
    double model_bits = 1e6;  // d_n
    double capacitance = kEffectiveCapacitance;

    // client data
    double data_size = 1000.0;  // samples per client
    double max_mapped_fraction = 0.5;
    double ac_saturation = 1.0;
    double ac_scale = 1.0;
    double ac_rate = 1e-4;

    // reputation and defense
    double weight_accuracy = 0.3;
    double weight_staleness = 0.5;
    double weight_interactions = 0.2;
    double interaction_prior = 0.5;
    bool roni_enabled = true;
    double roni_threshold = 0.02;

    // attack and DT mapping
    double poisoner_ratio = 0.0;
    double dt_deviation = 0.0;
    double size_deviation = 0.0;  // epsilon, samples

    // learning task
    std::string dataset = "synthetic";  // synthetic | mnist
    std::string distribution = "iid";   // iid | noniid
    int labels_per_client = 1;
    std::string mnist_images;
    std::string mnist_labels;
    std::size_t validation_samples = 1000;
    int local_steps = 5;
    int dt_steps = 5;
    double learning_rate = 0.01;
    double class_separation = 0.55;

    // run control
    std::string scheme = "proposed";  // proposed | no_dt | oma | ideal | random
    long rounds = 50;
    std::uint64_t seed = 0;

    void validate() const {
        if (clients < 1) throw std::invalid_argument("clients must be >= 1");
        if (selected < 1 || selected > clients)
            throw std::invalid_argument("selected must lie in [1, clients]");
        if (radius_m <= 0) throw std::invalid_argument("radius must be > 0");
        if (bandwidth_hz <= 0 || server_frequency_hz <= 0 || round_deadline_s <= 0 ||
            cycles_per_sample <= 0 || model_bits <= 0)
            throw std::invalid_argument("physical constants must be > 0");
        if (p_min_w <= 0 || p_min_w > p_max_w) throw std::invalid_argument("bad power bounds");
        if (f_min_hz <= 0 || f_min_hz > f_max_hz)
            throw std::invalid_argument("bad frequency bounds");
        if (poisoner_ratio < 0 || poisoner_ratio > 1)
            throw std::invalid_argument("poisoner_ratio must lie in [0,1]");
        if (max_mapped_fraction < 0 || max_mapped_fraction > 1)
            throw std::invalid_argument("max_mapped_fraction must lie in [0,1]");
        if (size_deviation < 0) throw std::invalid_argument("size_deviation must be >= 0");
        if (data_size < 1) throw std::invalid_argument("data_size must be >= 1");
        if (rounds < 0) throw std::invalid_argument("rounds must be >= 0");
        if (dataset != "synthetic" && dataset != "mnist")
            throw std::invalid_argument("dataset must be synthetic or mnist");
        if (distribution != "iid" && distribution != "noniid")
            throw std::invalid_argument("distribution must be iid or noniid");
        if (scheme != "proposed" && scheme != "no_dt" && scheme != "oma" && scheme != "ideal" &&
            scheme != "random")
            throw std::invalid_argument("unknown scheme " + scheme);
    }

    double noise_power_w() const {
        return noise_power_from_density(noise_density_dbm, bandwidth_hz);
    }

    ServerProfile server() const {
        ServerProfile s;
        s.frequency_hz = server_frequency_hz;
        s.size_deviation = size_deviation;
        s.round_deadline_s = round_deadline_s;
        s.capacitance = capacitance;
        return s;
    }

    ReputationWeights reputation_weights() const {
        return {weight_accuracy, weight_staleness, weight_interactions};
    }
};

namespace scenario_detail {

inline bool parse_bool(const std::string& v) {
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw std::invalid_argument("not a boolean: " + v);
}

}  // namespace scenario_detail

// Accepts one "key = value" assignment; unknown keys are an error so config
// typos fail loudly.
inline void apply_config_key(Scenario& s, const std::string& key, const std::string& value) {
    const auto num = [&] { return std::stod(value); };
    const auto integer = [&] { return std::stol(value); };
    if (key == "clients") s.clients = static_cast<int>(integer());
    else if (key == "selected") s.selected = static_cast<int>(integer());
    else if (key == "radius_m") s.radius_m = num();
    else if (key == "bandwidth_hz") s.bandwidth_hz = num();
    else if (key == "noise_density_dbm") s.noise_density_dbm = num();
    else if (key == "path_loss_exponent") s.path_loss_exponent = num();
    else if (key == "p_min_w") s.p_min_w = num();
    else if (key == "p_max_w") s.p_max_w = num();
    else if (key == "cycles_per_sample") s.cycles_per_sample = num();
    else if (key == "f_min_hz") s.f_min_hz = num();
    else if (key == "f_max_hz") s.f_max_hz = num();
    else if (key == "server_frequency_hz") s.server_frequency_hz = num();
    else if (key == "round_deadline_s") s.round_deadline_s = num();
    else if (key == "model_bits") s.model_bits = num();
    else if (key == "capacitance") s.capacitance = num();
    else if (key == "data_size") s.data_size = num();
    else if (key == "max_mapped_fraction") s.max_mapped_fraction = num();
    else if (key == "ac_saturation") s.ac_saturation = num();
    else if (key == "ac_scale") s.ac_scale = num();
    else if (key == "ac_rate") s.ac_rate = num();
    else if (key == "weight_accuracy") s.weight_accuracy = num();
    else if (key == "weight_staleness") s.weight_staleness = num();
    else if (key == "weight_interactions") s.weight_interactions = num();
    else if (key == "interaction_prior") s.interaction_prior = num();
    else if (key == "roni_enabled") s.roni_enabled = scenario_detail::parse_bool(value);
    else if (key == "roni_threshold") s.roni_threshold = num();
    else if (key == "poisoner_ratio") s.poisoner_ratio = num();
    else if (key == "dt_deviation") s.dt_deviation = num();
    else if (key == "size_deviation") s.size_deviation = num();
    else if (key == "dataset") s.dataset = value;
    else if (key == "distribution") s.distribution = value;
    else if (key == "labels_per_client") s.labels_per_client = static_cast<int>(integer());
    else if (key == "mnist_images") s.mnist_images = value;
    else if (key == "mnist_labels") s.mnist_labels = value;
    else if (key == "validation_samples") s.validation_samples = static_cast<std::size_t>(integer());
    else if (key == "local_steps") s.local_steps = static_cast<int>(integer());
    else if (key == "dt_steps") s.dt_steps = static_cast<int>(integer());
    else if (key == "learning_rate") s.learning_rate = num();
    else if (key == "class_separation") s.class_separation = num();
    else if (key == "scheme") s.scheme = value;
    else if (key == "rounds") s.rounds = integer();
    else if (key == "seed") s.seed = static_cast<std::uint64_t>(std::stoull(value));
    else throw std::invalid_argument("unknown config key: " + key);
}

// Flat key=value config; '#' starts a comment, blank lines are skipped.
inline Scenario parse_config(std::istream& in, Scenario base = {}) {
    std::string line;
    long line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const auto strip = [](std::string t) {
            const auto a = t.find_first_not_of(" \t\r");
            if (a == std::string::npos) return std::string();
            const auto b = t.find_last_not_of(" \t\r");
            return t.substr(a, b - a + 1);
        };
        const std::string body = strip(line);
        if (body.empty()) continue;
        const auto eq = body.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config line " + std::to_string(line_no) +
                                        ": expected key=value");
        const std::string key = strip(body.substr(0, eq));
        const std::string value = strip(body.substr(eq + 1));
        try {
            apply_config_key(base, key, value);
        } catch (const std::exception& e) {
            throw std::invalid_argument("config line " + std::to_string(line_no) + ": " +
                                        e.what());
        }
    }
    return base;
}

// Client population derived from the scenario: uniform positions on the
// disk (at least 1 m out), equal data sizes, a seeded poisoner subset.
inline std::vector<ClientProfile> build_profiles(const Scenario& s) {
    std::vector<ClientProfile> profiles(s.clients);
    Rng rng(derive_seed(s.seed, 0xc11e57ULL));
    int poisoners = static_cast<int>(std::llround(s.poisoner_ratio * s.clients));
    std::vector<int> ids(s.clients);
    for (int i = 0; i < s.clients; ++i) ids[i] = i;
    for (std::size_t i = ids.size(); i > 1; --i) std::swap(ids[i - 1], ids[rng.below(i)]);

    for (int i = 0; i < s.clients; ++i) {
        auto& p = profiles[i];
        p.id = i;
        p.data_size = s.data_size;
        p.cycles_per_sample = s.cycles_per_sample;
        p.f_min_hz = s.f_min_hz;
        p.f_max_hz = s.f_max_hz;
        p.p_min_w = s.p_min_w;
        p.p_max_w = s.p_max_w;
        p.max_mapped_fraction = s.max_mapped_fraction;
        p.ac = {s.ac_saturation, s.ac_scale, s.ac_rate};
    }
    for (int k = 0; k < poisoners && k < s.clients; ++k) profiles[ids[k]].honest = false;
    return profiles;
}

inline std::vector<std::pair<int, double>> client_positions(const Scenario& s) {
    Rng rng(derive_seed(s.seed, 0xd157ULL));
    std::vector<std::pair<int, double>> positions(s.clients);
    for (int i = 0; i < s.clients; ++i) {
        const double r = s.radius_m * std::sqrt(rng.uniform());
        positions[i] = {i, std::max(1.0, r)};
    }
    return positions;
}

}  // namespace dtfl
