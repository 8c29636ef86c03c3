#pragma once

#include <cmath>
#include <cstdint>

namespace dtfl {

// Deterministic 64-bit generator (xoshiro256**) with hand-rolled
// distribution transforms, so streams are bit-identical across standard
// libraries and platforms. Callers own the generator; library code takes
// an Rng& and never hides one in a global.
class Rng {
public:
    explicit Rng(std::uint64_t seed) {
        // splitmix64 expansion of the seed into the four-word state
        std::uint64_t x = seed;
        for (auto& word : state_) {
            x += 0x9e3779b97f4a7c15ULL;
            std::uint64_t z = x;
            z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
            z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
            word = z ^ (z >> 31);
        }
    }

    std::uint64_t next() {
        const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    // uniform in [0, 1), 53-bit resolution
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // unit-mean exponential via inverse CDF
    double exponential() { return -std::log1p(-uniform()); }

    // standard normal, Box-Muller (spare cached)
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        double u2 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 2.0 * 3.14159265358979323846 * u2;
        spare_ = r * std::sin(theta);
        has_spare_ = true;
        return r * std::cos(theta);
    }

    // uniform integer in [0, n), unbiased
    std::uint64_t below(std::uint64_t n) {
        const std::uint64_t threshold = (0ULL - n) % n;
        for (;;) {
            const std::uint64_t x = next();
            if (x >= threshold) return x % n;
        }
    }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) {
        return (x << k) | (x >> (64 - k));
    }

    std::uint64_t state_[4];
    double spare_ = 0.0;
    bool has_spare_ = false;
};

// Stable stream derivation: mixes a base seed with stream tags so that e.g.
// per-round generators do not overlap.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t tag_a,
                                 std::uint64_t tag_b = 0) {
    std::uint64_t z = base ^ (tag_a * 0x9e3779b97f4a7c15ULL) ^
                      (tag_b * 0xc2b2ae3d27d4eb4fULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

}  // namespace dtfl
