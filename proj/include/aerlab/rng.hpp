#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <span>

#include "aerlab/errors.hpp"

namespace aerlab {

// splitmix64 step; used for seeding and for deriving sub-stream keys.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

// Deterministic xoshiro256** stream. Streams are derived from a root seed
// plus a label path, so parallel consumers never share state and a run can
// be resumed by re-deriving the same streams.
class RngStream {
public:
    RngStream() : RngStream(0) {}

    explicit RngStream(std::uint64_t seed) {
        std::uint64_t sm = seed;
        for (auto& w : state_) {
            w = splitmix64(sm);
        }
    }

    // Derive an independent stream from (root, path...). The same path always
    // yields the same stream.
    static RngStream derive(std::uint64_t root, std::initializer_list<std::uint64_t> path) {
        std::uint64_t key = root;
        for (std::uint64_t p : path) {
            std::uint64_t mix = key ^ (p + 0x9e3779b97f4a7c15ull);
            key = splitmix64(mix) ^ p;
        }
        return RngStream(key);
    }

    std::uint64_t next_u64() {
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

    // Uniform double in [0,1) with 53 random bits.
    double uniform01() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    // Unbiased integer in [0, n) by rejection.
    std::uint32_t uniform_below(std::uint32_t n) {
        if (n == 0) {
            throw contract_error("uniform_below: n must be positive");
        }
        const std::uint64_t bound = (~std::uint64_t{0} / n) * n;
        std::uint64_t x = next_u64();
        while (x >= bound) {
            x = next_u64();
        }
        return static_cast<std::uint32_t>(x % n);
    }

    // Box-Muller with cached spare.
    double normal(double mu, double sigma) {
        if (has_spare_) {
            has_spare_ = false;
            return mu + sigma * spare_;
        }
        const double u = 1.0 - uniform01();
        const double v = uniform01();
        const double r = std::sqrt(-2.0 * std::log(u));
        const double theta = 2.0 * 3.14159265358979323846 * v;
        spare_ = r * std::sin(theta);
        has_spare_ = true;
        return mu + sigma * r * std::cos(theta);
    }

    // Inverse-CDF draw from a probability vector. Probabilities are assumed
    // to sum to ~1; the final positive entry absorbs rounding slack.
    int categorical(std::span<const double> probs) {
        if (probs.empty()) {
            throw contract_error("categorical: empty distribution");
        }
        const double r = uniform01();
        double cdf = 0.0;
        int last_positive = 0;
        for (int i = 0; i < static_cast<int>(probs.size()); ++i) {
            if (probs[i] > 0.0) {
                last_positive = i;
            }
            cdf += probs[i];
            if (r < cdf) {
                return i;
            }
        }
        return last_positive;
    }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) {
        return (x << k) | (x >> (64 - k));
    }

    std::uint64_t state_[4]{};
    bool has_spare_ = false;
    double spare_ = 0.0;
};

} // namespace aerlab
