#pragma once

// Deterministic random number streams.
//
// Every (replication, particle) pair owns an independent substream derived
// from the master seed by splitmix64 mixing, so simulations are bitwise
// reproducible regardless of worker count or scheduling, and re-running a
// solver iteration with the same master seed replays identical paths
// (common random numbers).  The generator is xoshiro256++; normals are
// produced by inverting the normal CDF on one uniform draw each, which
// keeps the draws-per-step count fixed and platform independent.

#include <cstdint>
#include "mfc/normal.hpp"

namespace mfc {

/** splitmix64 step: mixes a 64-bit state into a well-distributed output. */
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/** Master-seed configuration for an experiment. */
struct RngConfig {
    std::uint64_t master_seed = 0;
};

/** xoshiro256++ stream with substream derivation. */
class Rng {
public:
    Rng() : Rng(0, 0, 0) {}

    /** Substream keyed by (master_seed, replication, particle). */
    Rng(std::uint64_t master_seed, std::uint64_t replication, std::uint64_t particle) {
        std::uint64_t key = master_seed;
        std::uint64_t h = splitmix64(key);
        key = h ^ (0xA0761D6478BD642FULL + replication);
        h = splitmix64(key);
        key = h ^ (0xE7037ED1A0B428DBULL + particle);
        for (auto& word : s_) word = splitmix64(key);
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    /** Uniform draw strictly inside (0, 1). */
    double uniform() {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    }

    /** Standard normal via inverse-CDF; consumes exactly one uniform. */
    double normal() {
        return norm_quantile(uniform());
    }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) {
        return (x << k) | (x >> (64 - k));
    }
    std::uint64_t s_[4];
};

} // namespace mfc
