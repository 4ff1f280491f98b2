// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <random>

namespace gaq {

/// Seeded 64-bit generator with platform-independent draws. The standard
/// distributions are implementation-defined, so uniform variates are derived
/// from raw engine output here instead.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    /// Independent child stream, keyed by a stream tag.
    Rng split(std::uint64_t tag) const;

    std::uint64_t next() { return engine_(); }
    /// Uniform in [0, 1).
    double uniform();
    /// Uniform in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    /// Uniform integer in [0, n). n must be > 0.
    std::uint64_t index(std::uint64_t n);

private:
    std::mt19937_64 engine_;
};

/// SplitMix64 finalizer; used to derive child seeds.
std::uint64_t mix_seed(std::uint64_t x);

/// Stream tags for the hierarchical split of one run seed.
enum class Stream : std::uint64_t {
    Environment = 1,
    Agent = 2,
    Replay = 3,
    Init = 4,
};

inline Rng stream(std::uint64_t seed, Stream s) {
    return Rng(mix_seed(mix_seed(seed) ^ static_cast<std::uint64_t>(s)));
}

}  // namespace gaq
