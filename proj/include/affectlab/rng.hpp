#pragma once

#include <cstdint>
#include <random>

namespace affectlab {

/// Seeded generator. Distributions are computed here rather than through
/// <random>'s distribution classes, whose output is implementation-defined.
class Rng {
   public:
    explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    /// Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n);
    /// Standard normal via Box-Muller (no cached second value, so the stream
    /// position depends only on the number of calls).
    double normal();
    double normal(double mean, double stddev) { return mean + stddev * normal(); }

    /// Deterministic child stream, e.g. one per episode index.
    static std::uint64_t derive(std::uint64_t seed, std::uint64_t stream);

   private:
    std::mt19937_64 engine_;
};

}  // namespace affectlab
