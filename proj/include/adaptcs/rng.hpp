#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace adaptcs {

/// Seeded random source with platform-independent draws.
///
/// std::mt19937_64 output is fixed by the standard, but the std::*_distribution
/// adaptors are not, so every draw used by the library goes through the helpers
/// below.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform integer in [0, bound). bound must be > 0.
    std::uint64_t uniform_index(std::uint64_t bound);

    /// Uniform real in [0, 1).
    double uniform01();

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    /// Standard normal draw (Box-Muller, one value per call).
    double normal();

    bool bernoulli(double p) { return uniform01() < p; }

private:
    std::mt19937_64 engine_;
};

std::uint64_t splitmix64(std::uint64_t x);

/// Derives the seed of a named sub-stream ("dataset", "ge", "forest",
/// "filter", ...) from a master seed.
std::uint64_t derive_seed(std::uint64_t master, std::string_view stream);

/// Derives an indexed child seed, e.g. one per tree or per individual.
std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t index);

/// 64-bit FNV-1a, used for provenance digests.
class Fnv1a {
public:
    void update(std::string_view bytes);
    void update(const void* data, std::size_t size);
    std::uint64_t value() const { return state_; }

private:
    std::uint64_t state_ = 0xcbf29ce484222325ULL;
};

}  // namespace adaptcs
