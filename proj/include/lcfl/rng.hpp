#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <utility>
#include <vector>

namespace lcfl {

/// splitmix64 finalizer; good avalanche, used for seed derivation.
std::uint64_t mix64(std::uint64_t x);

/// Derive an independent stream seed from a base seed, a tag and an index.
/// Identical arguments always yield the identical derived seed.
std::uint64_t derive_seed(std::uint64_t base, std::string_view tag, std::uint64_t index = 0);

/// Deterministic random source. Every random decision in the library flows
/// through this class so that a run is reproducible bit-for-bit from its seed.
/// The engine is std::mt19937_64 (output sequence pinned by the standard);
/// the distributions are implemented here rather than taken from <random>,
/// whose distribution algorithms are implementation-defined.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform double in [0, 1), 53-bit resolution.
    double uniform();

    /// Uniform double in [lo, hi).
    double uniform(double lo, double hi);

    /// Standard normal via Box-Muller. No cached spare, so the draw count
    /// per call is fixed.
    double normal();

    /// Uniform index in [0, n). n must be positive.
    std::size_t index(std::size_t n);

    /// Uniform integer in [lo, hi] inclusive.
    long long int_in(long long lo, long long hi);

    /// Index drawn proportionally to non-negative weights.
    std::size_t weighted_index(const std::vector<double>& weights);

    /// Fisher-Yates shuffle.
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::swap(v[i - 1], v[index(i)]);
        }
    }

private:
    std::mt19937_64 engine_;
};

}  // namespace lcfl
