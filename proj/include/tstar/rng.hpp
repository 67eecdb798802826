#pragma once

#include <cstdint>
#include <string_view>

namespace tstar {

// Deterministic generator with identical output on every platform.
//
// std::mt19937_64's raw stream is standardized but the std distribution
// adaptors are not, so this wraps xoshiro256++ (seeded via splitmix64)
// with fixed uniform/normal conversions. Same seed => same stream,
// everywhere, forever.
class Rng {
public:
    explicit Rng(std::uint64_t seed);

    std::uint64_t next_u64();

    // Uniform in [0, 1), 53-bit resolution.
    double next_double();

    // Uniform integer in [0, n); n must be >= 1.
    std::uint64_t next_below(std::uint64_t n);

    // Standard normal via Box-Muller (pairs cached).
    double next_normal();

private:
    std::uint64_t s_[4];
    double cached_normal_ = 0.0;
    bool has_cached_normal_ = false;
};

// FNV-1a 64-bit. Used to derive per-instance seeds: seed ^ fnv1a64(id).
std::uint64_t fnv1a64(std::string_view s);

// Per-instance stream derivation used across the benchmark harness.
inline std::uint64_t derive_seed(std::uint64_t base, std::string_view instance_id) {
    return base ^ fnv1a64(instance_id);
}

} // namespace tstar
