#pragma once

#include <cstdint>
#include <random>

namespace otdet {

/// Roles of independent random sub-streams. The numeric values are part of
/// the reproducibility contract; do not renumber.
enum class StreamRole : std::uint64_t {
    simulation = 1,
    training_nominal = 2,
    training_attacked = 3,
    drift_fit = 4,
    trial = 5,
    monte_carlo = 6,
};

inline constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

/// Seed of the sub-stream keyed by (index, role) under a base seed.
inline constexpr std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index,
                                           StreamRole role) noexcept {
    return splitmix64(splitmix64(splitmix64(base) ^ index) ^ static_cast<std::uint64_t>(role));
}

/// Seeded generator: std::mt19937_64 with std::normal_distribution and
/// std::exponential_distribution. Bit-identical for a fixed seed under
/// one standard library implementation.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    Rng(std::uint64_t base, std::uint64_t index, StreamRole role)
        : engine_(derive_seed(base, index, role)) {}

    double normal() { return normal_(engine_); }
    double exponential(double rate) {
        return std::exponential_distribution<double>(rate)(engine_);
    }
    double uniform(double lo = 0.0, double hi = 1.0) {
        return std::uniform_real_distribution<double>(lo, hi)(engine_);
    }
    std::uint64_t next_u64() { return engine_(); }
    std::mt19937_64& engine() { return engine_; }

private:
    std::mt19937_64 engine_;
    std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace otdet
