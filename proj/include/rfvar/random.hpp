#ifndef RFVAR_RANDOM_HPP
#define RFVAR_RANDOM_HPP

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <numbers>

namespace rfvar {

/// SplitMix64 pseudo-random generator (Steele, Lea & Flood's SplittableRandom
/// update function). The state is a counter advanced by a fixed odd gamma and
/// each output is a bijective finalizer of the counter, so independent streams
/// can be derived from (seed, key...) tuples without any shared state. That is
/// what makes every fitted forest reproducible regardless of how many threads
/// run the per-tree work.
class Rng {
public:
    static constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ULL;

    /// SplitMix64 output finalizer.
    static constexpr std::uint64_t mix(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    explicit Rng(std::uint64_t seed) : state_(mix(seed + kGamma)) {}

    std::uint64_t next_u64() { return mix(state_ += kGamma); }

    /// Uniform double in [0, 1) with 53 random bits.
    double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform integer in {0, ..., n-1}, unbiased via rejection. n >= 1.
    std::uint64_t next_below(std::uint64_t n) {
        const std::uint64_t threshold = (std::uint64_t{0} - n) % n;
        for (;;) {
            const std::uint64_t r = next_u64();
            if (r >= threshold) {
                return r % n;
            }
        }
    }

    /// Standard normal deviate, Box-Muller with the second draw cached.
    double next_normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double u1 = static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;  // (0, 1]
        const double u2 = static_cast<double>(next_u64() >> 11) * 0x1.0p-53;        // [0, 1)
        const double radius = std::sqrt(-2.0 * std::log(u1));
        const double angle = 2.0 * std::numbers::pi * u2;
        spare_ = radius * std::sin(angle);
        has_spare_ = true;
        return radius * std::cos(angle);
    }

private:
    std::uint64_t state_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

/// Deterministic stream derivation: hashes (seed, key_0, key_1, ...) into a
/// fresh seed. Distinct key tuples yield decorrelated streams.
inline std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> keys) {
    std::uint64_t s = Rng::mix(seed + Rng::kGamma);
    for (const std::uint64_t k : keys) {
        s = Rng::mix((s + Rng::kGamma) ^ Rng::mix(k + Rng::kGamma));
    }
    return s;
}

inline Rng derive_rng(std::uint64_t seed, std::initializer_list<std::uint64_t> keys) {
    return Rng(derive_seed(seed, keys));
}

}  // namespace rfvar

#endif  // RFVAR_RANDOM_HPP
