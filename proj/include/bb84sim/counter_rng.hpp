#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace bb84sim {

/// Stateless counter-based random numbers.
///
/// Every draw is a pure function of (seed, stream index, tag), so a pulse's
/// randomness does not depend on which thread simulates it or in what order.
/// The mixing function is the SplitMix64 finalizer applied to a combination
/// of the three words.
class CounterRng {
public:
    explicit constexpr CounterRng(std::uint64_t seed) noexcept : seed_(seed) {}

    constexpr std::uint64_t bits(std::uint64_t index, std::uint64_t tag) const noexcept {
        std::uint64_t x = mix(seed_ ^ 0x6a09e667f3bcc909ULL);
        x = mix(x ^ index);
        return mix(x ^ (tag * 0x9e3779b97f4a7c15ULL));
    }

    /// Uniform on [0, 1) with 53 bits of resolution.
    constexpr double uniform(std::uint64_t index, std::uint64_t tag) const noexcept {
        return static_cast<double>(bits(index, tag) >> 11) * 0x1.0p-53;
    }

    /// Standard normal via Box-Muller from two tagged uniforms.
    double gaussian(std::uint64_t index, std::uint64_t tag_radius,
                    std::uint64_t tag_angle) const noexcept {
        const double u1 = 1.0 - uniform(index, tag_radius);  // (0, 1]
        const double u2 = uniform(index, tag_angle);
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

    constexpr std::uint64_t seed() const noexcept { return seed_; }

private:
    static constexpr std::uint64_t mix(std::uint64_t z) noexcept {
        z += 0x9e3779b97f4a7c15ULL;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    std::uint64_t seed_;
};

}  // namespace bb84sim
