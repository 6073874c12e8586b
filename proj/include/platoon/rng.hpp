#pragma once

// Fixed, portable generators. Output depends only on the documented
// algorithms below, never on the standard library's distributions.
//
//   SplitMix64 (Steele, Lea, Flood 2014): seeding and seed derivation.
//   xoshiro256** 1.0 (Blackman, Vigna 2018): per-replication stream.
//   Uniform doubles take the top 53 bits: (x >> 11) * 2^-53.

#include <array>
#include <cstdint>

namespace platoon {

class SplitMix64 {
public:
    static constexpr std::uint64_t golden_gamma = 0x9e3779b97f4a7c15ULL;

    explicit constexpr SplitMix64(std::uint64_t seed) noexcept : state_(seed) {}

    constexpr std::uint64_t next() noexcept {
        std::uint64_t z = (state_ += golden_gamma);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

private:
    std::uint64_t state_;
};

class Xoshiro256StarStar {
public:
    using result_type = std::uint64_t;

    explicit constexpr Xoshiro256StarStar(std::uint64_t seed) noexcept {
        SplitMix64 sm(seed);
        for (auto& w : s_) w = sm.next();
    }

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return ~result_type{0}; }

    constexpr result_type operator()() noexcept {
        const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    /// Uniform on [0, 1).
    constexpr double uniform() noexcept { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

private:
    static constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept { return (x << k) | (x >> (64 - k)); }

    std::array<std::uint64_t, 4> s_{};
};

/// Seed of replication r; depends only on (base_seed, r).
constexpr std::uint64_t replication_seed(std::uint64_t base_seed, std::uint64_t r) noexcept {
    SplitMix64 sm(base_seed + r * SplitMix64::golden_gamma);
    return sm.next();
}

} // namespace platoon
