// SPDX-License-Identifier: Apache-2.0
//
// Counter-based random streams (Philox4x32-10) and the variate-source concept
// consumed by the steppers.

#pragma once

#include <array>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <numbers>

namespace kdmc {

/// Draw interface used by every sampling routine. Anything providing these
/// three members can drive a trajectory, which lets tests pin the draws.
template <class R>
concept VariateSource = requires(R& r) {
    { r.uniform() } -> std::convertible_to<double>;
    { r.normal() } -> std::convertible_to<double>;
    { r.exponential() } -> std::convertible_to<double>;
};

namespace detail {

inline constexpr std::uint32_t philox_m0 = 0xD2511F53u;
inline constexpr std::uint32_t philox_m1 = 0xCD9E8D57u;
inline constexpr std::uint32_t philox_w0 = 0x9E3779B9u;
inline constexpr std::uint32_t philox_w1 = 0xBB67AE85u;

using Philox4x32Block = std::array<std::uint32_t, 4>;
using Philox4x32Key = std::array<std::uint32_t, 2>;

constexpr Philox4x32Block philox4x32_round(Philox4x32Block c, Philox4x32Key k)
{
    std::uint64_t p0 = std::uint64_t{philox_m0} * c[0];
    std::uint64_t p1 = std::uint64_t{philox_m1} * c[2];
    auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
    auto lo0 = static_cast<std::uint32_t>(p0);
    auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
    auto lo1 = static_cast<std::uint32_t>(p1);
    return {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
}

}  // namespace detail

/// Philox4x32 with ten rounds.
constexpr detail::Philox4x32Block
philox4x32_10(detail::Philox4x32Block ctr, detail::Philox4x32Key key)
{
    for (int round = 0; round < 10; ++round) {
        if (round > 0) {
            key[0] += detail::philox_w0;
            key[1] += detail::philox_w1;
        }
        ctr = detail::philox4x32_round(ctr, key);
    }
    return ctr;
}

/// Inverse exponential CDF on a (0, 1] uniform.
inline double exponential_from_uniform(double u)
{
    return -std::log(u);
}

/// SplitMix64 finalizer, used to derive independent sub-seeds.
constexpr std::uint64_t mix64(std::uint64_t z)
{
    z += 0x9E3779B97F4A7C15ull;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

/// Sub-seed for a named stage of an experiment (grid point, scheme, ...).
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag)
{
    return mix64(mix64(seed) ^ mix64(tag + 0x632BE59BD9B4E019ull));
}

/**
 * Random stream keyed by (seed, stream id).
 *
 * The n-th 64-bit word is taken from Philox block n/2 with counter
 * (n/2 low, n/2 high, stream low, stream high), so the sequence is a pure
 * function of (seed, stream, counter). Normal variates use Box-Muller and
 * keep the second value of each pair.
 */
class RngStream
{
  public:
    RngStream(std::uint64_t seed, std::uint64_t stream, std::uint64_t counter = 0)
        : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)}
        , stream_{stream}
        , counter_{counter}
    {
    }

    std::uint64_t seed() const
    {
        return (std::uint64_t{key_[1]} << 32) | key_[0];
    }
    std::uint64_t stream() const { return stream_; }
    std::uint64_t counter() const { return counter_; }

    /// Next raw 64-bit word.
    std::uint64_t next_u64()
    {
        std::uint64_t block = counter_ >> 1;
        if (block != cached_block_ || !have_block_) {
            buffer_ = philox4x32_10({static_cast<std::uint32_t>(block),
                                     static_cast<std::uint32_t>(block >> 32),
                                     static_cast<std::uint32_t>(stream_),
                                     static_cast<std::uint32_t>(stream_ >> 32)},
                                    key_);
            cached_block_ = block;
            have_block_ = true;
        }
        unsigned half = static_cast<unsigned>(counter_ & 1u) * 2;
        ++counter_;
        return (std::uint64_t{buffer_[half + 1]} << 32) | buffer_[half];
    }

    /// Uniform on (0, 1] with 53 random bits.
    double uniform()
    {
        return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
    }

    /// Standard exponential, -ln U.
    double exponential() { return exponential_from_uniform(uniform()); }

    /// Standard normal.
    double normal()
    {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double r = std::sqrt(-2.0 * std::log(uniform()));
        double phi = 2.0 * std::numbers::pi * uniform();
        spare_ = r * std::sin(phi);
        have_spare_ = true;
        return r * std::cos(phi);
    }

  private:
    detail::Philox4x32Key key_;
    std::uint64_t stream_;
    std::uint64_t counter_;
    detail::Philox4x32Block buffer_{};
    std::uint64_t cached_block_{0};
    bool have_block_{false};
    double spare_{0};
    bool have_spare_{false};
};

static_assert(VariateSource<RngStream>);

}  // namespace kdmc
