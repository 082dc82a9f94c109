#pragma once

// Counter-based random numbers: every draw is a pure function of
// (seed, stream, purpose, index), so particle m's numbers never depend on
// how many other particles exist or in which order they are generated.

#include <array>
#include <cstdint>

namespace stefan::rng {

using Counter = std::array<std::uint32_t, 4>;
using Key = std::array<std::uint32_t, 2>;

/// Philox4x32 with 10 rounds (Salmon et al., SC'11).
Counter philox4x32(Counter ctr, Key key) noexcept;

/// Standard normal quantile (Wichura's AS241), relative accuracy about 1e-16
/// on (0, 1).
double inverse_normal_cdf(double p);

enum class Purpose : std::uint32_t {
  Driver = 0,
  InitialPosition = 1,
};

/// Random stream of one particle. Index i addresses the i-th draw.
class CounterStream {
 public:
  CounterStream(std::uint64_t seed, std::uint64_t stream, Purpose purpose = Purpose::Driver) noexcept
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
        stream_(stream),
        purpose_(static_cast<std::uint32_t>(purpose)) {}

  /// Uniform on the open interval (0, 1) with 53 random bits.
  double uniform(std::uint64_t index) const noexcept {
    const Counter out = philox4x32(counter(index >> 1), key_);
    return to_unit(out, (index & 1u) * 2);
  }

  /// Draws 2b and 2b + 1 from a single Philox call.
  std::array<double, 2> uniform_pair(std::uint64_t block) const noexcept {
    const Counter out = philox4x32(counter(block), key_);
    return {to_unit(out, 0), to_unit(out, 2)};
  }

  double normal(std::uint64_t index) const { return inverse_normal_cdf(uniform(index)); }

  int rademacher(std::uint64_t index) const noexcept { return uniform(index) < 0.5 ? -1 : 1; }

 private:
  static double to_unit(const Counter& out, std::size_t half) noexcept {
    const std::uint64_t bits = ((static_cast<std::uint64_t>(out[half]) << 32) | out[half + 1]) >> 11;
    return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
  }

  Counter counter(std::uint64_t block) const noexcept {
    // Block index in 48 bits, purpose tag in the top 16 bits of word 1.
    return {static_cast<std::uint32_t>(block),
            static_cast<std::uint32_t>((block >> 32) & 0xFFFFu) | (purpose_ << 16),
            static_cast<std::uint32_t>(stream_), static_cast<std::uint32_t>(stream_ >> 32)};
  }

  Key key_;
  std::uint64_t stream_;
  std::uint32_t purpose_;
};

}  // namespace stefan::rng
