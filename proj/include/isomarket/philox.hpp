#pragma once

// Counter-based random streams (Philox4x32-10, Salmon et al. SC 2011).
// Every (seed, stream, index) triple maps to the same output no matter which
// thread asks, which is what makes path-parallel simulation bit-reproducible.

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace isomarket::rng {

namespace detail {

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& lo,
                    std::uint32_t& hi) {
  const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
  lo = static_cast<std::uint32_t>(p);
  hi = static_cast<std::uint32_t>(p >> 32);
}

}  // namespace detail

// One 128-bit Philox block: 4 x 32-bit words from (key, counter).
inline std::array<std::uint32_t, 4> philox4x32(std::uint64_t key,
                                               std::uint64_t ctr_hi,
                                               std::uint64_t ctr_lo) {
  constexpr std::uint32_t kMulA = 0xD2511F53u;
  constexpr std::uint32_t kMulB = 0xCD9E8D57u;
  constexpr std::uint32_t kWeylA = 0x9E3779B9u;
  constexpr std::uint32_t kWeylB = 0xBB67AE85u;

  std::uint32_t c0 = static_cast<std::uint32_t>(ctr_lo);
  std::uint32_t c1 = static_cast<std::uint32_t>(ctr_lo >> 32);
  std::uint32_t c2 = static_cast<std::uint32_t>(ctr_hi);
  std::uint32_t c3 = static_cast<std::uint32_t>(ctr_hi >> 32);
  std::uint32_t k0 = static_cast<std::uint32_t>(key);
  std::uint32_t k1 = static_cast<std::uint32_t>(key >> 32);

  for (int round = 0; round < 10; ++round) {
    std::uint32_t lo0, hi0, lo1, hi1;
    detail::mulhilo(kMulA, c0, lo0, hi0);
    detail::mulhilo(kMulB, c2, lo1, hi1);
    const std::uint32_t n0 = hi1 ^ c1 ^ k0;
    const std::uint32_t n1 = lo1;
    const std::uint32_t n2 = hi0 ^ c3 ^ k1;
    const std::uint32_t n3 = lo0;
    c0 = n0;
    c1 = n1;
    c2 = n2;
    c3 = n3;
    k0 += kWeylA;
    k1 += kWeylB;
  }
  return {c0, c1, c2, c3};
}

// Uniform in (0,1]: 53-bit mantissa from two words, never exactly 0 so it is
// safe under log().
inline double to_unit_open(std::uint32_t a, std::uint32_t b) {
  const std::uint64_t bits = (static_cast<std::uint64_t>(a) << 32) | b;
  return (static_cast<double>(bits >> 11) + 1.0) * 0x1p-53;
}

// Stream of N(0,1) draws for one (seed, stream id) pair. Draw k is a pure
// function of (seed, stream, k); the cache only avoids recomputing the block
// shared by a Box-Muller pair.
class NormalStream {
 public:
  NormalStream(std::uint64_t seed, std::uint64_t stream)
      : seed_(seed), stream_(stream) {}

  double normal(std::uint64_t index) const {
    const std::uint64_t block = index >> 1;
    if (!cached_ || cached_block_ != block) {
      const auto w = philox4x32(seed_, stream_, block);
      const double u1 = to_unit_open(w[0], w[1]);
      const double u2 = to_unit_open(w[2], w[3]);
      const double radius = std::sqrt(-2.0 * std::log(u1));
      const double angle = 2.0 * std::numbers::pi * u2;
      pair_[0] = radius * std::cos(angle);
      pair_[1] = radius * std::sin(angle);
      cached_block_ = block;
      cached_ = true;
    }
    return pair_[index & 1];
  }

  double uniform(std::uint64_t index) const {
    const std::uint64_t block = index >> 1;
    const auto w = philox4x32(seed_ ^ 0x5bf0'3635'dea8'4d17ull, stream_, block);
    return (index & 1) ? to_unit_open(w[2], w[3]) : to_unit_open(w[0], w[1]);
  }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  mutable std::uint64_t cached_block_ = ~0ull;
  mutable bool cached_ = false;
  mutable double pair_[2] = {0.0, 0.0};
};

}  // namespace isomarket::rng
