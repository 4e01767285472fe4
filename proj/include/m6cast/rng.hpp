#pragma once

#include <array>
#include <cmath>
#include <cstdint>

namespace m6cast::rng {

// Philox4x32-10 counter-based generator. Every draw is a pure function of
// (seed, c0, c1, c2, c3): streams never share state, any coordinate of a
// sample set can be regenerated on its own, and parallel evaluation cannot
// change the values drawn.
//
// Convention used across the project: c3 is a stream tag (see Stream below),
// (c2, c1, c0) are the semantic coordinates of the draw, e.g.
// (sample index, day, asset column) for horizon samples.

enum class Stream : std::uint32_t {
  gaussian = 1,     // N(0,1) draws for Gaussian marginals
  empirical = 2,    // uniform index draws for empirical marginals
  simulation = 3,   // GARCH simulator innovations
  perturbation = 4, // feasible random perturbations (oracles, restarts)
  holdout = 5,      // held-out Monte-Carlo evaluation sets
};

namespace detail {

inline constexpr std::uint32_t lo32(std::uint64_t x) { return static_cast<std::uint32_t>(x); }
inline constexpr std::uint32_t hi32(std::uint64_t x) { return static_cast<std::uint32_t>(x >> 32); }

inline std::array<std::uint32_t, 4> philox_block(std::uint64_t seed,
                                                 std::uint32_t c0, std::uint32_t c1,
                                                 std::uint32_t c2, std::uint32_t c3) {
  constexpr std::uint64_t kMul0 = 0xD2511F53u;
  constexpr std::uint64_t kMul1 = 0xCD9E8D57u;
  constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
  constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

  std::uint32_t x0 = c0, x1 = c1, x2 = c2, x3 = c3;
  std::uint32_t k0 = lo32(seed), k1 = hi32(seed);
  for (int round = 0; round < 10; ++round) {
    const std::uint64_t p0 = kMul0 * x0;
    const std::uint64_t p1 = kMul1 * x2;
    const std::uint32_t y0 = hi32(p1) ^ x1 ^ k0;
    const std::uint32_t y1 = lo32(p1);
    const std::uint32_t y2 = hi32(p0) ^ x3 ^ k1;
    const std::uint32_t y3 = lo32(p0);
    x0 = y0; x1 = y1; x2 = y2; x3 = y3;
    k0 += kWeyl0;
    k1 += kWeyl1;
  }
  return {x0, x1, x2, x3};
}

// [0,1) from the top 53 bits of a 64-bit word.
inline double u01(std::uint64_t bits) {
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

}  // namespace detail

/// Uniform draw in [0,1) at counter (c0, c1, c2, tag).
inline double uniform_at(std::uint64_t seed, Stream tag,
                         std::uint32_t c2, std::uint32_t c1, std::uint32_t c0) {
  const auto b = detail::philox_block(seed, c0, c1, c2, static_cast<std::uint32_t>(tag));
  const std::uint64_t w = (static_cast<std::uint64_t>(b[0]) << 32) | b[1];
  return detail::u01(w);
}

/// Standard normal draw at counter (c0, c1, c2, tag). One Philox block gives
/// two 53-bit uniforms, combined by the deterministic Box-Muller map (no
/// rejection, so the counter-to-value mapping is total).
inline double normal_at(std::uint64_t seed, Stream tag,
                        std::uint32_t c2, std::uint32_t c1, std::uint32_t c0) {
  const auto b = detail::philox_block(seed, c0, c1, c2, static_cast<std::uint32_t>(tag));
  const std::uint64_t wa = (static_cast<std::uint64_t>(b[0]) << 32) | b[1];
  const std::uint64_t wb = (static_cast<std::uint64_t>(b[2]) << 32) | b[3];
  // u1 in (0,1] so the log is finite; u2 in [0,1).
  const double u1 = static_cast<double>((wa >> 11) + 1) * 0x1.0p-53;
  const double u2 = detail::u01(wb);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
}

/// Uniform integer in [0, n) at the given counter; n must be positive.
inline std::uint32_t uniform_index_at(std::uint64_t seed, Stream tag,
                                      std::uint32_t c2, std::uint32_t c1, std::uint32_t c0,
                                      std::uint32_t n) {
  const double u = uniform_at(seed, tag, c2, c1, c0);
  auto idx = static_cast<std::uint32_t>(u * static_cast<double>(n));
  return idx >= n ? n - 1 : idx;
}

/// Independent sub-seed for a salted purpose (held-out sets, batch streams).
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t salt) {
  const auto b = detail::philox_block(seed, detail::lo32(salt), detail::hi32(salt), 0x5EEDu, 0);
  return (static_cast<std::uint64_t>(b[0]) << 32) | b[1];
}

}  // namespace m6cast::rng
