#pragma once

// Counter-based random numbers (Philox4x32-10, Salmon et al. 2011).
//
// A draw is a pure function of (key, counter), so any particle's noise at any
// step can be regenerated independently of how the ensemble is partitioned.

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <utility>

namespace kinlangevin {

using PhiloxCounter = std::array<std::uint32_t, 4>;
using PhiloxKey = std::array<std::uint32_t, 2>;

constexpr PhiloxCounter philox4x32_10(PhiloxCounter ctr, PhiloxKey key) noexcept {
  constexpr std::uint32_t kMul0 = 0xD2511F53u;
  constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
  constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
  constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;
  for (int round = 0; round < 10; ++round) {
    if (round > 0) {
      key[0] += kWeyl0;
      key[1] += kWeyl1;
    }
    const std::uint64_t p0 = static_cast<std::uint64_t>(kMul0) * ctr[0];
    const std::uint64_t p1 = static_cast<std::uint64_t>(kMul1) * ctr[2];
    const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
    const auto lo0 = static_cast<std::uint32_t>(p0);
    const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
    const auto lo1 = static_cast<std::uint32_t>(p1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
  }
  return ctr;
}

/// splitmix64 finalizer; used to derive independent keys from (seed, domain).
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

/// Streams used by the library. Distinct domains never share a key.
enum class StreamDomain : std::uint64_t {
  DynamicsNoise = 1,
  InitialState = 2,
  ConstantSampling = 3,
};

/// Standard normals keyed by (seed, domain, particle, step, component).
class NormalStream {
 public:
  NormalStream(std::uint64_t seed, StreamDomain domain) noexcept {
    const std::uint64_t k = mix64(seed ^ mix64(static_cast<std::uint64_t>(domain)));
    key_ = {static_cast<std::uint32_t>(k), static_cast<std::uint32_t>(k >> 32)};
  }

  /// Pair of independent N(0,1) draws; block enumerates pairs within one (particle, step).
  std::pair<double, double> normal_pair(std::uint64_t particle, std::uint32_t step, std::uint32_t block) const noexcept {
    const PhiloxCounter out = philox4x32_10(
        {block, step, static_cast<std::uint32_t>(particle), static_cast<std::uint32_t>(particle >> 32)}, key_);
    const std::uint64_t a = (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
    const std::uint64_t b = (static_cast<std::uint64_t>(out[2]) << 32) | out[3];
    // u1 in (0, 1] keeps the logarithm finite.
    const double u1 = (static_cast<double>(a >> 11) + 1.0) * 0x1.0p-53;
    const double u2 = static_cast<double>(b >> 11) * 0x1.0p-53;
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * std::numbers::pi * u2;
    return {r * std::cos(theta), r * std::sin(theta)};
  }

  /// Fills out[0..n) with the normals of (particle, step).
  template <typename Out>
  void fill(std::uint64_t particle, std::uint32_t step, Out* out, int n) const noexcept {
    for (int j = 0; j < n; j += 2) {
      const auto [z0, z1] = normal_pair(particle, step, static_cast<std::uint32_t>(j / 2));
      out[j] = z0;
      if (j + 1 < n) out[j + 1] = z1;
    }
  }

  /// Uniform in [0, 1), keyed like normal_pair.
  double uniform(std::uint64_t index, std::uint32_t component) const noexcept {
    const PhiloxCounter out = philox4x32_10(
        {component, 0u, static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)}, key_);
    const std::uint64_t a = (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
    return static_cast<double>(a >> 11) * 0x1.0p-53;
  }

 private:
  PhiloxKey key_{};
};

}  // namespace kinlangevin
