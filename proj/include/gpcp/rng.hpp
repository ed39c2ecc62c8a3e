#pragma once

// Deterministic randomness. Every stochastic routine in the library draws
// through these wrappers so that results are pinned to one algorithm
// (mt19937_64 core, splitmix64-derived streams, explicit transforms) instead
// of the standard library's implementation-defined distributions.

#include <cmath>
#include <cstdint>
#include <random>

namespace gpcp::rng {

// Recorded in every report so consumers can tell which stream layout
// produced the numbers.
inline constexpr const char* kAlgorithmId = "mt19937_64+splitmix64-streams/1";

inline constexpr double kTwoPi = 6.283185307179586476925286766559;

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Child seed for stream `index`; used for per-fold, per-branch and
// per-resample streams so thread scheduling cannot change results.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
  return splitmix64(seed ^ splitmix64(index + 0x51ed270b9f8f0a37ULL));
}

class Engine {
 public:
  explicit Engine(std::uint64_t seed) : eng_(seed) {}

  std::uint64_t next_u64() { return eng_(); }

  // Uniform on [0,1) with 53 random bits.
  double uniform01() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

  // Uniform on (0,1); inverse-CDF transforms reject an exact 0.
  double uniform01_open() {
    double u = uniform01();
    while (u == 0.0) u = uniform01();
    return u;
  }

  // Uniform index in [0, bound), bound >= 1. Multiply-shift mapping; the
  // bias is O(bound / 2^64) and identical on every platform.
  std::uint64_t uniform_index(std::uint64_t bound) {
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(eng_()) * bound) >> 64);
  }

  // Standard normal via Box-Muller; both values of a pair are consumed.
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double u1 = uniform01_open();
    const double u2 = uniform01();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = kTwoPi * u2;
    spare_ = radius * std::sin(angle);
    have_spare_ = true;
    return radius * std::cos(angle);
  }

 private:
  std::mt19937_64 eng_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace gpcp::rng
