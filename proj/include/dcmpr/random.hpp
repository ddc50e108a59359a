#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>

namespace dcmpr {

inline constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline constexpr std::uint64_t fnv1a(std::string_view text) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char ch : text) {
    h ^= static_cast<unsigned char>(ch);
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Inverse-CDF of a Pareto(shape, scale) variable at u in (0, 1].
inline double pareto_quantile(double u, double shape, double scale) {
  return scale * std::pow(u, -1.0 / shape);
}

/// Seeded random stream over mt19937_64.
///
/// All variates are produced from raw 64-bit engine output with the
/// conversions below, so a given seed yields the same numbers on every
/// standard library. Sub-streams are derived by hashing (seed, tag), which
/// lets replication r of an experiment use `derive(master, r)` regardless
/// of how many replications ran before it or on which thread.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed) : seed_(seed), engine_(splitmix64(seed)) {}

  static RandomStream derive(std::uint64_t seed, std::uint64_t tag) {
    return RandomStream(splitmix64(seed ^ splitmix64(tag + 0x632be59bd9b4e019ULL)));
  }

  RandomStream child(std::uint64_t tag) const { return derive(seed_, tag); }
  RandomStream child(std::string_view name) const { return derive(seed_, fnv1a(name)); }

  std::uint64_t seed() const noexcept { return seed_; }

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on (0, 1], 53-bit resolution.
  double uniform_open_closed() {
    return static_cast<double>((engine_() >> 11) + 1) * 0x1.0p-53;
  }

  /// Uniform on [0, 1), 53-bit resolution.
  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform integer on [0, bound); bound must be positive (Lemire's method).
  std::uint64_t index(std::uint64_t bound) {
    unsigned __int128 m = static_cast<unsigned __int128>(engine_()) * bound;
    auto low = static_cast<std::uint64_t>(m);
    if (low < bound) {
      const std::uint64_t threshold = (0 - bound) % bound;
      while (low < threshold) {
        m = static_cast<unsigned __int128>(engine_()) * bound;
        low = static_cast<std::uint64_t>(m);
      }
    }
    return static_cast<std::uint64_t>(m >> 64);
  }

  double exponential(double rate) { return -std::log(uniform_open_closed()) / rate; }

  double pareto(double shape, double scale) {
    return pareto_quantile(uniform_open_closed(), shape, scale);
  }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

}  // namespace dcmpr
