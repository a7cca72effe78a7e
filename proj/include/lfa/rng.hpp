#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <string_view>

namespace lfa {

/// mt19937_64 wrapper that counts raw draws, so generator state serializes as
/// (seed, count) and restores by replay. Box–Muller is spare-less for the same
/// reason: every normal costs exactly two draws.
class CountingRng {
 public:
  explicit CountingRng(std::uint64_t seed) : engine_(seed), seed_(seed) {}

  std::uint64_t next_u64() {
    ++count_;
    return engine_();
  }

  /// Uniform in [0, 1), 53-bit resolution.
  double next_unit() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  /// Uniform in (0, 1]; safe as a log argument.
  double next_unit_open() {
    return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
  }

  double next_normal() {
    double u1 = next_unit_open();
    double u2 = next_unit();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * std::numbers::pi * u2);
  }

  /// Uniform in [0, bound). Modulo bias is ~bound/2^64, irrelevant here.
  int next_int(int bound) { return static_cast<int>(next_u64() % bound); }

  std::uint64_t seed() const { return seed_; }
  std::uint64_t draw_count() const { return count_; }

  static CountingRng restore(std::uint64_t seed, std::uint64_t count) {
    CountingRng rng(seed);
    rng.engine_.discard(count);
    rng.count_ = count;
    return rng;
  }

 private:
  std::mt19937_64 engine_;
  std::uint64_t seed_;
  std::uint64_t count_ = 0;
};

/// splitmix64 — stable sub-seed derivation for ports, models, request streams.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (salt + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t hash_name(std::string_view name) {
  std::uint64_t h = 1469598103934665603ULL;
  for (char c : name) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace lfa
