#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <limits>
#include <random>

namespace mixdc {

/// General-purpose engine for sequential sampling.
using Rng = std::mt19937_64;

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Derives an independent stream key from a root seed and a path of labels.
///
/// Split rule: key = mix64(... mix64(mix64(seed) + c0) ... + ck), each label
/// first offset by the golden-ratio increment so that zero labels still
/// advance the state. Used for per-thread, per-replication and
/// per-component streams; the result is a pure function of its inputs.
inline std::uint64_t stream_key(std::uint64_t seed, std::initializer_list<std::uint64_t> path) noexcept {
  std::uint64_t key = mix64(seed + 0x9e3779b97f4a7c15ULL);
  for (std::uint64_t label : path) key = mix64(key + 0x9e3779b97f4a7c15ULL * (label + 1));
  return key;
}

/// Counter-based SplitMix64 engine; cheap to construct, so one can be made
/// per (iteration, purpose, item) key.
class SplitMix64 {
 public:
  using result_type = std::uint64_t;

  explicit SplitMix64(std::uint64_t key) noexcept : state_(key) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  result_type operator()() noexcept {
    state_ += 0x9e3779b97f4a7c15ULL;
    return mix64(state_);
  }

 private:
  std::uint64_t state_;
};

/// Uniform on the open interval (0, 1).
template <class Engine>
double uniform_open(Engine& eng) {
  // 53 random bits, shifted by half an ulp so that 0 is never returned.
  return (static_cast<double>(eng() >> 11) + 0.5) * 0x1.0p-53;
}

template <class Engine>
double standard_normal(Engine& eng) {
  std::normal_distribution<double> dist(0.0, 1.0);
  return dist(eng);
}

/// log of a Gamma(shape, 1) variate, accurate for very small shapes where the
/// variate itself underflows.
template <class Engine>
double log_gamma_variate(Engine& eng, double shape) {
  if (shape >= 1.0) {
    std::gamma_distribution<double> dist(shape, 1.0);
    return std::log(dist(eng));
  }
  std::gamma_distribution<double> dist(shape + 1.0, 1.0);
  const double g = dist(eng);
  return std::log(g) + std::log(uniform_open(eng)) / shape;
}

}  // namespace mixdc
