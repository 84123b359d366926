#pragma once

#include <algorithm>
#include <cmath>

#include "mixdc/grid.hpp"
#include "mixdc/normal.hpp"
#include "mixdc/random.hpp"

namespace mixdc {

namespace detail {

inline constexpr double kTailStart = 6.0;

/// Standard normal restricted to [a, b] with a >= kTailStart.
template <class Engine>
double upper_tail_normal(double a, double b, Engine& eng) {
  if (b < kInf && a * (b - a) < 0.5) {
    // Narrow window: uniform proposal, acceptance at least e^{-1/2} or so.
    for (;;) {
      const double z = a + (b - a) * uniform_open(eng);
      if (uniform_open(eng) <= std::exp(0.5 * (a * a - z * z))) return z;
    }
  }
  // Exponential proposal with the optimal rate.
  const double lambda = 0.5 * (a + std::sqrt(a * a + 4.0));
  for (;;) {
    const double z = a - std::log(uniform_open(eng)) / lambda;
    if (z > b) continue;
    const double diff = z - lambda;
    if (uniform_open(eng) <= std::exp(-0.5 * diff * diff)) return z;
  }
}

}  // namespace detail

/// Standard normal restricted to [a, b], a < b. Inverse CDF in the body,
/// exponential rejection once the window starts beyond six standard deviations.
template <class Engine>
double truncated_standard_normal(double a, double b, Engine& eng) {
  if (!(a < b)) return a;
  if (a >= detail::kTailStart) return detail::upper_tail_normal(a, b, eng);
  if (b <= -detail::kTailStart) return -detail::upper_tail_normal(-b, -a, eng);
  const double u = uniform_open(eng);
  double z;
  if (a >= 0.0) {
    const double qa = normal::sf(a), qb = normal::sf(b);
    z = normal::quantile_upper(qa - u * (qa - qb));
  } else {
    const double pa = normal::cdf(a), pb = normal::cdf(b);
    z = normal::quantile(pa + u * (pb - pa));
  }
  return std::clamp(z, a, b);
}

/// N(mu, sigma^2) restricted to the cell (lo, hi]; the result always lies in the cell.
template <class Engine>
double truncated_normal(double mu, double sigma, const Interval& cell, Engine& eng) {
  const double z = truncated_standard_normal((cell.lo - mu) / sigma, (cell.hi - mu) / sigma, eng);
  double v = mu + sigma * z;
  if (!(v > cell.lo)) v = std::nextafter(cell.lo, kInf);
  if (v > cell.hi) v = cell.hi;
  return v;
}

}  // namespace mixdc
