#pragma once

#include <cmath>
#include <numbers>

namespace mixdc::normal {

inline constexpr double kLogSqrt2Pi = 0.91893853320467274178;  // log(sqrt(2 pi))
inline constexpr double kInvSqrt2 = 0.70710678118654752440;
inline constexpr double kInvSqrt2Pi = 0.39894228040143267794;

inline double pdf(double z) noexcept { return kInvSqrt2Pi * std::exp(-0.5 * z * z); }
inline double log_pdf(double z) noexcept { return -0.5 * z * z - kLogSqrt2Pi; }

inline double cdf(double z) noexcept { return 0.5 * std::erfc(-z * kInvSqrt2); }
/// Upper tail 1 - Phi(z), accurate for large z.
inline double sf(double z) noexcept { return 0.5 * std::erfc(z * kInvSqrt2); }

/// Phi(b) - Phi(a) for a <= b, using whichever tail keeps full relative precision.
inline double interval_prob(double a, double b) noexcept {
  if (!(a < b)) return 0.0;
  if (a >= 0.0) return sf(a) - sf(b);
  if (b <= 0.0) return cdf(b) - cdf(a);
  return 1.0 - sf(b) - cdf(a);
}

/// Phi^{-1}(p) for p in (0, 1).
double quantile(double p);
/// Inverse of the upper tail: z with sf(z) = q.
double quantile_upper(double q);

}  // namespace mixdc::normal
