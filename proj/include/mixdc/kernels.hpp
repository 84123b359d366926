#pragma once

namespace mixdc::kernels {

/// Bump K0(u) = exp(-1/(1-u^2)) on |u| < 1, zero elsewhere.
double K0(double u) noexcept;

/// s-th derivative of K0, from K0^(s) = P_s(u) / (1-u^2)^{2s} * K0(u) with
/// P_0 = 1 and P_{s+1} = P_s' v^2 + 4 s u v P_s - 2 u P_s, v = 1 - u^2.
/// Supported for s <= kMaxDerivative.
double K0_derivative(int s, double u);

inline constexpr int kMaxDerivative = 16;

/// Integral of K0 over [-1, u] (clamped to [-1, 1]).
double K0_cumulative(double u);

/// Integral of K0 over [-1, 1]; computed once by adaptive quadrature.
double K0_integral();

/// g(u) = c0 [K0(4u + 1) - K0(4u - 1)], odd, supported on [-1/2, 1/2].
double g(double u, double c0) noexcept;
double g_derivative(int s, double u, double c0);

/// Integral of g over [-1/2, u].
double g_cumulative(double u, double c0);

/// Integral of |g| over [-1/2, 1/2] = (c0 / 2) * K0_integral().
double g_abs_integral(double c0);

/// sup |g| = c0 / e.
double g_sup(double c0) noexcept;

}  // namespace mixdc::kernels
