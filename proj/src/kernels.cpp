#include "mixdc/kernels.hpp"

#include <array>
#include <cmath>
#include <vector>

#include "mixdc/errors.hpp"
#include "mixdc/quadrature.hpp"

namespace mixdc::kernels {

namespace {

using Poly = std::vector<double>;  // coefficients, lowest degree first

Poly derivative(const Poly& p) {
  Poly out(p.size() > 1 ? p.size() - 1 : 1, 0.0);
  for (std::size_t i = 1; i < p.size(); ++i) out[i - 1] = p[i] * static_cast<double>(i);
  return out;
}

Poly multiply(const Poly& a, const Poly& b) {
  Poly out(a.size() + b.size() - 1, 0.0);
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j) out[i + j] += a[i] * b[j];
  return out;
}

Poly add(Poly a, const Poly& b) {
  if (b.size() > a.size()) a.resize(b.size(), 0.0);
  for (std::size_t i = 0; i < b.size(); ++i) a[i] += b[i];
  return a;
}

const std::array<Poly, kMaxDerivative + 1>& prefactors() {
  static const std::array<Poly, kMaxDerivative + 1> table = [] {
    std::array<Poly, kMaxDerivative + 1> p;
    const Poly v{1.0, 0.0, -1.0};
    const Poly v2 = multiply(v, v);
    p[0] = {1.0};
    for (int s = 0; s < kMaxDerivative; ++s) {
      const Poly& ps = p[static_cast<std::size_t>(s)];
      Poly next = multiply(derivative(ps), v2);
      next = add(next, multiply(multiply(Poly{0.0, 4.0 * s}, v), ps));
      next = add(next, multiply(Poly{0.0, -2.0}, ps));
      p[static_cast<std::size_t>(s + 1)] = next;
    }
    return p;
  }();
  return table;
}

double horner(const Poly& p, double u) {
  double acc = 0.0;
  for (std::size_t i = p.size(); i-- > 0;) acc = acc * u + p[i];
  return acc;
}

}  // namespace

double K0(double u) noexcept {
  if (!(std::abs(u) < 1.0)) return 0.0;
  return std::exp(-1.0 / (1.0 - u * u));
}

double K0_derivative(int s, double u) {
  if (s < 0 || s > kMaxDerivative) throw DomainError("K0_derivative: order out of range");
  if (!(std::abs(u) < 1.0)) return 0.0;
  if (s == 0) return K0(u);
  const double v = 1.0 - u * u;
  // P_s / v^{2s} * K0 evaluated in log space to avoid 0 * inf near |u| = 1.
  const double p = horner(prefactors()[static_cast<std::size_t>(s)], u);
  if (p == 0.0) return 0.0;
  const double log_mag = std::log(std::abs(p)) - 2.0 * s * std::log(v) - 1.0 / v;
  return std::copysign(std::exp(log_mag), p);
}

double K0_integral() {
  static const double value = integrate_adaptive([](double u) { return K0(u); }, -1.0, 1.0, {1e-15, 1e-17, 40}).value;
  return value;
}

double K0_cumulative(double u) {
  if (u <= -1.0) return 0.0;
  if (u >= 1.0) return K0_integral();
  if (u <= 0.0) return integrate_adaptive([](double t) { return K0(t); }, -1.0, u, {1e-14, 1e-18, 40}).value;
  return K0_integral() - integrate_adaptive([](double t) { return K0(t); }, u, 1.0, {1e-14, 1e-18, 40}).value;
}

double g(double u, double c0) noexcept { return c0 * (K0(4.0 * u + 1.0) - K0(4.0 * u - 1.0)); }

double g_derivative(int s, double u, double c0) {
  return c0 * std::pow(4.0, s) * (K0_derivative(s, 4.0 * u + 1.0) - K0_derivative(s, 4.0 * u - 1.0));
}

double g_cumulative(double u, double c0) {
  return c0 * 0.25 * (K0_cumulative(4.0 * u + 1.0) - K0_cumulative(4.0 * u - 1.0));
}

double g_abs_integral(double c0) {
  static const double unit = integrate_adaptive([](double u) { return std::abs(g(u, 1.0)); }, -0.5, 0.5,
                                                 {1e-15, 1e-17, 40})
                                 .value;
  return c0 * unit;
}

double g_sup(double c0) noexcept { return c0 * std::exp(-1.0); }

}  // namespace mixdc::kernels
