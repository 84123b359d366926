#include "mixdc/rates.hpp"

#include <bit>
#include <cmath>
#include <limits>

#include "mixdc/errors.hpp"

namespace mixdc {

void SmoothnessSpec::validate(int d) const {
  if (static_cast<int>(beta.size()) != d)
    throw ShapeError("SmoothnessSpec: expected " + std::to_string(d) + " smoothness orders, got " +
                     std::to_string(beta.size()));
  for (double b : beta)
    if (!(b > 0.0) || !std::isfinite(b)) throw DomainError("SmoothnessSpec: beta_i must be positive and finite");
  if (!(L > 0.0)) throw DomainError("SmoothnessSpec: L must be positive");
}

void RateInputs::validate() const {
  smoothness.validate(grid.d());
  if (!(n >= 2.0) || !std::isfinite(n)) throw DomainError("RateInputs: n must be >= 2");
  if (!(tau > 0.0)) throw DomainError("RateInputs: tau must be positive");
  if (!(tau1 >= 0.0)) throw DomainError("RateInputs: tau1 must be nonnegative");
  if (!(tau2 > 0.0)) throw DomainError("RateInputs: tau2 must be positive");
}

HarmonicBeta beta_harmonic(const SmoothnessSpec& smoothness, std::span<const int> complement) {
  if (complement.empty()) return {true, 0.0};
  double inv = 0.0;
  for (int i : complement) inv += 1.0 / smoothness.beta.at(static_cast<std::size_t>(i));
  return {false, 1.0 / inv};
}

std::vector<int> complement_indices(const RateInputs& inputs, SubsetMask J) {
  std::vector<int> out;
  for (int j = 0; j < inputs.grid.d_y(); ++j)
    if (!((J >> j) & 1U)) out.push_back(j);
  for (int i = inputs.grid.d_y(); i < inputs.grid.d(); ++i) out.push_back(i);
  return out;
}

HarmonicBeta beta_harmonic(const RateInputs& inputs, SubsetMask J) {
  const std::vector<int> c = complement_indices(inputs, J);
  return beta_harmonic(inputs.smoothness, c);
}

bool tie_break_less(SubsetMask a, SubsetMask b) noexcept {
  const int ca = std::popcount(a), cb = std::popcount(b);
  if (ca != cb) return ca < cb;
  // Same size: the first differing position decides; the set holding the
  // smaller index there comes first.
  const SubsetMask diff = a ^ b;
  if (diff == 0) return false;
  const SubsetMask low = diff & (~diff + 1U);
  return (a & low) != 0;
}

RateReport gamma_n(const RateInputs& inputs) {
  inputs.validate();
  const int dy = inputs.grid.d_y();
  if (dy > kMaxEnumeratedDy)
    throw UnsupportedError("gamma_n: d_y = " + std::to_string(dy) + " exceeds the enumeration limit of 20");
  const std::size_t count = std::size_t{1} << dy;
  RateReport report;
  report.rows.resize(count);
  report.gamma_n = std::numeric_limits<double>::infinity();
  for (std::size_t mask = 0; mask < count; ++mask) {
    SubsetRow& row = report.rows[mask];
    row.J = static_cast<SubsetMask>(mask);
    row.N_J = 1.0;
    for (int j = 0; j < dy; ++j)
      if ((mask >> j) & 1U) row.N_J *= inputs.grid.N(j);
    row.beta_Jc = beta_harmonic(inputs, row.J);
    row.exponent = row.beta_Jc.exponent();
    row.value = std::pow(row.N_J / inputs.n, row.exponent);
    if (row.value < report.gamma_n || (row.value == report.gamma_n && tie_break_less(row.J, report.j_star))) {
      report.gamma_n = row.value;
      report.j_star = row.J;
    }
  }
  report.rows[report.j_star].is_min = true;
  return report;
}

double t_J0_value(int d_Jc, const HarmonicBeta& beta_Jc, double tau, double tau1, double tau2) {
  if (beta_Jc.infinite || d_Jc == 0) return std::max(tau1, 1.0) / 2.0;
  const double b = beta_Jc.value;
  const double num = d_Jc * (1.0 + 1.0 / (b * d_Jc) + 1.0 / tau) + std::max({tau1, 1.0, tau2 / tau});
  return num / (2.0 + 1.0 / b);
}

double t_J0(const RateInputs& inputs, SubsetMask J) {
  const std::vector<int> c = complement_indices(inputs, J);
  return t_J0_value(static_cast<int>(c.size()), beta_harmonic(inputs.smoothness, c), inputs.tau, inputs.tau1,
                    inputs.tau2);
}

EpsilonResult epsilon_n(const RateInputs& inputs, SubsetMask J, double t_J) {
  inputs.validate();
  if (inputs.grid.d_y() < 32 && (J >> inputs.grid.d_y()) != 0)
    throw DomainError("epsilon_n: subset refers to a coordinate beyond d_y");
  EpsilonResult out;
  out.J = J;
  out.t_J = t_J;
  double N_J = 1.0;
  for (int j = 0; j < inputs.grid.d_y(); ++j)
    if ((J >> j) & 1U) N_J *= inputs.grid.N(j);
  const double exponent = beta_harmonic(inputs, J).exponent();
  out.value = std::pow(N_J / inputs.n, exponent) * std::pow(std::log(inputs.n), t_J);
  out.n_eps_sq = inputs.n * out.value * out.value;
  out.t_threshold = t_J0(inputs, J) + std::max(0.0, (1.0 - inputs.tau1) / 2.0);
  out.admissible = t_J > out.t_threshold;
  return out;
}

EpsilonResult epsilon_n_min(const RateInputs& inputs, const std::function<double(SubsetMask)>& t_of_J) {
  inputs.validate();
  const int dy = inputs.grid.d_y();
  if (dy > kMaxEnumeratedDy) throw UnsupportedError("epsilon_n_min: d_y exceeds the enumeration limit of 20");
  EpsilonResult best;
  best.value = std::numeric_limits<double>::infinity();
  for (std::size_t mask = 0; mask < (std::size_t{1} << dy); ++mask) {
    const auto J = static_cast<SubsetMask>(mask);
    EpsilonResult r = epsilon_n(inputs, J, t_of_J(J));
    if (r.value < best.value || (r.value == best.value && tie_break_less(J, best.J))) best = r;
  }
  return best;
}

std::string subset_to_string(SubsetMask J, int d_y) {
  std::string s = "{";
  bool first = true;
  for (int j = 0; j < d_y; ++j) {
    if (!((J >> j) & 1U)) continue;
    if (!first) s += ",";
    s += std::to_string(j + 1);
    first = false;
  }
  return s + "}";
}

}  // namespace mixdc
