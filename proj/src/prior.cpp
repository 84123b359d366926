#include "mixdc/prior.hpp"

#include <boost/math/special_functions/erf.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <cmath>
#include <limits>
#include <json.hpp>
#include <numbers>

#include "mixdc/errors.hpp"
#include "mixdc/normal.hpp"

namespace mixdc {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double log_sum_exp(const std::vector<double>& v) {
  double best = kNegInf;
  for (double x : v) best = std::max(best, x);
  if (!std::isfinite(best)) return best;
  double acc = 0.0;
  for (double x : v) acc += std::exp(x - best);
  return best + std::log(acc);
}

double m_kernel(const PriorConfig& c, int i) {
  const double li = std::log(static_cast<double>(i));
  return -c.a10 * i * (c.tau1 == 0.0 ? 1.0 : std::pow(li, c.tau1));
}

double log_m_normalizer(const PriorConfig& c) {
  std::vector<double> terms;
  terms.reserve(static_cast<std::size_t>(c.m_max));
  for (int i = 2; i <= c.m_max; ++i) terms.push_back(m_kernel(c, i));
  return log_sum_exp(terms);
}

}  // namespace

void PriorConfig::validate() const {
  if (!(a > 0.0) || !std::isfinite(a)) throw DomainError("PriorConfig: a must be positive");
  if (!(a10 > 0.0)) throw DomainError("PriorConfig: a10 must be positive");
  if (!(tau1 >= 0.0)) throw DomainError("PriorConfig: tau1 must be nonnegative");
  if (!(s_mu > 0.0)) throw DomainError("PriorConfig: s_mu must be positive");
  if (!(alpha_sigma > 0.0)) throw DomainError("PriorConfig: alpha_sigma must be positive");
  if (!(lambda_sigma > 0.0)) throw DomainError("PriorConfig: lambda_sigma must be positive");
  if (m_max < 2) throw DomainError("PriorConfig: m_max must be at least 2");
}

std::string prior_to_json(const PriorConfig& c) {
  nlohmann::ordered_json j;
  j["a"] = c.a;
  j["a10"] = c.a10;
  j["tau1"] = c.tau1;
  j["s_mu"] = c.s_mu;
  j["alpha_sigma"] = c.alpha_sigma;
  j["lambda_sigma"] = c.lambda_sigma;
  j["m_max"] = c.m_max;
  return j.dump();
}

PriorConfig prior_from_json(const std::string& text) {
  PriorConfig c;
  try {
    const nlohmann::json j = nlohmann::json::parse(text);
    if (!j.is_object()) throw ConfigError("prior JSON: expected an object");
    for (const auto& [key, value] : j.items()) {
      if (key == "a") c.a = value.get<double>();
      else if (key == "a10") c.a10 = value.get<double>();
      else if (key == "tau1") c.tau1 = value.get<double>();
      else if (key == "s_mu") c.s_mu = value.get<double>();
      else if (key == "alpha_sigma") c.alpha_sigma = value.get<double>();
      else if (key == "lambda_sigma") c.lambda_sigma = value.get<double>();
      else if (key == "m_max") c.m_max = value.get<int>();
      else throw ConfigError("prior JSON: unknown key \"" + key + "\"");
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("prior JSON: ") + e.what());
  }
  c.validate();
  return c;
}

double log_m_prior(const PriorConfig& c, int m) {
  if (m < 2 || m > c.m_max) return kNegInf;
  return m_kernel(c, m) - log_m_normalizer(c);
}

std::vector<double> m_prior_pmf(const PriorConfig& c) {
  c.validate();
  const double log_z = log_m_normalizer(c);
  std::vector<double> pmf(static_cast<std::size_t>(c.m_max) + 1, 0.0);
  for (int i = 2; i <= c.m_max; ++i) pmf[static_cast<std::size_t>(i)] = std::exp(m_kernel(c, i) - log_z);
  return pmf;
}

double log_dirichlet_density(double a, const std::vector<double>& weights) {
  const double m = static_cast<double>(weights.size());
  const double conc = a / m;
  double out = std::lgamma(a) - m * std::lgamma(conc);
  for (double w : weights) out += (conc - 1.0) * std::log(std::max(w, kWeightFloor));
  return out;
}

double log_mean_prior(const PriorConfig& c, double mu) { return normal::log_pdf(mu / c.s_mu) - std::log(c.s_mu); }

double log_scale_prior(const PriorConfig& c, double sigma) {
  if (!(sigma > 0.0)) return kNegInf;
  const double al = c.alpha_sigma, la = c.lambda_sigma;
  return al * std::log(la) - std::lgamma(al) - (al + 1.0) * std::log(sigma) - la / sigma;
}

double log_prior(const PriorConfig& c, const MixtureParams& theta) {
  c.validate();
  theta.validate();
  double out = log_m_prior(c, theta.m());
  if (!std::isfinite(out)) return out;
  out += log_dirichlet_density(c.a, theta.weights);
  for (const auto& mu : theta.means)
    for (double v : mu) out += log_mean_prior(c, v);
  for (double s : theta.scales) out += log_scale_prior(c, s);
  return out;
}

int sample_m(const PriorConfig& c, Rng& rng) {
  const std::vector<double> pmf = m_prior_pmf(c);
  const double u = uniform_open(rng);
  double acc = 0.0;
  for (int i = 2; i <= c.m_max; ++i) {
    acc += pmf[static_cast<std::size_t>(i)];
    if (u < acc) return i;
  }
  return c.m_max;
}

std::vector<double> sample_dirichlet(double concentration, int m, Rng& rng) {
  std::vector<double> logs(static_cast<std::size_t>(m));
  for (double& l : logs) l = log_gamma_variate(rng, concentration);
  const double total = log_sum_exp(logs);
  std::vector<double> w(logs.size());
  for (std::size_t j = 0; j < w.size(); ++j) w[j] = std::exp(logs[j] - total);
  normalize_weights(w);
  return w;
}

double sample_scale(const PriorConfig& c, Rng& rng) {
  std::gamma_distribution<double> precision_root(c.alpha_sigma, 1.0 / c.lambda_sigma);
  double t = 0.0;
  while (!(t > 0.0)) t = precision_root(rng);
  return 1.0 / t;
}

MixtureParams sample_prior(const PriorConfig& c, const GridSpec& grid, Rng& rng) {
  c.validate();
  MixtureParams theta;
  const int m = sample_m(c, rng);
  theta.weights = sample_dirichlet(c.a / m, m, rng);
  theta.means.assign(static_cast<std::size_t>(m), std::vector<double>(static_cast<std::size_t>(grid.d())));
  for (auto& mu : theta.means)
    for (double& v : mu) v = c.s_mu * standard_normal(rng);
  theta.scales.resize(static_cast<std::size_t>(grid.d()));
  for (double& s : theta.scales) s = sample_scale(c, rng);
  return theta;
}

MixtureParams sample_prior(const PriorConfig& c, const GridSpec& grid, std::uint64_t seed) {
  Rng rng(seed);
  return sample_prior(c, grid, rng);
}

PriorConstants default_constants(const PriorConfig& c) {
  c.validate();
  const double al = c.alpha_sigma, la = c.lambda_sigma;
  PriorConstants k;
  // P(sigma^-2 >= s) = Q(al, la sqrt s); a1 = sup_x Q(al, x) e^{x/2}, scanned numerically.
  double sup = 0.0;
  for (int i = 0; i <= 20000; ++i) {
    const double x = i * 0.01;
    sup = std::max(sup, boost::math::gamma_q(al, x) * std::exp(0.5 * x));
  }
  k.a1 = 1.01 * sup;
  k.a2 = la / 2.0;
  k.a3 = 0.5;
  // P(al, x) <= x^al / Gamma(al + 1).
  k.a4 = std::pow(la, al) / std::tgamma(al + 1.0);
  k.a5 = al / 2.0;
  // Interval length >= (sqrt2 - 1) t sqrt s; density of 1/sigma bounded below on it.
  k.a6 = (std::numbers::sqrt2 - 1.0) * std::pow(la, al) / std::tgamma(al) * (al < 1.0 ? std::pow(2.0, (al - 1.0) / 2.0) : 1.0);
  k.a7 = al / 2.0;
  k.a8 = 1.0;
  k.a9 = std::numbers::sqrt2 * la;
  k.a11 = 0.99 * normal::kInvSqrt2Pi / c.s_mu;
  k.a12 = 1.0 / (2.0 * c.s_mu * c.s_mu);
  k.tau2 = 2.0;
  k.a13 = 1.0 / (4.0 * c.s_mu * c.s_mu);
  k.tau3 = 2.0;
  return k;
}

AuditGrids default_audit_grids() {
  AuditGrids g;
  for (int i = 0; i <= 40; ++i) g.s_large.push_back(std::pow(10.0, 1.0 + i * 0.1));        // 10 .. 1e5
  for (int i = 0; i <= 40; ++i) g.s_small.push_back(std::pow(10.0, -8.0 + i * 0.175));     // 1e-8 .. 0.1
  for (int i = 0; i <= 30; ++i) g.s.push_back(std::pow(10.0, -1.0 + i * 0.1));            // 0.1 .. 100
  g.t = {0.1, 0.5, 0.9};
  for (int i = 0; i <= 40; ++i) g.mu.push_back(-20.0 + i);
  for (int i = 0; i <= 30; ++i) g.mu_large.push_back(5.0 + i);
  return g;
}

namespace {

void track(ConditionAudit& a, double margin, double s, double t, bool& first) {
  if (first || margin < a.worst_log_margin) {
    a.worst_log_margin = margin;
    a.worst_at_s = s;
    a.worst_at_t = t;
    first = false;
  }
}

double safe_log(double v) { return v > 0.0 ? std::log(v) : kNegInf; }

}  // namespace

PriorAudit audit_conditions(const PriorConfig& c, const PriorConstants& k, const AuditGrids& g) {
  c.validate();
  const double al = c.alpha_sigma, la = c.lambda_sigma;
  constexpr double kSlack = 1e-12;
  PriorAudit out;
  bool first = true;

  ConditionAudit upper{"sigma^-2 upper tail"};
  for (double s : g.s_large) {
    const double lhs = boost::math::gamma_q(al, la * std::sqrt(s));
    const double rhs_log = std::log(k.a1) - k.a2 * std::pow(s, k.a3);
    track(upper, rhs_log - safe_log(lhs), s, 0.0, first);
  }
  first = true;
  ConditionAudit lower{"sigma^-2 lower tail"};
  for (double s : g.s_small) {
    const double lhs = boost::math::gamma_p(al, la * std::sqrt(s));
    const double rhs_log = std::log(k.a4) + k.a5 * std::log(s);
    track(lower, rhs_log - safe_log(lhs), s, 0.0, first);
  }
  first = true;
  ConditionAudit interval{"sigma^-2 interval mass"};
  for (double s : g.s) {
    for (double t : g.t) {
      const double x1 = la * std::sqrt(s), x2 = la * std::sqrt(s * (1.0 + t));
      const double mass = x1 > al ? boost::math::gamma_q(al, x1) - boost::math::gamma_q(al, x2)
                                  : boost::math::gamma_p(al, x2) - boost::math::gamma_p(al, x1);
      const double rhs_log = std::log(k.a6) + k.a7 * std::log(s) + k.a8 * std::log(t) - k.a9 * std::sqrt(s);
      track(interval, safe_log(mass) - rhs_log, s, t, first);
    }
  }
  first = true;
  ConditionAudit density{"mean density lower bound"};
  for (double mu : g.mu) {
    const double rhs_log = std::log(k.a11) - k.a12 * std::pow(std::abs(mu), k.tau2);
    track(density, log_mean_prior(c, mu) - rhs_log, mu, 0.0, first);
  }
  first = true;
  ConditionAudit tail{"mean tail bound"};
  for (double u : g.mu_large) {
    const double lhs = boost::math::erfc(u / (c.s_mu * std::numbers::sqrt2));
    track(tail, -k.a13 * std::pow(u, k.tau3) - safe_log(lhs), u, 0.0, first);
  }
  out.conditions = {upper, lower, interval, density, tail};
  out.all_satisfied = true;
  for (auto& a : out.conditions) {
    a.satisfied = a.worst_log_margin >= -kSlack;
    out.all_satisfied = out.all_satisfied && a.satisfied;
  }
  return out;
}

}  // namespace mixdc
