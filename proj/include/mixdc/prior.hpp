#pragma once

#include <string>
#include <vector>

#include "mixdc/grid.hpp"
#include "mixdc/mixture.hpp"
#include "mixdc/random.hpp"

namespace mixdc {

/// Prior on (m, theta):
///   P(m = i) proportional to exp(-a10 i (log i)^tau1), i = 2..m_max;
///   alpha | m ~ Dirichlet(a/m, ..., a/m);
///   mu_{j,i} ~ N(0, s_mu^2) independently;
///   sigma_i ~ inverse-gamma(alpha_sigma, lambda_sigma) on sigma_i itself,
///   i.e. 1/sigma_i ~ Gamma(alpha_sigma, rate lambda_sigma).
struct PriorConfig {
  double a = 1.0;
  double a10 = 1.0;
  double tau1 = 1.0;
  double s_mu = 5.0;
  double alpha_sigma = 2.0;
  double lambda_sigma = 1.0;
  int m_max = 200;

  void validate() const;
};

std::string prior_to_json(const PriorConfig& config);
/// Missing keys keep their defaults; unknown keys are rejected.
PriorConfig prior_from_json(const std::string& text);

/// log P(m); -infinity outside {2, ..., m_max}.
double log_m_prior(const PriorConfig& config, int m);
/// P(m = i) for i = 0..m_max (zero below 2).
std::vector<double> m_prior_pmf(const PriorConfig& config);

double log_dirichlet_density(double a, const std::vector<double>& weights);
double log_mean_prior(const PriorConfig& config, double mu);
double log_scale_prior(const PriorConfig& config, double sigma);

/// Joint log density of (m, theta). Throws DomainError for invalid theta.
/// Weights below kWeightFloor are evaluated at the floor.
double log_prior(const PriorConfig& config, const MixtureParams& theta);

MixtureParams sample_prior(const PriorConfig& config, const GridSpec& grid, Rng& rng);
MixtureParams sample_prior(const PriorConfig& config, const GridSpec& grid, std::uint64_t seed);

/// Draws from the individual factors, shared with the sampler.
int sample_m(const PriorConfig& config, Rng& rng);
std::vector<double> sample_dirichlet(double concentration, int m, Rng& rng);
double sample_scale(const PriorConfig& config, Rng& rng);

/// Constants a_1..a_13 claimed for the tail conditions on the prior.
struct PriorConstants {
  double a1 = 0, a2 = 0, a3 = 0;  // P(sigma^-2 >= s) <= a1 exp(-a2 s^a3), large s
  double a4 = 0, a5 = 0;          // P(sigma^-2 < s) <= a4 s^a5, small s
  double a6 = 0, a7 = 0, a8 = 0, a9 = 0;  // P(s < sigma^-2 < s(1+t)) >= a6 s^a7 t^a8 exp(-a9 s^{1/2})
  double a11 = 0, a12 = 0, tau2 = 2;      // mean density >= a11 exp(-a12 |mu|^tau2)
  double a13 = 0, tau3 = 2;               // P(|mu| > u) <= exp(-a13 u^tau3), large u
};

/// Constants that hold for the configured inverse-gamma and normal priors.
PriorConstants default_constants(const PriorConfig& config);

struct AuditGrids {
  std::vector<double> s_large;  // for the upper tail of sigma^-2
  std::vector<double> s_small;  // for the lower tail
  std::vector<double> s;        // for the interval bound
  std::vector<double> t;        // in (0, 1)
  std::vector<double> mu;       // for the mean density bound
  std::vector<double> mu_large; // for the mean tail bound
};

AuditGrids default_audit_grids();

struct ConditionAudit {
  std::string name;
  /// Smallest log(allowed side / actual side) over the grid; >= 0 means satisfied.
  double worst_log_margin = 0.0;
  double worst_at_s = 0.0;
  double worst_at_t = 0.0;
  bool satisfied = false;
};

struct PriorAudit {
  std::vector<ConditionAudit> conditions;
  bool all_satisfied = false;
};

PriorAudit audit_conditions(const PriorConfig& config, const PriorConstants& claimed,
                            const AuditGrids& grids = default_audit_grids());

}  // namespace mixdc
