#pragma once

#include <span>
#include <string>
#include <vector>

#include "mixdc/grid.hpp"

namespace mixdc {

/// Finite mixture of diagonal normals with scales shared across components:
///   f(z) = sum_j weights[j] * prod_i phi((z_i - means[j][i]) / scales[i]) / scales[i].
struct MixtureParams {
  std::vector<double> weights;
  std::vector<std::vector<double>> means;  // m rows of length d
  std::vector<double> scales;              // length d

  int m() const noexcept { return static_cast<int>(weights.size()); }
  int d() const noexcept { return static_cast<int>(scales.size()); }

  /// Throws ShapeError / DomainError unless the invariants hold
  /// (simplex weights within 1e-12, positive scales, consistent shapes).
  void validate() const;
  void validate(int d) const;
};

/// Smallest weight kept after normalization; Dirichlet draws with tiny
/// concentration underflow otherwise and the prior density would be infinite.
inline constexpr double kWeightFloor = 1e-300;

/// Rescales to sum one and lifts underflowed entries to kWeightFloor.
void normalize_weights(std::vector<double>& weights);

double mixture_latent_density(const MixtureParams& theta, std::span<const double> z);
double mixture_latent_log_density(const MixtureParams& theta, std::span<const double> z);

/// p(y, x | theta) = integral over A_y of the mixture: exact normal CDF
/// differences for the discrete coordinates, normal densities for the rest.
double mixture_mixed_density(const GridSpec& grid, const MixtureParams& theta, const GridPoint& y,
                             std::span<const double> x);

/// Box [min_j mu_ji - k sigma_i, max_j mu_ji + k sigma_i] holding all but a
/// negligible fraction of the mass (k = 12 leaves < 1e-32 per coordinate).
std::vector<Interval> effective_box(const MixtureParams& theta, double n_sigma = 12.0);

/// Mixture parameters together with the grid they are defined on. JSON form:
///   {"m":int,"weights":[...],"means":[[...]],"scales":[...],"d_y":int,"d_x":int,"N":[...]}
struct MixtureDocument {
  GridSpec grid;
  MixtureParams params;
};

std::string mixture_to_json(const GridSpec& grid, const MixtureParams& theta);
MixtureDocument mixture_from_json(const std::string& text);

}  // namespace mixdc
