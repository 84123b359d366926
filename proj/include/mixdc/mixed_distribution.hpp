#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "mixdc/grid.hpp"
#include "mixdc/mixture.hpp"
#include "mixdc/quadrature.hpp"
#include "mixdc/random.hpp"

namespace mixdc {

/// One draw (y, x): grid levels for the discrete part, reals for the rest.
struct Observation {
  GridPoint y;
  std::vector<double> x;
};

/// Density on R^d with a sampler. `support` is a box holding the mass
/// (sides may be infinite).
struct LatentDensity {
  int d = 0;
  std::function<double(std::span<const double>)> density;
  std::function<void(Rng&, std::span<double>)> sample;
  std::vector<Interval> support;
};

LatentDensity latent_of(const MixtureParams& theta);

/// Controls the nested cell quadrature used when no closed form exists.
struct CellQuadrature {
  AdaptiveTolerance tol{1e-10, 1e-13, 30};
  /// Infinite cell sides that the latent support does not bound are cut at +-tail_cutoff.
  double tail_cutoff = 10.0;
};

/// Distribution on Y x R^{d_x} given by an evaluable mass-density p(y, x),
/// a sampler, and (optionally) the latent density it was binned from.
/// Immutable and cheap to copy.
class MixedDistribution {
 public:
  using MassDensity = std::function<double(const GridPoint&, std::span<const double>)>;
  using Sampler = std::function<Observation(Rng&)>;

  MixedDistribution(GridSpec grid, MassDensity mass, Sampler sampler, std::optional<LatentDensity> latent = {});

  const GridSpec& grid() const noexcept { return state_->grid; }

  /// p(y, x).
  double operator()(const GridPoint& y, std::span<const double> x) const { return state_->mass(y, x); }

  Observation sample(Rng& rng) const;

  bool has_latent() const noexcept { return state_->latent.has_value(); }
  /// Throws UnsupportedError when there is no latent representation.
  const LatentDensity& latent() const;

 private:
  struct State {
    GridSpec grid;
    MassDensity mass;
    Sampler sampler;
    std::optional<LatentDensity> latent;
  };
  std::shared_ptr<const State> state_;
};

/// Binning with the analytic normal-CDF cell formula.
MixedDistribution bin(const MixtureParams& theta, const GridSpec& grid);

/// Binning by nested adaptive quadrature over each cell; evaluation throws
/// ToleranceNotMet when the cell integral does not converge.
MixedDistribution bin(const LatentDensity& latent, const GridSpec& grid, const CellQuadrature& quad = {});

/// Draws a latent point and maps its discrete coordinates to their grid point.
Observation bin_sample(const GridSpec& grid, std::span<const double> z);

/// Probability mass function on a purely discrete grid (point masses).
MixedDistribution pmf_distribution(const GridSpec& grid, std::vector<double> pmf);

}  // namespace mixdc
