#pragma once

#include <vector>

#include "mixdc/mixed_distribution.hpp"

namespace mixdc {

/// Total variation is reported as the unnormalized L1 distance
/// sum_y int |p1 - p2| dx, with range [0, 2]. `Half` gives the
/// probabilists' convention (range [0, 1]).
enum class TvConvention { L1, Half };

/// Quadrature over the continuous coordinates: a tensor-product composite
/// Gauss-Legendre rule on `x_box` (default [-10, 10] per coordinate).
/// Mass outside the box is reported as tail mass.
struct DistanceQuad {
  std::vector<Interval> x_box;
  int panels = 512;
  int order = 8;
  TvConvention convention = TvConvention::L1;
  /// Inner cell integration used for latent distances.
  CellQuadrature cell{};
  /// Below this, the KL denominator is clamped and the event counted.
  double kl_floor = 1e-300;
};

struct DistanceReport {
  double value = 0.0;
  /// 1 - (mass of p inside the x box), per input.
  double tail_mass_1 = 0.0;
  double tail_mass_2 = 0.0;
  long clamp_events = 0;
};

/// Nonnegative by construction except for the KL, which may carry
/// quadrature error of either sign. KL is +infinity when p1 puts mass where
/// p2 is numerically zero.
struct DistanceSet {
  double tv = 0.0;
  double hellinger = 0.0;  // sqrt(sum int (sqrt p1 - sqrt p2)^2)
  double kl = 0.0;
  double tail_mass_1 = 0.0;
  double tail_mass_2 = 0.0;
  long clamp_events = 0;
};

DistanceReport tv_distance(const MixedDistribution& p1, const MixedDistribution& p2, const DistanceQuad& quad = {});
DistanceReport hellinger_distance(const MixedDistribution& p1, const MixedDistribution& p2,
                                  const DistanceQuad& quad = {});
DistanceReport kl_divergence(const MixedDistribution& p1, const MixedDistribution& p2, const DistanceQuad& quad = {});

/// All three distances from one pass over the quadrature nodes.
DistanceSet mixed_distances(const MixedDistribution& p1, const MixedDistribution& p2, const DistanceQuad& quad = {});

/// Distances between the latent densities on R^d, integrated cell by cell
/// with the same x nodes as mixed_distances, so that for every (y, x) node
/// the latent integrand dominates the binned one.
DistanceSet latent_distances(const LatentDensity& f1, const LatentDensity& f2, const GridSpec& grid,
                             const DistanceQuad& quad = {});

/// Sum over y of the x-rule applied to p; equals 1 - tail mass for a normalized p.
double total_mass(const MixedDistribution& p, const DistanceQuad& quad = {});

}  // namespace mixdc
