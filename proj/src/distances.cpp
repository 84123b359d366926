#include "mixdc/distances.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mixdc/errors.hpp"

namespace mixdc {

namespace {

TensorRule make_rule(const GridSpec& grid, const DistanceQuad& quad) {
  std::vector<Interval> box = quad.x_box;
  if (box.empty()) box.assign(static_cast<std::size_t>(grid.d_x()), Interval{-10.0, 10.0});
  if (static_cast<int>(box.size()) != grid.d_x()) throw ShapeError("DistanceQuad: x_box dimension mismatch");
  return TensorRule(box, quad.panels, quad.order);
}

void check_same_grid(const MixedDistribution& p1, const MixedDistribution& p2) {
  if (!(p1.grid() == p2.grid())) throw ShapeError("distance: distributions live on different grids");
}

struct Accumulator {
  double l1 = 0.0;
  double hellinger_sq = 0.0;
  double kl = 0.0;
  double kl_mismatch_mass = 0.0;
  double mass1 = 0.0;
  double mass2 = 0.0;
  long clamps = 0;
};

void add_point(Accumulator& acc, double w, double a, double b, double floor) {
  a = std::max(a, 0.0);
  b = std::max(b, 0.0);
  acc.mass1 += w * a;
  acc.mass2 += w * b;
  acc.l1 += w * std::abs(a - b);
  const double diff = std::sqrt(a) - std::sqrt(b);
  acc.hellinger_sq += w * diff * diff;
  if (a > 0.0) {
    if (b < floor) {
      ++acc.clamps;
      acc.kl_mismatch_mass += w * a;
      b = floor;
    }
    acc.kl += w * a * (std::log(a) - std::log(b));
  }
}

DistanceSet finish(const Accumulator& acc, const DistanceQuad& quad) {
  DistanceSet out;
  out.tv = quad.convention == TvConvention::Half ? 0.5 * acc.l1 : acc.l1;
  out.hellinger = std::sqrt(acc.hellinger_sq);
  // Mass where the denominator vanished numerically means the KL is infinite.
  out.kl = acc.kl_mismatch_mass > 1e-12 ? std::numeric_limits<double>::infinity() : acc.kl;
  out.tail_mass_1 = 1.0 - acc.mass1;
  out.tail_mass_2 = 1.0 - acc.mass2;
  out.clamp_events = acc.clamps;
  return out;
}

}  // namespace

DistanceSet mixed_distances(const MixedDistribution& p1, const MixedDistribution& p2, const DistanceQuad& quad) {
  check_same_grid(p1, p2);
  const GridSpec& grid = p1.grid();
  const TensorRule rule = make_rule(grid, quad);
  Accumulator acc;
  for (std::uint64_t flat = 0; flat < grid.support_size(); ++flat) {
    const GridPoint y = grid.point_at(flat);
    for (std::size_t k = 0; k < rule.size(); ++k) {
      const auto x = rule.node(k);
      add_point(acc, rule.weight(k), p1(y, x), p2(y, x), quad.kl_floor);
    }
  }
  return finish(acc, quad);
}

DistanceReport tv_distance(const MixedDistribution& p1, const MixedDistribution& p2, const DistanceQuad& quad) {
  const DistanceSet s = mixed_distances(p1, p2, quad);
  return {s.tv, s.tail_mass_1, s.tail_mass_2, 0};
}

DistanceReport hellinger_distance(const MixedDistribution& p1, const MixedDistribution& p2,
                                  const DistanceQuad& quad) {
  const DistanceSet s = mixed_distances(p1, p2, quad);
  return {s.hellinger, s.tail_mass_1, s.tail_mass_2, 0};
}

DistanceReport kl_divergence(const MixedDistribution& p1, const MixedDistribution& p2, const DistanceQuad& quad) {
  const DistanceSet s = mixed_distances(p1, p2, quad);
  return {s.kl, s.tail_mass_1, s.tail_mass_2, s.clamp_events};
}

double total_mass(const MixedDistribution& p, const DistanceQuad& quad) {
  const GridSpec& grid = p.grid();
  const TensorRule rule = make_rule(grid, quad);
  double mass = 0.0;
  for (std::uint64_t flat = 0; flat < grid.support_size(); ++flat) {
    const GridPoint y = grid.point_at(flat);
    for (std::size_t k = 0; k < rule.size(); ++k) mass += rule.weight(k) * p(y, rule.node(k));
  }
  return mass;
}

DistanceSet latent_distances(const LatentDensity& f1, const LatentDensity& f2, const GridSpec& grid,
                             const DistanceQuad& quad) {
  if (f1.d != grid.d() || f2.d != grid.d()) throw ShapeError("latent_distances: dimension mismatch");
  const TensorRule rule = make_rule(grid, quad);
  const int dy = grid.d_y();
  const double floor = quad.kl_floor;

  // Box covering both supports on the discrete coordinates.
  std::vector<Interval> hull(static_cast<std::size_t>(dy));
  for (int j = 0; j < dy; ++j) {
    const Interval a = f1.support.empty() ? Interval{} : f1.support[static_cast<std::size_t>(j)];
    const Interval b = f2.support.empty() ? Interval{} : f2.support[static_cast<std::size_t>(j)];
    hull[static_cast<std::size_t>(j)] = {std::max(std::min(a.lo, b.lo), -quad.cell.tail_cutoff),
                                         std::min(std::max(a.hi, b.hi), quad.cell.tail_cutoff)};
  }

  Accumulator acc;
  std::vector<double> z(static_cast<std::size_t>(grid.d()));
  std::vector<Interval> box(static_cast<std::size_t>(dy));
  for (std::uint64_t flat = 0; flat < grid.support_size(); ++flat) {
    const GridPoint y = grid.point_at(flat);
    bool empty = false;
    for (int j = 0; j < dy; ++j) {
      Interval side = grid.cell_interval(j, y.levels[static_cast<std::size_t>(j)]);
      side.lo = std::max(side.lo, hull[static_cast<std::size_t>(j)].lo);
      side.hi = std::min(side.hi, hull[static_cast<std::size_t>(j)].hi);
      if (!(side.lo < side.hi)) empty = true;
      box[static_cast<std::size_t>(j)] = side;
    }
    if (empty) continue;
    for (std::size_t k = 0; k < rule.size(); ++k) {
      const auto x = rule.node(k);
      std::copy(x.begin(), x.end(), z.begin() + dy);
      auto eval = [&](std::span<const double> yt, double& a, double& b) {
        std::copy(yt.begin(), yt.end(), z.begin());
        a = std::max(f1.density(z), 0.0);
        b = std::max(f2.density(z), 0.0);
      };
      long clamps = 0;
      double mismatch = 0.0;
      const double l1 = integrate_box(
                            [&](std::span<const double> yt) {
                              double a, b;
                              eval(yt, a, b);
                              return std::abs(a - b);
                            },
                            box, quad.cell.tol)
                            .value;
      const double h2 = integrate_box(
                            [&](std::span<const double> yt) {
                              double a, b;
                              eval(yt, a, b);
                              const double diff = std::sqrt(a) - std::sqrt(b);
                              return diff * diff;
                            },
                            box, quad.cell.tol)
                            .value;
      const double kl = integrate_box(
                            [&](std::span<const double> yt) {
                              double a, b;
                              eval(yt, a, b);
                              if (a <= 0.0) return 0.0;
                              if (b < floor) {
                                ++clamps;
                                mismatch += a;
                                b = floor;
                              }
                              return a * (std::log(a) - std::log(b));
                            },
                            box, quad.cell.tol)
                            .value;
      const double mass1 = integrate_box(
                               [&](std::span<const double> yt) {
                                 double a, b;
                                 eval(yt, a, b);
                                 return a;
                               },
                               box, quad.cell.tol)
                               .value;
      const double mass2 = integrate_box(
                               [&](std::span<const double> yt) {
                                 double a, b;
                                 eval(yt, a, b);
                                 return b;
                               },
                               box, quad.cell.tol)
                               .value;
      const double w = rule.weight(k);
      acc.l1 += w * l1;
      acc.hellinger_sq += w * h2;
      acc.kl += w * kl;
      acc.mass1 += w * mass1;
      acc.mass2 += w * mass2;
      acc.clamps += clamps;
      if (mismatch > 0.0) acc.kl_mismatch_mass += w * mismatch;
    }
  }
  return finish(acc, quad);
}

}  // namespace mixdc
