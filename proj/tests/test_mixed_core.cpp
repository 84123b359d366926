#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "mixdc/distances.hpp"
#include "mixdc/errors.hpp"
#include "mixdc/mixed_distribution.hpp"
#include "mixdc/normal.hpp"
#include "test_support.hpp"

using namespace mixdc;
using testsupport::normal_cdf;
using testsupport::random_mixture;

TEST_CASE("cells of a two-point grid") {
  GridSpec g(1, 0, {2});
  const double y0[] = {0.25};
  const double y1[] = {0.75};
  Cell c0 = cell_of(g, y0);
  Cell c1 = cell_of(g, y1);
  CHECK(c0.sides[0].lo == -kInf);
  CHECK(c0.sides[0].hi == 0.5);
  CHECK(c1.sides[0].lo == 0.5);
  CHECK(c1.sides[0].hi == kInf);
  const double bad[] = {0.5};
  CHECK_THROWS_AS(cell_of(g, bad), InvalidGridPoint);
  CHECK_THROWS_AS(cell_of(g, GridPoint{{2}}), InvalidGridPoint);
}

TEST_CASE("single-point grid covers the line") {
  GridSpec g(1, 0, {1});
  const double y[] = {0.5};
  Cell c = cell_of(g, y);
  CHECK(c.sides[0] == Interval{-kInf, kInf});
}

TEST_CASE("grid spec validation and parsing") {
  CHECK_THROWS_AS(GridSpec(0, 0, {}), ShapeError);
  CHECK_THROWS_AS(GridSpec(1, 0, {0}), DomainError);
  CHECK_THROWS_AS(GridSpec(2, 0, {3}), ShapeError);
  CHECK_THROWS_AS(GridSpec(3, 0, {1 << 20, 1 << 20, 2}), UnsupportedError);
  GridSpec g = GridSpec::parse("3,4;2");
  CHECK(g.d_y() == 2);
  CHECK(g.d_x() == 2);
  CHECK(g.N() == std::vector<int>{3, 4});
  CHECK(GridSpec::parse(g.to_string()) == g);
  CHECK(GridSpec::parse(";1") == GridSpec::continuous(1));
  CHECK(g.support_size() == 12);
  for (std::uint64_t k = 0; k < g.support_size(); ++k) CHECK(g.flat_index(g.point_at(k)) == k);
}

TEST_CASE("cells partition the line") {
  Rng rng(7);
  GridSpec g(3, 0, {1, 4, 7});
  std::uniform_real_distribution<double> u(-1.0, 2.0);
  for (int t = 0; t < 10000; ++t) {
    for (int j = 0; j < 3; ++j) {
      double v = u(rng);
      if (t % 10 == 0) v = std::round(v * g.N(j)) / g.N(j);  // exact boundaries
      int hits = 0;
      for (int k = 0; k < g.N(j); ++k) hits += g.cell_interval(j, k).contains(v) ? 1 : 0;
      CHECK(hits == 1);
      CHECK(g.cell_interval(j, g.level_of(j, v)).contains(v));
    }
  }
}

TEST_CASE("mixed density closed forms") {
  MixtureParams one{{1.0}, {{0.3}}, {0.7}};
  CHECK(mixture_mixed_density(GridSpec(1, 0, {1}), one, GridPoint{{0}}, {}) == doctest::Approx(1.0).epsilon(1e-15));
  MixtureParams half{{1.0}, {{0.5}}, {1.0}};
  CHECK(mixture_mixed_density(GridSpec(1, 0, {2}), half, GridPoint{{0}}, {}) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK_THROWS_AS(mixture_mixed_density(GridSpec(1, 1, {2}), half, GridPoint{{0}}, std::vector<double>{0.0}),
                  ShapeError);
}

TEST_CASE("mixed density matches quadrature over the latent coordinate") {
  GridSpec g(1, 1, {2});
  MixtureParams theta{{0.3, 0.7}, {{0.2, 0.0}, {0.8, 1.0}}, {0.3, 0.5}};
  const double x = 0.5;
  auto f = [&](double t) {
    const double z[] = {t, x};
    return mixture_latent_density(theta, z);
  };
  // (-inf, 0.5] truncated far out in the tail of both components.
  const double oracle = integrate_adaptive(f, -20.0, 0.5, {1e-13, 1e-16, 30}).value;
  const double xs[] = {x};
  CHECK(mixture_mixed_density(g, theta, GridPoint{{0}}, xs) == doctest::Approx(oracle).epsilon(1e-8));
}

TEST_CASE("analytic cell probabilities equal quadrature on random components") {
  Rng rng(11);
  for (int t = 0; t < 50; ++t) {
    GridSpec g(2, 0, {3, 5});
    MixtureParams theta = random_mixture(rng, 2);
    MixedDistribution analytic = bin(theta, g);
    MixedDistribution numeric = bin(latent_of(theta), g);
    for (std::uint64_t k = 0; k < g.support_size(); ++k) {
      const GridPoint y = g.point_at(k);
      const double a = analytic(y, {});
      const double b = numeric(y, {});
      CHECK(std::abs(a - b) <= 1e-8 * std::max(1.0, a));
    }
  }
}

TEST_CASE("binning a standard normal") {
  LatentDensity f;
  f.d = 1;
  f.density = [](std::span<const double> z) { return normal::pdf(z[0]); };
  f.sample = [](Rng& rng, std::span<double> z) { z[0] = standard_normal(rng); };
  MixedDistribution p = bin(f, GridSpec(1, 0, {2}));
  CHECK(p(GridPoint{{0}}, {}) == doctest::Approx(normal_cdf(0.5)).epsilon(1e-9));
  CHECK(normal_cdf(0.5) == doctest::Approx(0.6915).epsilon(1e-4));
  MixedDistribution q = bin(f, GridSpec(1, 0, {1}));
  CHECK(q(GridPoint{{0}}, {}) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("bin sampler frequencies agree with the evaluator") {
  GridSpec g(2, 1, {3, 2});
  MixtureParams theta{{0.4, 0.6}, {{0.1, 0.7, -1.0}, {0.8, 0.3, 1.0}}, {0.3, 0.4, 0.8}};
  MixedDistribution p = bin(theta, g);
  Rng rng(2024);
  const int draws = 100000;
  std::vector<int> counts(g.support_size(), 0);
  for (int t = 0; t < draws; ++t) {
    Observation o = p.sample(rng);
    REQUIRE(o.x.size() == 1);
    ++counts[g.flat_index(o.y)];
  }
  // Marginal cell probability from the analytic density integrated over x.
  DistanceQuad quad;
  quad.x_box = {Interval{-10.0, 10.0}};
  TensorRule rule(quad.x_box, 256, 8);
  for (std::uint64_t k = 0; k < g.support_size(); ++k) {
    double prob = 0.0;
    for (std::size_t i = 0; i < rule.size(); ++i) prob += rule.weight(i) * p(g.point_at(k), rule.node(i));
    const double se = std::sqrt(prob * (1 - prob) / draws);
    CHECK(std::abs(counts[k] / static_cast<double>(draws) - prob) <= 3 * se);
  }
}

TEST_CASE("tv between shifted normals") {
  GridSpec g = GridSpec::continuous(1);
  MixedDistribution p1 = bin(MixtureParams{{1.0}, {{0.0}}, {1.0}}, g);
  MixedDistribution p2 = bin(MixtureParams{{1.0}, {{1.0}}, {1.0}}, g);
  const double closed = 2.0 * (2.0 * normal_cdf(0.5) - 1.0);
  // The kink of |p1 - p2| at x = 1/2 limits the composite rule to ~1e-7.
  CHECK(tv_distance(p1, p2).value == doctest::Approx(closed).epsilon(1e-6));
  DistanceQuad half;
  half.convention = TvConvention::Half;
  CHECK(tv_distance(p1, p2, half).value == doctest::Approx(0.5 * closed).epsilon(1e-6));
  CHECK(tv_distance(p1, p1).value == 0.0);
  CHECK(hellinger_distance(p1, p1).value == 0.0);
  CHECK(kl_divergence(p1, p1).value == 0.0);
  // KL between unit-variance normals is half the squared mean gap.
  CHECK(kl_divergence(p1, p2).value == doctest::Approx(0.5).epsilon(1e-10));
  // Hellinger affinity of N(0,1), N(1,1) is exp(-1/8).
  CHECK(hellinger_distance(p1, p2).value == doctest::Approx(std::sqrt(2.0 - 2.0 * std::exp(-0.125))).epsilon(1e-10));
}

TEST_CASE("distance errors and sentinels") {
  MixedDistribution p1 = bin(MixtureParams{{1.0}, {{0.0}}, {1.0}}, GridSpec(1, 0, {2}));
  MixedDistribution p2 = bin(MixtureParams{{1.0}, {{0.0}}, {1.0}}, GridSpec(1, 0, {3}));
  CHECK_THROWS_AS(tv_distance(p1, p2), ShapeError);
  GridSpec g(1, 0, {2});
  MixedDistribution a = pmf_distribution(g, {0.5, 0.5});
  MixedDistribution b = pmf_distribution(g, {1.0, 0.0});
  DistanceReport kl = kl_divergence(a, b);
  CHECK(std::isinf(kl.value));
  CHECK(kl.clamp_events == 1);
  CHECK(tv_distance(a, b).value == doctest::Approx(1.0));
}

TEST_CASE("normalization of binned mixtures") {
  Rng rng(5);
  for (int t = 0; t < 20; ++t) {
    std::uniform_int_distribution<int> dim(0, 3);
    int d_y = dim(rng), d_x = dim(rng);
    if (d_y + d_x == 0) d_y = 1;
    if (d_y + d_x > 3) d_x = 3 - d_y;
    std::vector<int> N(static_cast<std::size_t>(d_y));
    for (int& v : N) v = std::uniform_int_distribution<int>(1, 5)(rng);
    GridSpec g(d_y, d_x, N);
    MixedDistribution p = bin(random_mixture(rng, g.d()), g);
    DistanceQuad quad;
    if (d_x == 3) {
      quad.x_box.assign(3, Interval{-6.0, 7.0});
      quad.panels = 8;
      quad.order = 16;
    } else if (d_x == 2) {
      quad.panels = 32;
    }
    CHECK(total_mass(p, quad) == doctest::Approx(1.0).epsilon(1e-6));
  }
}

TEST_CASE("binning contracts all three distances") {
  Rng rng(99);
  for (int t = 0; t < 6; ++t) {
    const int d_y = 1 + t % 2;
    const int d_x = t % 3 == 0 ? 0 : 1;
    GridSpec g(d_y, d_x, std::vector<int>(static_cast<std::size_t>(d_y), 3));
    MixtureParams a = random_mixture(rng, g.d());
    MixtureParams b = random_mixture(rng, g.d());
    DistanceQuad quad;
    quad.panels = 32;
    quad.cell.tol = {1e-9, 1e-12, 30};
    DistanceSet binned = mixed_distances(bin(a, g), bin(b, g), quad);
    DistanceSet latent = latent_distances(latent_of(a), latent_of(b), g, quad);
    CHECK(binned.tv <= latent.tv + 1e-6);
    CHECK(binned.hellinger <= latent.hellinger + 1e-6);
    CHECK(binned.kl <= latent.kl + 1e-6);
    CHECK(binned.hellinger * binned.hellinger <= binned.tv + 1e-12);
  }
}

TEST_CASE("cell mass ratio lies between latent density ratio extremes") {
  Rng rng(31);
  GridSpec g(1, 1, {4});
  for (int t = 0; t < 20; ++t) {
    MixtureParams a = random_mixture(rng, 2);
    MixtureParams b = random_mixture(rng, 2);
    MixedDistribution p1 = bin(a, g), p2 = bin(b, g);
    const double x[] = {std::uniform_real_distribution<double>(-0.5, 1.5)(rng)};
    for (int k = 0; k < 4; ++k) {
      GridPoint y{{k}};
      Interval side = g.cell_interval(0, k);
      side.lo = std::max(side.lo, -6.0);
      side.hi = std::min(side.hi, 7.0);
      double lo = kInf, hi = -kInf;
      for (int s = 0; s <= 4000; ++s) {
        const double z[] = {side.lo + side.width() * s / 4000.0, x[0]};
        const double r = mixture_latent_density(a, z) / mixture_latent_density(b, z);
        lo = std::min(lo, r);
        hi = std::max(hi, r);
      }
      const double ratio = p1(y, x) / p2(y, x);
      // The sampled extremes only approximate inf/sup over unbounded cells.
      if (g.cell_interval(0, k).bounded()) {
        CHECK(ratio >= lo * (1 - 1e-9));
        CHECK(ratio <= hi * (1 + 1e-9));
      }
    }
  }
}

TEST_CASE("mixture JSON round trip") {
  GridSpec g(1, 1, {4});
  MixtureParams theta{{0.1, 0.9}, {{0.1 / 3.0, -2.0}, {1.0 / 7.0, 1e-17}}, {0.3, 0.5}};
  const std::string text = mixture_to_json(g, theta);
  CHECK(text.rfind("{\"m\":2,\"weights\":", 0) == 0);
  MixtureDocument doc = mixture_from_json(text);
  CHECK(doc.grid == g);
  CHECK(doc.params.weights == theta.weights);
  CHECK(doc.params.means == theta.means);
  CHECK(doc.params.scales == theta.scales);
  CHECK_THROWS_AS(mixture_from_json("{"), ConfigError);
  CHECK_THROWS_AS(mixture_from_json(R"({"m":1,"weights":[0.5],"means":[[0]],"scales":[1],"d_y":0,"d_x":1,"N":[]})"),
                  DomainError);
}

TEST_CASE("mixture parameter validation") {
  CHECK_THROWS_AS((MixtureParams{{0.5, 0.4}, {{0.0}, {1.0}}, {1.0}}.validate()), DomainError);
  CHECK_THROWS_AS((MixtureParams{{1.0}, {{0.0}}, {0.0}}.validate()), DomainError);
  CHECK_THROWS_AS((MixtureParams{{1.0}, {{0.0, 1.0}}, {1.0}}.validate()), ShapeError);
}
