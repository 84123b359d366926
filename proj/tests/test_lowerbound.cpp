#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "mixdc/errors.hpp"
#include "mixdc/kernels.hpp"
#include "mixdc/lowerbound.hpp"

using namespace mixdc;
namespace k = mixdc::kernels;

namespace {

// Reference value of the bump integral, computed independently to 17 digits.
constexpr double kK0Integral = 0.44399381616807865;

RateInputs make_inputs(int d_y, int d_x, std::vector<int> N, std::vector<double> beta, double n) {
  RateInputs in;
  in.grid = GridSpec(d_y, d_x, std::move(N));
  in.smoothness.beta = std::move(beta);
  in.n = n;
  return in;
}

// Central difference of the (s-1)-th derivative, Richardson-extrapolated.
double fd_derivative(int s, double u) {
  auto D = [&](double h) { return (k::K0_derivative(s - 1, u + h) - k::K0_derivative(s - 1, u - h)) / (2 * h); };
  const double h = 1e-3;
  return (4.0 * D(h / 2) - D(h)) / 3.0;
}

}  // namespace

TEST_CASE("bump kernel values") {
  CHECK(k::K0(0.0) == doctest::Approx(std::exp(-1.0)).epsilon(1e-15));
  CHECK(k::K0(1.0) == 0.0);
  CHECK(k::K0(-1.0) == 0.0);
  CHECK(k::K0(1.5) == 0.0);
  CHECK(k::K0_integral() == doctest::Approx(kK0Integral).epsilon(1e-12));
  CHECK(k::K0_cumulative(0.0) == doctest::Approx(kK0Integral / 2).epsilon(1e-12));
  CHECK(k::K0_cumulative(-3.0) == 0.0);
  CHECK(k::K0_cumulative(3.0) == doctest::Approx(kK0Integral).epsilon(1e-12));
}

TEST_CASE("odd kernel g") {
  const double c0 = 0.37;
  CHECK(k::g(0.0, c0) == 0.0);
  CHECK(k::g(-0.25, c0) == doctest::Approx(c0 * std::exp(-1.0)).epsilon(1e-15));
  CHECK(k::g(0.25, c0) == doctest::Approx(-c0 * std::exp(-1.0)).epsilon(1e-15));
  CHECK(k::g(0.6, c0) == 0.0);
  CHECK(k::g_abs_integral(c0) == doctest::Approx(0.5 * c0 * kK0Integral).epsilon(1e-12));
  CHECK(k::g_abs_integral(1.0) == doctest::Approx(0.221997).epsilon(1e-6));
  const double total = integrate_adaptive([&](double u) { return k::g(u, c0); }, -0.5, 0.5, {1e-14, 1e-16, 40}).value;
  CHECK(std::abs(total) <= 1e-10);
  CHECK(std::abs(k::g_cumulative(0.5, c0)) <= 1e-14);
  CHECK(k::g_cumulative(0.0, c0) == doctest::Approx(c0 * kK0Integral / 4).epsilon(1e-12));
  CHECK(k::g_sup(c0) == doctest::Approx(c0 / std::exp(1.0)));
  for (double u = -0.49; u < 0.5; u += 0.07) CHECK(k::g(-u, c0) == doctest::Approx(-k::g(u, c0)));
}

TEST_CASE("bump derivatives agree with finite differences") {
  Rng rng(12);
  std::uniform_real_distribution<double> U(-0.9, 0.9);
  for (int t = 0; t < 100; ++t) {
    const double u = U(rng);
    for (int s = 1; s <= 4; ++s) {
      const double exact = k::K0_derivative(s, u);
      const double fd = fd_derivative(s, u);
      CHECK(std::abs(exact - fd) <= 1e-5 * std::max(std::abs(exact), 1e-3));
    }
  }
  CHECK(k::K0_derivative(1, 0.0) == 0.0);
  // K0''(0) = -2 e^{-1}.
  CHECK(k::K0_derivative(2, 0.0) == doctest::Approx(-2.0 * std::exp(-1.0)).epsilon(1e-14));
  CHECK(k::K0_derivative(3, 1.0) == 0.0);
  CHECK(std::isfinite(k::K0_derivative(8, 0.999999)));
  CHECK_THROWS_AS(k::K0_derivative(k::kMaxDerivative + 1, 0.0), DomainError);
}

TEST_CASE("schedule for one continuous coordinate") {
  RateInputs in = make_inputs(0, 1, {}, {1.0}, 1000);
  BandwidthSchedule s = build_schedule(in, gamma_n(in));
  CHECK(s.h[0] == doctest::Approx(0.1).epsilon(1e-14));
  CHECK(s.m[0] == 10);
  CHECK(s.m_bar == 10);
  CHECK(s.role[0] == CoordinateRole::Continuous);
}

TEST_CASE("schedule for smoothed and unsmoothed discrete coordinates") {
  RateInputs in = make_inputs(1, 1, {20}, {1.0, 1.0}, 1e4);
  RateReport r = gamma_n(in);
  CHECK(r.gamma_n == doctest::Approx(0.1).epsilon(1e-14));
  CHECK(r.j_star == 0);
  BandwidthSchedule s = build_schedule(in, r);
  CHECK(s.role[0] == CoordinateRole::SmoothedDiscrete);
  CHECK(s.R[0] == 2);
  CHECK(s.h[0] == doctest::Approx(0.2).epsilon(1e-15));
  CHECK(s.rho[0] > 1.0);
  CHECK(s.rho[0] <= 2.0 + 1e-12);
  CHECK(s.m[0] == 5);
  CHECK(s.m[1] == 10);
  CHECK(s.m_bar == 50);

  // Coarse discrete coordinate next to a rough continuous one: J* = {1}.
  RateInputs in2 = make_inputs(1, 1, {4}, {1.0, 0.5}, 1e4);
  RateReport r2 = gamma_n(in2);
  REQUIRE(r2.j_star == 1U);
  BandwidthSchedule s2 = build_schedule(in2, r2);
  CHECK(s2.role[0] == CoordinateRole::Unsmoothed);
  CHECK(s2.h[0] == 0.5);
  CHECK(s2.beta_star[0] == doctest::Approx(-std::log(r2.gamma_n) / std::log(4.0)));
  CHECK(s2.beta_star[0] >= 1.0);
}

TEST_CASE("bandwidth invariants over random configurations") {
  Rng rng(8);
  int checked = 0;
  for (int t = 0; t < 300; ++t) {
    const int dy = std::uniform_int_distribution<int>(1, 3)(rng);
    std::vector<int> N(static_cast<std::size_t>(dy));
    for (int& v : N) v = std::uniform_int_distribution<int>(2, 60)(rng);
    std::vector<double> beta(static_cast<std::size_t>(dy + 1));
    for (double& b : beta) b = std::uniform_real_distribution<double>(0.4, 2.5)(rng);
    RateInputs in = make_inputs(dy, 1, N, beta, std::floor(std::uniform_real_distribution<double>(100, 1e6)(rng)));
    BandwidthSchedule s;
    try {
      s = build_schedule(in, gamma_n(in));
    } catch (const UnsupportedError&) {
      continue;
    } catch (const ParametricRegimeError&) {
      continue;
    }
    ++checked;
    for (int i = 0; i < dy + 1; ++i) {
      const auto ui = static_cast<std::size_t>(i);
      CHECK(s.beta_star[ui] >= beta[ui] * (1 - 1e-12));
      CHECK(s.m[ui] * s.h[ui] <= 1.0 + 1e-12);
      if (s.role[ui] == CoordinateRole::SmoothedDiscrete) {
        const double half = s.h[ui] * N[ui] / 2.0;
        CHECK(half == doctest::Approx(std::round(half)).epsilon(1e-12));
        CHECK(s.rho[ui] > 1.0);
        CHECK(s.rho[ui] <= 2.0 + 1e-12);
      }
      if (s.role[ui] == CoordinateRole::Unsmoothed) CHECK(s.h[ui] == 2.0 / N[ui]);
    }
  }
  CHECK(checked > 100);
}

TEST_CASE("schedule errors") {
  RateInputs in = make_inputs(1, 0, {4}, {1.0}, 1e4);
  CHECK_THROWS_AS(build_schedule(in, gamma_n(in)), ParametricRegimeError);
  RateInputs one = make_inputs(1, 1, {1}, {1.0, 1.0}, 1e4);
  CHECK_THROWS_AS(build_schedule(one, gamma_n(one)), UnsupportedError);
  RateInputs many = make_inputs(0, 3, {}, {0.3, 0.3, 0.3}, 1e9);
  CHECK_THROWS_AS(build_schedule(many, gamma_n(many)), UnsupportedError);
}

TEST_CASE("codebooks reach the Varshamov-Gilbert size") {
  for (int bits : {8, 16, 24}) {
    Codebook cb = build_codebook(bits, 5);
    const auto vg = static_cast<std::uint64_t>(std::ceil(std::exp2(bits / 8.0) - 1e-9));
    CHECK(cb.M() >= vg);
    CHECK(cb.target_reached());
    CHECK(cb.min_distance() >= (bits + 7) / 8);
    for (int r = 0; r < bits; ++r) CHECK_FALSE(cb.bit(0, static_cast<std::uint64_t>(r)));
  }
  Codebook big = build_codebook(100, 9, {20, 10000});
  CHECK(big.M() == 20);
  CHECK(big.min_distance() >= 13);
}

TEST_CASE("codebook failure and hex layout") {
  CHECK_THROWS_AS(build_codebook(8, 1, {2, 0}), ConstructionFailed);
  CHECK_THROWS_AS(build_codebook(7, 1), DomainError);
  Codebook cb = build_codebook(10, 3);
  for (std::size_t j = 0; j < cb.size(); ++j) {
    const std::string hex = cb.hex(j);
    CHECK(hex.size() == 3);
    for (int r = 0; r < 10; ++r) {
      const int digit = std::stoi(std::string(1, hex[static_cast<std::size_t>(r / 4)]), nullptr, 16);
      CHECK(((digit >> (3 - r % 4)) & 1) == (cb.bit(j, static_cast<std::uint64_t>(r)) ? 1 : 0));
    }
  }
}

TEST_CASE("default c0") {
  CHECK(default_c0(1, 0) == doctest::Approx(std::pow(std::exp2(-8.0) * std::log(2.0), 0.5)));
  CHECK(default_c0(1, 0) == doctest::Approx(0.052035).epsilon(1e-5));
  CHECK(default_c0(2, 1) == doctest::Approx(0.161299).epsilon(1e-5));
}

TEST_CASE("hypothesis densities") {
  RateInputs in = make_inputs(0, 1, {}, {1.0}, 1000);
  HypothesisFamily fam = HypothesisFamily::build(in);
  CHECK(fam.schedule().m_bar == 10);
  CHECK(fam.min_density_bound() > 0.5);
  for (double z : {0.01, 0.33, 0.999}) {
    const double zz[] = {z};
    CHECK(fam.density(0, zz) == 1.0);
  }
  const double out[] = {1.2};
  CHECK(fam.density(1, out) == 0.0);
  for (std::size_t j = 0; j < fam.hypotheses(); ++j) {
    for (std::uint64_t r = 0; r < fam.schedule().m_bar; ++r) {
      const std::vector<double> c = fam.center(r);
      CHECK(fam.rectangle_of(c) == static_cast<std::int64_t>(r));
      CHECK(fam.density(j, c) == doctest::Approx(1.0).epsilon(1e-15));
    }
    const double total =
        integrate_adaptive([&](double z) { return fam.density(j, std::span<const double>(&z, 1)); }, 0.0, 1.0,
                           {1e-13, 1e-15, 40})
            .value;
    CHECK(total == doctest::Approx(1.0).epsilon(1e-10));
  }
  // Shared faces go to the lower rectangle.
  const double face[] = {0.2};
  CHECK(fam.rectangle_of(face) == 1);
}

TEST_CASE("bumps integrate to zero and have disjoint supports") {
  RateInputs in = make_inputs(1, 1, {20}, {1.0, 1.0}, 1e4);
  HypothesisFamily fam = HypothesisFamily::build(in);
  const auto& s = fam.schedule();
  for (std::uint64_t r = 0; r < s.m_bar; ++r) {
    const std::vector<double> c = fam.center(r);
    auto bump = [&](std::span<const double> z) {
      double v = fam.gamma_n();
      for (int i = 0; i < 2; ++i) v *= k::g((z[i] - c[i]) / s.h[i], fam.c0());
      return v;
    };
    std::vector<Interval> box{{c[0] - s.h[0] / 2, c[0] + s.h[0] / 2}, {c[1] - s.h[1] / 2, c[1] + s.h[1] / 2}};
    CHECK(std::abs(integrate_box(bump, box, {1e-12, 1e-16, 40}).value) <= 1e-10);
  }
  Rng rng(4);
  for (int t = 0; t < 2000; ++t) {
    const double z[] = {uniform_open(rng), uniform_open(rng)};
    int nonzero = 0;
    for (std::uint64_t r = 0; r < s.m_bar; ++r) {
      const std::vector<double> c = fam.center(r);
      const double v = k::g((z[0] - c[0]) / s.h[0], 1.0) * k::g((z[1] - c[1]) / s.h[1], 1.0);
      nonzero += v != 0.0 ? 1 : 0;
    }
    CHECK(nonzero <= 1);
  }
}

TEST_CASE("Monte Carlo mass of a hypothesis") {
  RateInputs in = make_inputs(1, 1, {20}, {1.0, 1.0}, 1e4);
  HypothesisFamily fam = HypothesisFamily::build(in);
  Rng rng(77);
  const int n = 1000000;
  double sum = 0.0, sum2 = 0.0;
  for (int t = 0; t < n; ++t) {
    const double z[] = {uniform_open(rng), uniform_open(rng)};
    const double v = fam.density(1, z);
    sum += v;
    sum2 += v * v;
  }
  const double mean = sum / n;
  const double se = std::sqrt((sum2 / n - mean * mean) / n);
  CHECK(std::abs(mean - 1.0) <= 3 * se);
}

TEST_CASE("binned hypothesis equals the cell integral") {
  RateInputs in = make_inputs(1, 1, {20}, {1.0, 1.0}, 1e4);
  HypothesisFamily fam = HypothesisFamily::build(in);
  for (std::size_t j : {std::size_t{0}, std::size_t{1}, std::size_t{2}}) {
    MixedDistribution exact = fam.binned(j);
    MixedDistribution numeric = bin(fam.latent(j), fam.grid(), CellQuadrature{{1e-12, 1e-15, 40}, 10.0});
    for (int l = 0; l < 20; ++l) {
      for (double x : {0.03, 0.27, 0.5, 0.81}) {
        const double xs[] = {x};
        CHECK(exact(GridPoint{{l}}, xs) == doctest::Approx(numeric(GridPoint{{l}}, xs)).epsilon(1e-9));
      }
    }
  }
}

TEST_CASE("closed-form total variation") {
  RateInputs in = make_inputs(0, 1, {}, {1.0}, 1000);
  HypothesisFamily fam = HypothesisFamily::build(in);
  CHECK(tv_closed_form(fam, 1, 1) == 0.0);
  const double unit = fam.gamma_n() * 0.1 * k::g_abs_integral(fam.c0());
  for (std::size_t j = 0; j < fam.hypotheses(); ++j) {
    for (std::size_t l = j + 1; l < fam.hypotheses(); ++l) {
      const double closed = tv_closed_form(fam, j, l);
      CHECK(closed == doctest::Approx(fam.codebook().hamming(j, l) * unit).epsilon(1e-12));
      const double numeric = tv_distance(fam.binned(j), fam.binned(l), hypothesis_quad(fam)).value;
      CHECK(numeric == doctest::Approx(closed).epsilon(1e-3));
    }
  }
}

TEST_CASE("KL bound") {
  RateInputs in = make_inputs(1, 1, {20}, {1.0, 1.0}, 1e4);
  HypothesisFamily fam = HypothesisFamily::build(in);
  KlCheck zero = kl_bound_check(fam, 0, hypothesis_quad(fam));
  CHECK(zero.kl == 0.0);
  for (std::size_t j = 1; j < std::min<std::size_t>(fam.hypotheses(), 4); ++j) {
    KlCheck c = kl_bound_check(fam, j, hypothesis_quad(fam));
    CHECK(c.kl > 0.0);
    CHECK(c.within_bound);
    CHECK(c.vg_condition);
    CHECK(c.bound == doctest::Approx(2 * 0.01 * std::pow(fam.c0(), 4)));
  }
}

TEST_CASE("Hölder check") {
  RateInputs in = make_inputs(0, 1, {}, {1.0}, 1000);
  HypothesisFamily fam = HypothesisFamily::build(in);
  const double z[] = {0.123};
  const int k0[] = {0};
  CHECK(fam.derivative(1, k0, z) - fam.derivative(1, k0, z) == 0.0);
  HolderReport rep = holder_check(fam, 1, 10000, 3);
  REQUIRE(rep.rows.size() == 1);
  CHECK(rep.rows[0].trials == 10000);
  CHECK(rep.rows[0].violations == 0);
  CHECK(rep.violations == 0);

  // Mixed derivatives of the family match finite differences.
  RateInputs in2 = make_inputs(0, 2, {}, {2.5, 2.5}, 1e4);
  HypothesisFamily fam2 = HypothesisFamily::build(in2);
  Rng rng(6);
  int compared = 0;
  for (int t = 0; t < 100; ++t) {
    const double p[] = {uniform_open(rng), uniform_open(rng)};
    const int k10[] = {1, 0};
    const int k00[] = {0, 0};
    const double h = 1e-6;
    const double a[] = {p[0] + h, p[1]};
    const double b[] = {p[0] - h, p[1]};
    const double exact = fam2.derivative(1, k10, p);
    const double fd = (fam2.derivative(1, k00, a) - fam2.derivative(1, k00, b)) / (2 * h);
    if (std::abs(exact) < 1e-3) continue;
    ++compared;
    CHECK(std::abs(exact - fd) <= 1e-5 * std::abs(exact));
  }
  CHECK(compared > 10);
}

TEST_CASE("Hölder exemption at beta = 2") {
  RateInputs in = make_inputs(0, 1, {}, {2.0}, 1e5);
  HypothesisFamily fam = HypothesisFamily::build(in);
  HolderReport rep = holder_check(fam, 1, 1000, 3);
  REQUIRE(rep.rows.size() == 2);
  CHECK(rep.rows[0].k == std::vector<int>{0});
  CHECK(rep.rows[0].checked.empty());
  CHECK(rep.rows[1].k == std::vector<int>{1});
  CHECK(rep.rows[1].exponent[0] == doctest::Approx(1.0));
}

TEST_CASE("sampling hypotheses") {
  RateInputs in = make_inputs(1, 1, {20}, {1.0, 1.0}, 1e4);
  HypothesisFamily fam = HypothesisFamily::build(in);
  const std::size_t n = 200000;
  HypothesisSample s0 = sample_hypothesis(fam, 0, n, 1);
  const double expected = 1.0 / (1.0 + fam.envelope_excess());
  const double se_acc = std::sqrt(expected * (1 - expected) / n);
  CHECK(std::abs(s0.acceptance_rate - expected) <= 4 * se_acc);

  HypothesisSample s1 = sample_hypothesis(fam, 1, n, 2);
  for (int i = 0; i < 2; ++i) {
    double mean = 0.0, sq = 0.0;
    for (const auto& z : s1.latent) {
      mean += z[static_cast<std::size_t>(i)];
      sq += z[static_cast<std::size_t>(i)] * z[static_cast<std::size_t>(i)];
    }
    mean /= n;
    const double se = std::sqrt((sq / n - mean * mean) / n);
    std::vector<Interval> box{{0.0, 1.0}, {0.0, 1.0}};
    const double exact =
        integrate_box([&](std::span<const double> z) { return z[static_cast<std::size_t>(i)] * fam.density(1, z); },
                      box, {1e-10, 1e-14, 40})
            .value;
    CHECK(std::abs(mean - exact) <= 3 * se);
  }
  // Binned frequencies against the exact cell probabilities.
  MixedDistribution p = fam.binned(1);
  TensorRule rule(std::vector<Interval>{{0.0, 1.0}}, 80, 8);
  std::vector<int> counts(20, 0);
  for (const auto& o : s1.observations) ++counts[static_cast<std::size_t>(o.y.levels[0])];
  for (int l = 0; l < 20; ++l) {
    double prob = 0.0;
    for (std::size_t q = 0; q < rule.size(); ++q) prob += rule.weight(q) * p(GridPoint{{l}}, rule.node(q));
    const double se = std::sqrt(prob * (1 - prob) / n);
    CHECK(std::abs(counts[static_cast<std::size_t>(l)] / static_cast<double>(n) - prob) <= 3 * se);
  }
}
