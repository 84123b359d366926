#include "mixdc/geweke.hpp"

#include <algorithm>
#include <boost/math/distributions/students_t.hpp>
#include <cmath>
#include <numeric>

#include "mixdc/errors.hpp"
#include "mixdc/mcmc.hpp"

namespace mixdc {

namespace {

std::vector<double> test_functions(const MixtureParams& th) {
  double mu = 0.0;
  for (const auto& row : th.means)
    for (double v : row) mu += v;
  mu /= static_cast<double>(th.m() * th.d());
  double ls = 0.0;
  for (double s : th.scales) ls += std::log(s);
  ls /= th.d();
  return {mu, ls, static_cast<double>(th.m())};
}

/// Draws allocations, latents and observations given theta.
void simulate_data(ChainState& s, Dataset& data, int n, Rng& rng) {
  const GridSpec& grid = data.grid;
  const MixtureParams& th = s.theta;
  data.rows.assign(static_cast<std::size_t>(n), Observation{});
  s.alloc.assign(static_cast<std::size_t>(n), 0);
  s.latents.assign(static_cast<std::size_t>(n), std::vector<double>(static_cast<std::size_t>(grid.d_y())));
  std::discrete_distribution<int> pick(th.weights.begin(), th.weights.end());
  std::vector<double> z(static_cast<std::size_t>(grid.d()));
  for (std::size_t r = 0; r < static_cast<std::size_t>(n); ++r) {
    const int j = pick(rng);
    s.alloc[r] = j;
    for (int i = 0; i < grid.d(); ++i)
      z[static_cast<std::size_t>(i)] =
          th.means[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)] + th.scales[static_cast<std::size_t>(i)] * standard_normal(rng);
    data.rows[r] = bin_sample(grid, z);
    std::copy(z.begin(), z.begin() + grid.d_y(), s.latents[r].begin());
  }
}

}  // namespace

double GewekeReport::min_p_value() const {
  double p = 1.0;
  for (const auto& s : stats) p = std::min(p, s.p_value);
  return p;
}

GewekeStatistic rank_compare(const std::vector<double>& iid, const std::vector<double>& chain, int batches) {
  const std::size_t a = iid.size(), b = chain.size();
  if (a < 2 || b < static_cast<std::size_t>(2 * batches) || batches < 2) throw DomainError("rank_compare: samples too small");
  std::vector<std::pair<double, std::size_t>> pooled;
  pooled.reserve(a + b);
  for (std::size_t k = 0; k < a; ++k) pooled.emplace_back(iid[k], k);
  for (std::size_t k = 0; k < b; ++k) pooled.emplace_back(chain[k], a + k);
  std::sort(pooled.begin(), pooled.end());
  std::vector<double> score(a + b);
  const double total = static_cast<double>(a + b);
  for (std::size_t lo = 0; lo < pooled.size();) {
    std::size_t hi = lo;
    while (hi < pooled.size() && pooled[hi].first == pooled[lo].first) ++hi;
    const double midrank = 0.5 * static_cast<double>(lo + hi + 1);  // 1-based average rank
    for (std::size_t k = lo; k < hi; ++k) score[pooled[k].second] = midrank / (total + 1.0);
    lo = hi;
  }
  auto mean_of = [](const double* p, std::size_t n) { return std::accumulate(p, p + n, 0.0) / static_cast<double>(n); };
  const double mean_a = mean_of(score.data(), a);
  const double mean_b = mean_of(score.data() + a, b);
  double var_a = 0.0;
  for (std::size_t k = 0; k < a; ++k) var_a += (score[k] - mean_a) * (score[k] - mean_a);
  var_a /= static_cast<double>(a - 1);
  const std::size_t len = b / static_cast<std::size_t>(batches);
  double var_batches = 0.0;
  for (int k = 0; k < batches; ++k) {
    const double m = mean_of(score.data() + a + static_cast<std::size_t>(k) * len, len);
    var_batches += (m - mean_b) * (m - mean_b);
  }
  var_batches /= batches - 1;
  const double se = std::sqrt(var_a / static_cast<double>(a) + var_batches / batches);

  GewekeStatistic st;
  st.mean_marginal = std::accumulate(iid.begin(), iid.end(), 0.0) / static_cast<double>(a);
  st.mean_successive = std::accumulate(chain.begin(), chain.end(), 0.0) / static_cast<double>(b);
  st.z = se > 0.0 ? (mean_b - mean_a) / se : 0.0;
  const boost::math::students_t t_law(batches - 1);
  st.p_value = 2.0 * boost::math::cdf(boost::math::complement(t_law, std::abs(st.z)));
  return st;
}

GewekeReport geweke_test(const GewekeOptions& opts) {
  opts.prior.validate();
  if (opts.rounds < 2L * opts.batches) throw ConfigError("geweke: need at least two rounds per batch");
  if (opts.sweeps_per_round < 1) throw ConfigError("geweke: sweeps_per_round must be positive");
  if (opts.n < 1) throw ConfigError("geweke: need at least one data row");
  const PriorConfig& sampler_prior = opts.sampler_prior ? *opts.sampler_prior : opts.prior;
  const int nf = 3;
  std::vector<std::vector<double>> marginal(nf), successive(nf);

  Rng prior_rng(stream_key(opts.seed, {1}));
  for (long k = 0; k < opts.rounds; ++k) {
    const auto g = test_functions(sample_prior(opts.prior, opts.grid, prior_rng));
    for (int f = 0; f < nf; ++f) marginal[static_cast<std::size_t>(f)].push_back(g[static_cast<std::size_t>(f)]);
  }

  Rng data_rng(stream_key(opts.seed, {2}));
  McmcOptions mo;
  mo.seed = stream_key(opts.seed, {3});
  mo.adapt = false;
  ChainState s;
  s.theta = sample_prior(opts.prior, opts.grid, data_rng);
  s.ids.resize(static_cast<std::size_t>(s.m()));
  std::iota(s.ids.begin(), s.ids.end(), std::uint64_t{0});
  s.next_id = s.ids.size();
  s.log_step.assign(static_cast<std::size_t>(opts.grid.d()), opts.log_step);
  s.scale_accepts.assign(s.log_step.size(), 0);
  s.scale_proposals.assign(s.log_step.size(), 0);
  Dataset data{opts.grid, {}};
  simulate_data(s, data, opts.n, data_rng);
  for (long k = 0; k < opts.rounds; ++k) {
    for (int k2 = 0; k2 < opts.sweeps_per_round; ++k2) sweep(s, data, sampler_prior, mo, false);
    simulate_data(s, data, opts.n, data_rng);
    const auto g = test_functions(s.theta);
    for (int f = 0; f < nf; ++f) successive[static_cast<std::size_t>(f)].push_back(g[static_cast<std::size_t>(f)]);
  }

  const char* names[] = {"mean of mu", "mean of log sigma", "m"};
  GewekeReport report;
  for (int f = 0; f < nf; ++f) {
    GewekeStatistic st = rank_compare(marginal[static_cast<std::size_t>(f)], successive[static_cast<std::size_t>(f)], opts.batches);
    st.name = names[f];
    report.stats.push_back(st);
  }
  return report;
}

}  // namespace mixdc
