#include "mixdc/mcmc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <numeric>

#include "mixdc/errors.hpp"
#include "mixdc/normal.hpp"
#include "mixdc/random.hpp"
#include "mixdc/truncated_normal.hpp"

namespace mixdc {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

enum Purpose : std::uint64_t { kLatent = 1, kAlloc, kWeight, kMean, kScale, kMove, kDeath, kInit };

SplitMix64 stream(std::uint64_t seed, std::uint64_t iter, Purpose p, std::uint64_t a = 0, std::uint64_t b = 0) {
  return SplitMix64(stream_key(seed, {iter, static_cast<std::uint64_t>(p), a, b}));
}

/// Augmented coordinate i of row r: latent for discrete coordinates, x otherwise.
double augmented(const ChainState& s, const Dataset& data, std::size_t r, int i) {
  const int dy = data.grid.d_y();
  return i < dy ? s.latents[r][static_cast<std::size_t>(i)] : data.rows[r].x[static_cast<std::size_t>(i - dy)];
}

/// Component positions sorted by id; sums taken in this order do not depend on labels.
std::vector<std::size_t> id_order(const ChainState& s) {
  std::vector<std::size_t> order(s.ids.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return s.ids[a] < s.ids[b]; });
  return order;
}

std::vector<double> weights_in_id_order(const ChainState& s) {
  std::vector<double> w;
  for (std::size_t j : id_order(s)) w.push_back(s.theta.weights[j]);
  return w;
}

std::vector<long> allocation_counts(const ChainState& s) {
  std::vector<long> counts(static_cast<std::size_t>(s.m()), 0);
  for (int z : s.alloc) ++counts[static_cast<std::size_t>(z)];
  return counts;
}

double component_log_score(const ChainState& s, const Dataset& data, std::size_t r, std::size_t j) {
  double q = 0.0;
  for (int i = 0; i < s.theta.d(); ++i) {
    const double u = (augmented(s, data, r, i) - s.theta.means[j][static_cast<std::size_t>(i)]) /
                     s.theta.scales[static_cast<std::size_t>(i)];
    q += u * u;
  }
  return std::log(s.theta.weights[j]) - 0.5 * q;
}

double cell_start(const GridSpec& grid, int j, int level) {
  const Interval c = grid.cell_interval(j, level);
  return c.bounded() ? 0.5 * (c.lo + c.hi) : grid.point_value(j, level);
}

}  // namespace

void Dataset::validate() const {
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const Observation& o = rows[r];
    const long row = static_cast<long>(r);
    if (static_cast<int>(o.y.levels.size()) != grid.d_y()) throw DataError("wrong number of discrete values", row);
    if (static_cast<int>(o.x.size()) != grid.d_x()) throw DataError("wrong number of continuous values", row);
    for (int j = 0; j < grid.d_y(); ++j) {
      const int level = o.y.levels[static_cast<std::size_t>(j)];
      if (level < 0 || level >= grid.N(j)) throw DataError("discrete value off the grid", row);
    }
    for (double v : o.x)
      if (!std::isfinite(v)) throw DataError("non-finite continuous value", row);
  }
}

ChainState initial_state(const Dataset& data, const PriorConfig& prior, const McmcOptions& opts) {
  prior.validate();
  const GridSpec& grid = data.grid;
  const int d = grid.d(), dy = grid.d_y();
  const std::size_t n = data.size();
  const int m = std::clamp(opts.initial_m, 2, prior.m_max);

  ChainState s;
  s.latents.assign(n, std::vector<double>(static_cast<std::size_t>(dy)));
  for (std::size_t r = 0; r < n; ++r)
    for (int j = 0; j < dy; ++j)
      s.latents[r][static_cast<std::size_t>(j)] = cell_start(grid, j, data.rows[r].y.levels[static_cast<std::size_t>(j)]);

  s.theta.scales.assign(static_cast<std::size_t>(d), 1.0);
  for (int i = 0; i < d && n >= 2; ++i) {
    double mean = 0.0, sq = 0.0;
    for (std::size_t r = 0; r < n; ++r) mean += augmented(s, data, r, i);
    mean /= static_cast<double>(n);
    for (std::size_t r = 0; r < n; ++r) sq += std::pow(augmented(s, data, r, i) - mean, 2);
    const double sd = std::sqrt(sq / static_cast<double>(n));
    if (sd > 0.0) s.theta.scales[static_cast<std::size_t>(i)] = sd;
  }

  s.theta.weights.assign(static_cast<std::size_t>(m), 1.0 / m);
  s.theta.means.assign(static_cast<std::size_t>(m), std::vector<double>(static_cast<std::size_t>(d), 0.0));
  SplitMix64 eng = stream(opts.seed, 0, kInit);
  if (n > 0) {
    // Partial Fisher-Yates over row indices: distinct rows while n >= m.
    std::vector<std::size_t> pick(n);
    std::iota(pick.begin(), pick.end(), std::size_t{0});
    for (int j = 0; j < m; ++j) {
      const std::size_t k = static_cast<std::size_t>(j) % n;
      if (static_cast<std::size_t>(j) < n) {
        const std::size_t swap_with = k + static_cast<std::size_t>(uniform_open(eng) * static_cast<double>(n - k));
        std::swap(pick[k], pick[std::min(swap_with, n - 1)]);
      }
      for (int i = 0; i < d; ++i)
        s.theta.means[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)] = augmented(s, data, pick[k], i);
    }
  } else {
    for (auto& mu : s.theta.means)
      for (double& v : mu) v = prior.s_mu * standard_normal(eng);
  }
  s.ids.resize(static_cast<std::size_t>(m));
  std::iota(s.ids.begin(), s.ids.end(), std::uint64_t{0});
  s.next_id = static_cast<std::uint64_t>(m);

  s.alloc.assign(n, 0);
  for (std::size_t r = 0; r < n; ++r) {
    double best = kNegInf;
    for (std::size_t j = 0; j < static_cast<std::size_t>(m); ++j) {
      const double score = component_log_score(s, data, r, j);
      if (score > best) {
        best = score;
        s.alloc[r] = static_cast<int>(j);
      }
    }
  }
  s.log_step.assign(static_cast<std::size_t>(d), opts.initial_log_step);
  s.scale_accepts.assign(static_cast<std::size_t>(d), 0);
  s.scale_proposals.assign(static_cast<std::size_t>(d), 0);
  return s;
}

void update_latents(ChainState& s, const Dataset& data, std::uint64_t seed) {
  const GridSpec& grid = data.grid;
  for (std::size_t r = 0; r < data.size(); ++r) {
    const auto& mu = s.theta.means[static_cast<std::size_t>(s.alloc[r])];
    for (int j = 0; j < grid.d_y(); ++j) {
      const auto jj = static_cast<std::size_t>(j);
      SplitMix64 eng = stream(seed, s.iteration, kLatent, r, jj);
      s.latents[r][jj] = truncated_normal(mu[jj], s.theta.scales[jj], grid.cell_interval(j, data.rows[r].y.levels[jj]), eng);
    }
  }
}

std::vector<double> allocation_probabilities(const ChainState& s, const Dataset& data, std::size_t row) {
  std::vector<double> lp(static_cast<std::size_t>(s.m()));
  double best = kNegInf;
  for (std::size_t j = 0; j < lp.size(); ++j) {
    lp[j] = component_log_score(s, data, row, j);
    best = std::max(best, lp[j]);
  }
  double total = 0.0;
  for (double& v : lp) {
    v = std::exp(v - best);
    total += v;
  }
  for (double& v : lp) v /= total;
  return lp;
}

void update_allocations(ChainState& s, const Dataset& data, std::uint64_t seed) {
  const std::size_t m = static_cast<std::size_t>(s.m());
  for (std::size_t r = 0; r < data.size(); ++r) {
    // Gumbel-max with one keyed uniform per (row, component id).
    double best = kNegInf;
    int choice = -1;
    for (std::size_t j = 0; j < m; ++j) {
      const double score = component_log_score(s, data, r, j);
      if (!std::isfinite(score)) continue;
      SplitMix64 eng = stream(seed, s.iteration, kAlloc, r, s.ids[j]);
      const double g = -std::log(-std::log(uniform_open(eng)));
      if (score + g > best) {
        best = score + g;
        choice = static_cast<int>(j);
      }
    }
    if (choice < 0) {
      ++s.allocation_underflows;
      double nearest = std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < m; ++j) {
        double q = 0.0;
        for (int i = 0; i < s.theta.d(); ++i)
          q += std::pow(augmented(s, data, r, i) - s.theta.means[j][static_cast<std::size_t>(i)], 2);
        if (q < nearest) {
          nearest = q;
          choice = static_cast<int>(j);
        }
      }
    }
    s.alloc[r] = choice;
  }
}

void update_weights(ChainState& s, const PriorConfig& prior, std::uint64_t seed) {
  const std::vector<long> counts = allocation_counts(s);
  const double conc = prior.a / s.m();
  std::vector<double> logs(counts.size());
  for (std::size_t j = 0; j < counts.size(); ++j) {
    SplitMix64 eng = stream(seed, s.iteration, kWeight, s.ids[j]);
    logs[j] = log_gamma_variate(eng, conc + static_cast<double>(counts[j]));
  }
  double top = kNegInf;
  for (double l : logs) top = std::max(top, l);
  double total = 0.0;
  for (std::size_t j : id_order(s)) total += std::exp(logs[j] - top);
  const double lse = top + std::log(total);
  for (std::size_t j = 0; j < logs.size(); ++j) s.theta.weights[j] = std::max(std::exp(logs[j] - lse), kWeightFloor);
}

MeanPosterior mean_posterior(double s_mu, double sigma, double sum, long count) {
  const double precision = 1.0 / (s_mu * s_mu) + static_cast<double>(count) / (sigma * sigma);
  return {sum / (sigma * sigma) / precision, 1.0 / precision};
}

void update_means(ChainState& s, const Dataset& data, const PriorConfig& prior, std::uint64_t seed) {
  const std::size_t m = static_cast<std::size_t>(s.m());
  const int d = s.theta.d();
  std::vector<std::vector<double>> sums(m, std::vector<double>(static_cast<std::size_t>(d), 0.0));
  std::vector<long> counts(m, 0);
  for (std::size_t r = 0; r < data.size(); ++r) {
    const auto j = static_cast<std::size_t>(s.alloc[r]);
    ++counts[j];
    for (int i = 0; i < d; ++i) sums[j][static_cast<std::size_t>(i)] += augmented(s, data, r, i);
  }
  for (std::size_t j = 0; j < m; ++j) {
    for (int i = 0; i < d; ++i) {
      const auto ii = static_cast<std::size_t>(i);
      const MeanPosterior post = mean_posterior(prior.s_mu, s.theta.scales[ii], sums[j][ii], counts[j]);
      SplitMix64 eng = stream(seed, s.iteration, kMean, s.ids[j], ii);
      s.theta.means[j][ii] = post.mean + std::sqrt(post.variance) * standard_normal(eng);
    }
  }
}

void update_scales(ChainState& s, const Dataset& data, const PriorConfig& prior, const McmcOptions& opts,
                   bool adapting) {
  const double n = static_cast<double>(data.size());
  for (int i = 0; i < s.theta.d(); ++i) {
    const auto ii = static_cast<std::size_t>(i);
    double ss = 0.0;
    for (std::size_t r = 0; r < data.size(); ++r) {
      const double diff = augmented(s, data, r, i) - s.theta.means[static_cast<std::size_t>(s.alloc[r])][ii];
      ss += diff * diff;
    }
    // Target in log sigma: likelihood x prior x sigma (Jacobian).
    auto log_target = [&](double log_sigma) {
      const double sigma = std::exp(log_sigma);
      double v = -n * log_sigma - ss / (2.0 * sigma * sigma) + log_sigma;
      if (!opts.flat_scale_prior) v += log_scale_prior(prior, sigma);
      return v;
    };
    SplitMix64 eng = stream(opts.seed, s.iteration, kScale, ii);
    const double current = std::log(s.theta.scales[ii]);
    const double proposal = current + std::exp(s.log_step[ii]) * standard_normal(eng);
    const double log_ratio = log_target(proposal) - log_target(current);
    const bool accept = std::log(uniform_open(eng)) < log_ratio;
    if (accept) s.theta.scales[ii] = std::exp(proposal);
    ++s.scale_proposals[ii];
    s.scale_accepts[ii] += accept;
    if (adapting) {
      const double gain = std::pow(static_cast<double>(s.iteration) + 1.0, -0.6);
      s.log_step[ii] += gain * ((accept ? 1.0 : 0.0) - opts.target_accept);
    }
  }
}

double birth_log_ratio(const PriorConfig& prior, const std::vector<double>& weights, double u, std::size_t n,
                       int empty) {
  const int m = static_cast<int>(weights.size());
  const double prior_m = log_m_prior(prior, m + 1) - log_m_prior(prior, m);
  if (!std::isfinite(prior_m)) return prior_m;
  std::vector<double> grown(weights.size() + 1);
  for (std::size_t j = 0; j < weights.size(); ++j) grown[j] = weights[j] * (1.0 - u);
  grown.back() = u;
  double lr = prior_m;
  lr += log_dirichlet_density(prior.a, grown) - log_dirichlet_density(prior.a, weights);
  lr += static_cast<double>(n) * std::log1p(-u);
  // Jacobian (1-u)^{m-1} over the Beta(1, m) proposal density m (1-u)^{m-1}.
  lr -= std::log(static_cast<double>(m));
  lr += std::log(static_cast<double>(m + 1)) - std::log(static_cast<double>(empty + 1));
  return lr;
}

void update_m(ChainState& s, const Dataset& data, const PriorConfig& prior, std::uint64_t seed) {
  SplitMix64 eng = stream(seed, s.iteration, kMove);
  const std::vector<long> counts = allocation_counts(s);
  const int empty = static_cast<int>(std::count(counts.begin(), counts.end(), 0L));
  const int m = s.m();
  if (uniform_open(eng) < 0.5) {
    ++s.birth_proposals;
    if (m >= prior.m_max) return;
    const double u = 1.0 - std::pow(uniform_open(eng), 1.0 / m);
    std::vector<double> mu(static_cast<std::size_t>(s.theta.d()));
    for (double& v : mu) v = prior.s_mu * standard_normal(eng);
    const double lr = birth_log_ratio(prior, weights_in_id_order(s), u, data.size(), empty);
    if (!(std::log(uniform_open(eng)) < lr)) return;
    for (double& w : s.theta.weights) w = std::max(w * (1.0 - u), kWeightFloor);
    s.theta.weights.push_back(std::max(u, kWeightFloor));
    s.theta.means.push_back(std::move(mu));
    s.ids.push_back(s.next_id++);
    ++s.birth_accepts;
    return;
  }
  ++s.death_proposals;
  if (empty == 0 || m <= 2) return;
  // Uniform choice among empty components via the smallest keyed uniform.
  std::size_t victim = 0;
  double smallest = 2.0;
  for (std::size_t j = 0; j < counts.size(); ++j) {
    if (counts[j] != 0) continue;
    SplitMix64 pick = stream(seed, s.iteration, kDeath, s.ids[j]);
    const double v = uniform_open(pick);
    if (v < smallest) {
      smallest = v;
      victim = j;
    }
  }
  const double u = s.theta.weights[victim];
  std::vector<double> reduced;
  for (std::size_t j : id_order(s))
    if (j != victim) reduced.push_back(s.theta.weights[j] / (1.0 - u));
  const double lr = -birth_log_ratio(prior, reduced, u, data.size(), empty - 1);
  if (!(std::log(uniform_open(eng)) < lr)) return;
  s.theta.weights.erase(s.theta.weights.begin() + static_cast<std::ptrdiff_t>(victim));
  s.theta.means.erase(s.theta.means.begin() + static_cast<std::ptrdiff_t>(victim));
  s.ids.erase(s.ids.begin() + static_cast<std::ptrdiff_t>(victim));
  for (double& w : s.theta.weights) w = std::max(w / (1.0 - u), kWeightFloor);
  for (int& z : s.alloc)
    if (z > static_cast<int>(victim)) --z;
  ++s.death_accepts;
}

void sweep(ChainState& s, const Dataset& data, const PriorConfig& prior, const McmcOptions& opts, bool adapting) {
  update_latents(s, data, opts.seed);
  update_allocations(s, data, opts.seed);
  update_weights(s, prior, opts.seed);
  update_means(s, data, prior, opts.seed);
  update_scales(s, data, prior, opts, adapting);
  update_m(s, data, prior, opts.seed);
  ++s.iteration;
}

double log_posterior(const ChainState& s, const Dataset& data, const PriorConfig& prior) {
  double lp = log_prior(prior, s.theta);
  double log_norm = 0.0;
  for (double sigma : s.theta.scales) log_norm -= std::log(sigma) + normal::kLogSqrt2Pi;
  for (std::size_t r = 0; r < data.size(); ++r)
    lp += component_log_score(s, data, r, static_cast<std::size_t>(s.alloc[r])) + log_norm;
  return lp;
}

bool latents_consistent(const ChainState& s, const Dataset& data) {
  for (std::size_t r = 0; r < data.size(); ++r)
    if (!(bin_latent(data.grid, s.latents[r]) == data.rows[r].y)) return false;
  return true;
}

PosteriorSample run_chain(const Dataset& data, const PriorConfig& prior, const McmcOptions& opts) {
  if (data.size() == 0) throw ConfigError("run_chain: dataset is empty");
  if (opts.iters < 0 || opts.burnin < 0 || opts.burnin > opts.iters)
    throw ConfigError("run_chain: need 0 <= burnin <= iters");
  if (opts.thin < 1) throw ConfigError("run_chain: thin must be at least 1");
  data.validate();
  ChainState s = initial_state(data, prior, opts);
  PosteriorSample out;
  out.grid = data.grid;
  auto reset_counters = [&] {
    std::fill(s.scale_accepts.begin(), s.scale_accepts.end(), 0);
    std::fill(s.scale_proposals.begin(), s.scale_proposals.end(), 0);
    s.birth_proposals = s.birth_accepts = s.death_proposals = s.death_accepts = 0;
  };
  for (long t = 0; t < opts.iters; ++t) {
    sweep(s, data, prior, opts, opts.adapt && t < opts.burnin);
#ifndef NDEBUG
    if (!latents_consistent(s, data)) throw Error("run_chain: latent left its cell");
#endif
    if (t + 1 == opts.burnin) reset_counters();
    out.m_trace.push_back(s.m());
    if (t >= opts.burnin && (t - opts.burnin + 1) % opts.thin == 0) {
      out.draws.push_back(s.theta);
      out.log_posterior.push_back(log_posterior(s, data, prior));
    }
  }
  for (std::size_t i = 0; i < s.scale_accepts.size(); ++i)
    out.scale_acceptance.push_back(s.scale_proposals[i] ? double(s.scale_accepts[i]) / double(s.scale_proposals[i]) : 0.0);
  out.birth_acceptance = s.birth_proposals ? double(s.birth_accepts) / double(s.birth_proposals) : 0.0;
  out.death_acceptance = s.death_proposals ? double(s.death_accepts) / double(s.death_proposals) : 0.0;
  out.allocation_underflows = s.allocation_underflows;
  return out;
}

MixedDistribution posterior_predictive(const PosteriorSample& sample) {
  if (sample.draws.empty()) throw DomainError("posterior_predictive: no draws");
  auto draws = std::make_shared<const std::vector<MixtureParams>>(sample.draws);
  const GridSpec grid = sample.grid;
  const double inv = 1.0 / static_cast<double>(draws->size());
  auto mass = [draws, grid, inv](const GridPoint& y, std::span<const double> x) {
    double acc = 0.0;
    for (const auto& th : *draws) acc += mixture_mixed_density(grid, th, y, x);
    return acc * inv;
  };
  LatentDensity latent;
  latent.d = grid.d();
  latent.density = [draws, inv](std::span<const double> z) {
    double acc = 0.0;
    for (const auto& th : *draws) acc += mixture_latent_density(th, z);
    return acc * inv;
  };
  latent.sample = [draws](Rng& rng, std::span<double> z) {
    std::uniform_int_distribution<std::size_t> pick(0, draws->size() - 1);
    latent_of((*draws)[pick(rng)]).sample(rng, z);
  };
  latent.support = effective_box(draws->front());
  for (const auto& th : *draws) {
    const auto box = effective_box(th);
    for (std::size_t i = 0; i < box.size(); ++i) {
      latent.support[i].lo = std::min(latent.support[i].lo, box[i].lo);
      latent.support[i].hi = std::max(latent.support[i].hi, box[i].hi);
    }
  }
  auto sampler = [draw = latent.sample, grid](Rng& rng) {
    std::vector<double> z(static_cast<std::size_t>(grid.d()));
    draw(rng, z);
    return bin_sample(grid, z);
  };
  return MixedDistribution(grid, mass, sampler, std::move(latent));
}

std::string draws_to_jsonl(const PosteriorSample& sample) {
  std::string out;
  for (const auto& th : sample.draws) out += mixture_to_json(sample.grid, th) + "\n";
  return out;
}

}  // namespace mixdc
