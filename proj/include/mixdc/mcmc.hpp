#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "mixdc/grid.hpp"
#include "mixdc/mixed_distribution.hpp"
#include "mixdc/mixture.hpp"
#include "mixdc/prior.hpp"

namespace mixdc {

/// Observations (y, x) on a grid.
struct Dataset {
  GridSpec grid;
  std::vector<Observation> rows;

  std::size_t size() const noexcept { return rows.size(); }
  /// Throws DataError naming the first bad row.
  void validate() const;
};

/// Sampler state. Components carry persistent ids; all component-level
/// randomness is keyed by id, so the sweep commutes with relabeling.
struct ChainState {
  MixtureParams theta;
  std::vector<std::uint64_t> ids;
  std::uint64_t next_id = 0;
  std::vector<std::vector<double>> latents;  // n x d_y, each inside its cell
  std::vector<int> alloc;                    // zero-based component index per row
  std::vector<double> log_step;              // random-walk step on log sigma_i
  std::vector<long> scale_accepts;
  std::vector<long> scale_proposals;
  long birth_proposals = 0, birth_accepts = 0;
  long death_proposals = 0, death_accepts = 0;
  long allocation_underflows = 0;
  std::uint64_t iteration = 0;

  int m() const noexcept { return theta.m(); }
};

struct McmcOptions {
  long iters = 2000;
  long burnin = 1000;
  long thin = 10;
  std::uint64_t seed = 1;
  int initial_m = 10;
  double target_accept = 0.44;
  double initial_log_step = std::log(0.1);
  /// Robbins-Monro adaptation of the sigma step during burn-in.
  bool adapt = true;
  /// Replace the scale prior by a flat density on sigma (likelihood-only audits).
  bool flat_scale_prior = false;
};

ChainState initial_state(const Dataset& data, const PriorConfig& prior, const McmcOptions& opts);

/// Individual conditional updates; each draws from streams keyed by
/// (seed, state.iteration, purpose, item).
void update_latents(ChainState& s, const Dataset& data, std::uint64_t seed);
void update_allocations(ChainState& s, const Dataset& data, std::uint64_t seed);
void update_weights(ChainState& s, const PriorConfig& prior, std::uint64_t seed);
void update_means(ChainState& s, const Dataset& data, const PriorConfig& prior, std::uint64_t seed);
void update_scales(ChainState& s, const Dataset& data, const PriorConfig& prior, const McmcOptions& opts,
                   bool adapting);
void update_m(ChainState& s, const Dataset& data, const PriorConfig& prior, std::uint64_t seed);

/// Full sweep in the order latents, allocations, weights, means, scales, m;
/// advances the iteration counter.
void sweep(ChainState& s, const Dataset& data, const PriorConfig& prior, const McmcOptions& opts, bool adapting);

/// log acceptance ratio of a birth from `weights` (m components, `empty`
/// of them without data) with new weight u and n data rows. The matching
/// death has the negated ratio.
double birth_log_ratio(const PriorConfig& prior, const std::vector<double>& weights, double u, std::size_t n,
                       int empty);

/// Normal posterior for one mean coordinate given the allocated data.
struct MeanPosterior {
  double mean = 0.0;
  double variance = 0.0;
};
MeanPosterior mean_posterior(double s_mu, double sigma, double sum, long count);

/// Per-row categorical allocation probabilities (normalized, in component order).
std::vector<double> allocation_probabilities(const ChainState& s, const Dataset& data, std::size_t row);

/// log prior + complete-data log likelihood of (latents, x, allocations).
double log_posterior(const ChainState& s, const Dataset& data, const PriorConfig& prior);

/// True when every latent bins to its observation's grid point.
bool latents_consistent(const ChainState& s, const Dataset& data);

struct PosteriorSample {
  GridSpec grid;
  std::vector<MixtureParams> draws;
  std::vector<double> log_posterior;  // at each retained draw
  std::vector<int> m_trace;           // every iteration
  std::vector<double> scale_acceptance;  // per coordinate, after burn-in
  double birth_acceptance = 0.0;
  double death_acceptance = 0.0;
  long allocation_underflows = 0;
};

PosteriorSample run_chain(const Dataset& data, const PriorConfig& prior, const McmcOptions& opts);

/// Posterior-mean mixed density: average of mixture_mixed_density over draws.
MixedDistribution posterior_predictive(const PosteriorSample& sample);

/// JSON lines, one MixtureParams document per draw.
std::string draws_to_jsonl(const PosteriorSample& sample);

}  // namespace mixdc
