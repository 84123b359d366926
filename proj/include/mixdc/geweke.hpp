#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mixdc/grid.hpp"
#include "mixdc/prior.hpp"

namespace mixdc {

/// Joint-distribution check of the sampler: draws of theta from the prior
/// (marginal-conditional) against a chain alternating one sweep with a
/// fresh simulation of the data given theta (successive-conditional).
struct GewekeOptions {
  GridSpec grid = GridSpec(1, 1, {3});
  PriorConfig prior;
  /// Prior used inside the sweep; differs from `prior` only to show that a
  /// mismatched sampler is detected.
  std::optional<PriorConfig> sampler_prior;
  long rounds = 5000;
  int n = 20;
  std::uint64_t seed = 1;
  double log_step = 0.0;  // fixed sigma random-walk step (log scale)
  /// Sweeps between data refreshes; thins the successive-conditional chain.
  int sweeps_per_round = 5;
  int batches = 20;
};

struct GewekeStatistic {
  std::string name;
  double mean_marginal = 0.0;
  double mean_successive = 0.0;
  double z = 0.0;
  double p_value = 1.0;
};

struct GewekeReport {
  std::vector<GewekeStatistic> stats;
  double min_p_value() const;
};

GewekeReport geweke_test(const GewekeOptions& opts);

/// Two-sample comparison on pooled mid-ranks. The first sample is iid; the
/// second is a Markov chain whose variance is estimated by batch means, so
/// the p-value uses a Student t law with batches - 1 degrees of freedom.
GewekeStatistic rank_compare(const std::vector<double>& iid, const std::vector<double>& chain, int batches);

}  // namespace mixdc
