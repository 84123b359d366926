#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mixdc/distances.hpp"
#include "mixdc/lowerbound.hpp"
#include "mixdc/mcmc.hpp"
#include "mixdc/prior.hpp"
#include "mixdc/rates.hpp"

namespace mixdc {

enum class DgpKind { Mixture, Hypothesis, Beta };

/// Data-generating process.
///   Mixture:    binned mixture of normals with fixed parameters.
///   Hypothesis: hypothesis q_index of the lower-bound family built for each (n, N).
///   Beta:       product of Beta(a_i, b_i) latent densities on [0, 1]^d, binned.
struct DgpSpec {
  DgpKind kind = DgpKind::Mixture;
  MixtureParams mixture;
  std::size_t hypothesis_index = 1;
  LowerBoundOptions hypothesis;
  std::vector<std::pair<double, double>> beta_shapes;
};

/// One instantiated DGP on a concrete grid.
struct DgpInstance {
  MixedDistribution truth;
  std::function<Dataset(std::size_t n, std::uint64_t seed)> simulate;
  /// Box for the continuous coordinates holding essentially all the mass.
  std::vector<Interval> x_box;
};

DgpInstance instantiate(const DgpSpec& dgp, const GridSpec& grid, double n,
                        const std::optional<SmoothnessSpec>& smoothness);

/// Discrete resolution per schedule entry.
struct NSpec {
  enum class Kind { Fixed, SqrtN, Const } kind = Kind::Const;
  std::vector<int> fixed;
};

struct ScheduleEntry {
  long n = 0;
  NSpec N;
};

struct ExperimentConfig {
  GridSpec base_grid;
  DgpSpec dgp;
  std::optional<SmoothnessSpec> smoothness;
  std::vector<ScheduleEntry> schedule;
  int replications = 1;
  McmcOptions mcmc;
  PriorConfig prior;
  DistanceQuad quad;
  bool quad_box_given = false;
  bool frequency_baseline = false;
  std::uint64_t seed = 1;
  int threads = 1;
  std::string out_dir = ".";

  void validate() const;
  GridSpec grid_for(const ScheduleEntry& e) const;
};

/// Parses the JSON config; throws ConfigError on any schema problem.
ExperimentConfig parse_experiment_config(const std::string& text);
ExperimentConfig load_experiment_config(const std::string& path);

struct ResultRow {
  std::size_t entry = 0;
  long n = 0;
  std::vector<int> N;
  int rep = 0;
  bool ok = false;
  std::string error;
  double tv = 0.0;            // L1 convention, range [0, 2]
  std::optional<double> tv_frequency;
  double seconds = 0.0;
  double m_posterior_mean = 0.0;
  std::optional<double> gamma_n;
  /// Gamma_n = C n^{theory_exponent} at this row's grid; negative, comparable to the fitted slope.
  std::optional<double> theory_exponent;
};

struct ScheduleSummary {
  long n = 0;
  std::vector<int> N;
  double mean_tv = 0.0;
  double sd_tv = 0.0;
  int count = 0;
  std::optional<double> gamma_n;
};

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
};

struct RateFitResult {
  std::vector<ResultRow> rows;
  std::vector<ScheduleSummary> table;
  std::optional<LineFit> fit;          // log mean TV on log n
  std::optional<double> theory_exponent;  // slope of log Gamma_n on log n
  long failures = 0;

  bool too_many_failures() const noexcept { return failures * 10 > static_cast<long>(rows.size()); }
};

/// Ordinary least squares of y on x; empty with fewer than two distinct x.
std::optional<LineFit> ols(const std::vector<double>& x, const std::vector<double>& y);

using ProgressFn = std::function<void(const ResultRow&)>;

/// Runs every (schedule entry, replication) job on a pool of `threads`
/// workers; results come back in schedule order.
RateFitResult run_experiment(const ExperimentConfig& config, const ProgressFn& progress = {});

/// Fit one dataset and compare the posterior mean with the truth.
struct FitOutcome {
  PosteriorSample sample;
  double tv = 0.0;
  double m_posterior_mean = 0.0;
};
FitOutcome fit_and_score(const Dataset& data, const MixedDistribution& truth, const PriorConfig& prior,
                         const McmcOptions& mcmc, const DistanceQuad& quad);

std::string results_csv(const RateFitResult& result);
std::string summary_json(const RateFitResult& result);

/// Empirical cell frequencies of a purely discrete dataset as point masses.
/// Throws UnsupportedError when the grid has continuous coordinates.
MixedDistribution frequency_baseline(const Dataset& data);
/// Cell frequencies in flat-index order (any d_x).
std::vector<double> frequency_pmf(const Dataset& data);

}  // namespace mixdc
