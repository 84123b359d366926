#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mixdc/distances.hpp"
#include "mixdc/mixed_distribution.hpp"
#include "mixdc/rates.hpp"

namespace mixdc {

enum class CoordinateRole {
  Continuous,        // h = Gamma^{1/beta}
  SmoothedDiscrete,  // discrete, outside J*: h = 2R/N
  Unsmoothed,        // discrete, in J*: h = 2/N
};

struct BandwidthSchedule {
  std::vector<CoordinateRole> role;
  std::vector<double> h;
  std::vector<double> beta_star;
  std::vector<int> R;       // 0 unless SmoothedDiscrete
  std::vector<double> rho;  // NaN unless SmoothedDiscrete
  std::vector<int> m;       // floor(1/h)
  std::uint64_t m_bar = 0;
};

inline constexpr std::uint64_t kMaxRectangles = std::uint64_t{1} << 20;

/// Throws ParametricRegimeError when m_bar < 8, UnsupportedError when
/// m_bar > 2^20 or an unsmoothed coordinate has a single grid point, and
/// DomainError if a bandwidth invariant fails.
BandwidthSchedule build_schedule(const RateInputs& inputs, const RateReport& rates);

struct CodebookOptions {
  /// Number of codewords besides w^0; 0 means ceil(2^{m/8}) capped at 256.
  std::uint64_t target = 0;
  std::uint64_t budget_factor = 10000;  // attempts = budget_factor * target
};

/// Binary codewords w^0 = 0, w^1, ..., w^M of length `bits`.
class Codebook {
 public:
  int bits() const noexcept { return bits_; }
  std::size_t size() const noexcept { return words_.size(); }  // M + 1
  std::uint64_t M() const noexcept { return words_.size() - 1; }
  int threshold() const noexcept { return threshold_; }
  std::uint64_t target() const noexcept { return target_; }
  bool target_reached() const noexcept { return M() >= target_; }
  std::uint64_t attempts() const noexcept { return attempts_; }

  bool bit(std::size_t j, std::uint64_t r) const { return (words_.at(j)[r / 64] >> (r % 64)) & 1U; }
  int hamming(std::size_t j, std::size_t l) const;
  int min_distance() const;

  /// Bit r = 0, 1, ... read left to right, four bits per hex digit, first bit
  /// in the digit's high position.
  std::string hex(std::size_t j) const;

  friend Codebook build_codebook(int bits, std::uint64_t seed, const CodebookOptions& opts);

 private:
  int bits_ = 0;
  int threshold_ = 0;
  std::uint64_t target_ = 0;
  std::uint64_t attempts_ = 0;
  std::vector<std::vector<std::uint64_t>> words_;
};

/// Randomized greedy search for codewords at pairwise Hamming distance at
/// least ceil(bits/8). Throws ConstructionFailed when fewer than two
/// codewords besides w^0 are found within the attempt budget.
Codebook build_codebook(int bits, std::uint64_t seed, const CodebookOptions& opts = {});

/// Default c0 = [2^{-(d + d_y + 7)} log 2]^{1/(2d)}.
double default_c0(int d, int d_y);

struct LowerBoundOptions {
  std::optional<double> c0;
  std::uint64_t seed = 1;
  CodebookOptions codebook;
};

/// q_j(z) = 1_{[0,1]^d}(z) + sum_r w^j_r Gamma prod_i g((z_i - c^r_i) / h_i).
class HypothesisFamily {
 public:
  static HypothesisFamily build(const RateInputs& inputs, const LowerBoundOptions& opts = {});

  const RateInputs& inputs() const noexcept { return inputs_; }
  const RateReport& rates() const noexcept { return rates_; }
  const BandwidthSchedule& schedule() const noexcept { return schedule_; }
  const Codebook& codebook() const noexcept { return codebook_; }
  const GridSpec& grid() const noexcept { return inputs_.grid; }
  double gamma_n() const noexcept { return rates_.gamma_n; }
  double c0() const noexcept { return c0_; }
  int d() const noexcept { return inputs_.grid.d(); }
  std::size_t hypotheses() const noexcept { return codebook_.size(); }

  /// Lower bound 1 - Gamma (sup|g|)^d on q_j over [0,1]^d; positive by construction.
  double min_density_bound() const noexcept;
  /// Bump amplitude Gamma (sup|g|)^d.
  double envelope_excess() const noexcept;

  /// Rectangle index holding z, or -1 outside the union of rectangles.
  /// Points on a shared face go to the lower index.
  std::int64_t rectangle_of(std::span<const double> z) const;
  std::vector<double> center(std::uint64_t r) const;

  double density(std::size_t j, std::span<const double> z) const;
  /// Mixed partial D^k q_j(z) away from the cube boundary (the indicator
  /// contributes nothing there).
  double derivative(std::size_t j, std::span<const int> k, std::span<const double> z) const;

  LatentDensity latent(std::size_t j) const;
  /// Binned hypothesis, evaluated exactly through the cumulative of g.
  MixedDistribution binned(std::size_t j) const;

 private:
  RateInputs inputs_;
  RateReport rates_;
  BandwidthSchedule schedule_;
  Codebook codebook_;
  double c0_ = 0.0;
};

double tv_closed_form(const HypothesisFamily& fam, std::size_t j, std::size_t l);

struct KlCheck {
  double kl = 0.0;
  double bound = 0.0;         // 2 Gamma^2 c0^{2d}
  double n_kl = 0.0;
  double vg_threshold = 0.0;  // m_bar log 2 / 64
  bool within_bound = false;
  bool vg_condition = false;
  long clamp_events = 0;
};

/// Binned KL(q_j, q_0) by quadrature on x in [0,1]^{d_x}.
KlCheck kl_bound_check(const HypothesisFamily& fam, std::size_t j, const DistanceQuad& quad = {});

/// Quadrature for hypothesis distances: the unit box in x, with
/// `panels_per_rectangle` panels per bump width along each continuous axis.
DistanceQuad hypothesis_quad(const HypothesisFamily& fam, int panels_per_rectangle = 8, int order = 8);

struct HolderRow {
  std::vector<int> k;
  std::vector<int> checked;  // coordinates with a Hölder condition for this k
  std::vector<double> exponent;  // per checked coordinate
  long trials = 0;
  long violations = 0;
  double max_excess = 0.0;  // max of lhs - rhs over the trials
};

struct HolderReport {
  std::vector<HolderRow> rows;
  long violations = 0;
  /// Orders above the recurrence limit that were not checked.
  long skipped_orders = 0;
};

/// Random single-coordinate perturbations inside [0,1]^d for every
/// derivative order k with sum k_i / beta*_i < 1.
HolderReport holder_check(const HypothesisFamily& fam, std::size_t j, long trials, std::uint64_t seed,
                          double tol = 1e-9);

struct HypothesisSample {
  std::vector<std::vector<double>> latent;
  std::vector<Observation> observations;
  double acceptance_rate = 0.0;
};

/// Rejection sampling from q_j with a uniform proposal on [0,1]^d.
HypothesisSample sample_hypothesis(const HypothesisFamily& fam, std::size_t j, std::size_t n, std::uint64_t seed);

}  // namespace mixdc
