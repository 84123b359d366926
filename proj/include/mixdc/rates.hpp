#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "mixdc/grid.hpp"

namespace mixdc {

/// Anisotropic Hölder orders beta_1..beta_d (discrete coordinates first)
/// and the envelope constant L.
struct SmoothnessSpec {
  std::vector<double> beta;
  double L = 1.0;

  void validate(int d) const;
};

struct RateInputs {
  GridSpec grid;
  SmoothnessSpec smoothness;
  double n = 0.0;
  double tau = 1.0;   // tail exponent of the data-generating density
  double tau1 = 1.0;  // prior on m
  double tau2 = 2.0;  // prior on the means

  void validate() const;
};

/// Bit j set means discrete coordinate j (zero-based) belongs to J. The
/// complement J^c always contains every continuous coordinate.
using SubsetMask = std::uint32_t;

inline constexpr int kMaxEnumeratedDy = 20;

/// beta_{J^c} = [sum_{i in J^c} 1/beta_i]^{-1}; infinite when J^c is empty.
struct HarmonicBeta {
  bool infinite = false;
  double value = 0.0;  // meaningful only when finite

  /// beta / (2 beta + 1), exactly 1/2 in the infinite case.
  double exponent() const noexcept { return infinite ? 0.5 : value / (2.0 * value + 1.0); }
};

HarmonicBeta beta_harmonic(const SmoothnessSpec& smoothness, std::span<const int> complement);
HarmonicBeta beta_harmonic(const RateInputs& inputs, SubsetMask J);

/// Indices (zero-based, over all d coordinates) of J^c.
std::vector<int> complement_indices(const RateInputs& inputs, SubsetMask J);

struct SubsetRow {
  SubsetMask J = 0;
  double N_J = 1.0;
  HarmonicBeta beta_Jc;
  double exponent = 0.5;
  double value = 0.0;  // (N_J / n)^exponent
  bool is_min = false;
};

struct RateReport {
  std::vector<SubsetRow> rows;  // one per subset, in mask order
  SubsetMask j_star = 0;
  double gamma_n = 0.0;

  const SubsetRow& star() const { return rows.at(j_star); }
};

/// Orders subsets by cardinality, then lexicographically by sorted index list.
bool tie_break_less(SubsetMask a, SubsetMask b) noexcept;

/// Exhaustive minimization over all subsets of the discrete coordinates.
/// Throws UnsupportedError when d_y > 20.
RateReport gamma_n(const RateInputs& inputs);

double t_J0_value(int d_Jc, const HarmonicBeta& beta_Jc, double tau, double tau1, double tau2);
double t_J0(const RateInputs& inputs, SubsetMask J);

struct EpsilonResult {
  SubsetMask J = 0;
  double t_J = 0.0;
  double value = 0.0;
  double n_eps_sq = 0.0;
  /// t_{J0} + max{0, (1 - tau1)/2}; the exponent must exceed it.
  double t_threshold = 0.0;
  bool admissible = false;
};

EpsilonResult epsilon_n(const RateInputs& inputs, SubsetMask J, double t_J);

/// Minimum of epsilon_n over all subsets, t_J supplied per subset.
EpsilonResult epsilon_n_min(const RateInputs& inputs, const std::function<double(SubsetMask)>& t_of_J);

std::string subset_to_string(SubsetMask J, int d_y);

}  // namespace mixdc
