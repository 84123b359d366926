#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "mixdc/rates.hpp"

namespace testsupport {

/// Independent enumeration of subsets as explicit index lists, used to
/// cross-check gamma_n.
struct OracleResult {
  std::vector<int> J;
  double value = std::numeric_limits<double>::infinity();
};

inline OracleResult brute_force_gamma(const mixdc::RateInputs& in) {
  const int dy = in.grid.d_y();
  std::vector<std::vector<int>> subsets{{}};
  for (int j = 0; j < dy; ++j) {
    const std::size_t k = subsets.size();
    for (std::size_t s = 0; s < k; ++s) {
      std::vector<int> with = subsets[s];
      with.push_back(j);
      subsets.push_back(with);
    }
  }
  OracleResult best;
  bool have = false;
  for (const auto& J : subsets) {
    double NJ = 1.0;
    for (int j = 0; j < dy; ++j)
      if (std::find(J.begin(), J.end(), j) != J.end()) NJ *= in.grid.N(j);
    double inv = 0.0;
    bool empty = true;
    for (int i = 0; i < in.grid.d(); ++i) {
      if (i < dy && std::find(J.begin(), J.end(), i) != J.end()) continue;
      inv += 1.0 / in.smoothness.beta[static_cast<std::size_t>(i)];
      empty = false;
    }
    double exponent = 0.5;
    if (!empty) {
      const double b = 1.0 / inv;
      exponent = b / (2.0 * b + 1.0);
    }
    const double value = std::pow(NJ / in.n, exponent);
    bool better = !have || value < best.value;
    if (have && value == best.value) {
      if (J.size() != best.J.size())
        better = J.size() < best.J.size();
      else
        better = std::lexicographical_compare(J.begin(), J.end(), best.J.begin(), best.J.end());
    }
    if (better) {
      best.J = J;
      best.value = value;
      have = true;
    }
  }
  return best;
}

inline mixdc::SubsetMask to_mask(const std::vector<int>& J) {
  mixdc::SubsetMask m = 0;
  for (int j : J) m |= mixdc::SubsetMask{1} << j;
  return m;
}

}  // namespace testsupport
