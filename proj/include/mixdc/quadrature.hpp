#pragma once

#include <functional>
#include <span>
#include <vector>

#include "mixdc/grid.hpp"

namespace mixdc {

struct QuadResult {
  double value = 0.0;
  double error = 0.0;
};

/// Stopping rule for adaptive Gauss-Kronrod: total error estimate
/// <= max(rel * L1, abs). No segment is bisected more than max_depth times.
struct AdaptiveTolerance {
  double rel = 1e-10;
  double abs = 1e-14;
  int max_depth = 30;
};

/// Globally adaptive 15-point Gauss-Kronrod over a finite interval.
/// Throws ToleranceNotMet (carrying the achieved estimate) on failure.
QuadResult integrate_adaptive(const std::function<double(double)>& f, double a, double b,
                              const AdaptiveTolerance& tol = {});

/// Iterated adaptive integration over a finite box (empty box: f evaluated once).
QuadResult integrate_box(const std::function<double(std::span<const double>)>& f,
                         std::span<const Interval> box, const AdaptiveTolerance& tol = {});

/// Tensor-product composite Gauss-Legendre rule: `panels` equal panels per
/// coordinate, `order` nodes per panel (4, 8, 16 or 32).
class TensorRule {
 public:
  TensorRule() = default;
  TensorRule(std::span<const Interval> box, int panels, int order);

  int dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return weights_.size(); }
  std::span<const double> node(std::size_t k) const {
    return {nodes_.data() + k * static_cast<std::size_t>(dim_), static_cast<std::size_t>(dim_)};
  }
  double weight(std::size_t k) const { return weights_[k]; }

 private:
  int dim_ = 0;
  std::vector<double> nodes_;
  std::vector<double> weights_;
};

/// One-dimensional composite Gauss-Legendre nodes/weights on [a, b].
void gauss_legendre_panels(double a, double b, int panels, int order, std::vector<double>& nodes,
                           std::vector<double>& weights);

}  // namespace mixdc
