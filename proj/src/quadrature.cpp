#include "mixdc/quadrature.hpp"

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/erf.hpp>
#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <sstream>

#include "mixdc/errors.hpp"
#include "mixdc/normal.hpp"

namespace mixdc {

namespace normal {

double quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw DomainError("normal::quantile: p must be in (0,1)");
  return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * p);
}

double quantile_upper(double q) {
  if (!(q > 0.0 && q < 1.0)) throw DomainError("normal::quantile_upper: q must be in (0,1)");
  return std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * q);
}

}  // namespace normal

namespace {

struct Segment {
  double a, b, value, error, l1;
  int depth;
  bool operator<(const Segment& o) const { return error < o.error; }
};

Segment gk15(const std::function<double(double)>& f, double a, double b, int depth) {
  using Kronrod = boost::math::quadrature::gauss_kronrod<double, 15>;
  using Gauss = boost::math::quadrature::gauss<double, 7>;
  const auto& x = Kronrod::abscissa();
  const auto& wk = Kronrod::weights();
  const auto& wg = Gauss::weights();
  const double mid = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  // Node 0 is the centre; even Kronrod nodes are the Gauss nodes.
  const double f0 = f(mid);
  double k = f0 * wk[0], g = f0 * wg[0], l1 = std::abs(f0) * wk[0];
  for (std::size_t i = 1; i < x.size(); ++i) {
    const double fp = f(mid + half * x[i]);
    const double fm = f(mid - half * x[i]);
    k += (fp + fm) * wk[i];
    l1 += (std::abs(fp) + std::abs(fm)) * wk[i];
    if (i % 2 == 0) g += (fp + fm) * wg[i / 2];
  }
  Segment s{a, b, k * half, 0.0, l1 * half, depth};
  s.error = std::max(std::abs(k - g) * half, 4.0 * std::numeric_limits<double>::epsilon() * std::abs(s.value));
  return s;
}

}  // namespace

QuadResult integrate_adaptive(const std::function<double(double)>& f, double a, double b,
                              const AdaptiveTolerance& tol) {
  if (!(std::isfinite(a) && std::isfinite(b))) throw DomainError("integrate_adaptive: infinite limits");
  if (a == b) return {};
  // Global strategy: always bisect the segment with the largest error
  // estimate, so kinks cost a few levels instead of defeating a local test.
  std::priority_queue<Segment> heap;
  std::vector<Segment> done;
  heap.push(gk15(f, a, b, 0));
  double value = heap.top().value, err = heap.top().error, l1 = heap.top().l1;
  const std::size_t max_segments = std::size_t{40} * static_cast<std::size_t>(std::max(tol.max_depth, 1));
  while (!heap.empty() && err > std::max(tol.rel * l1, tol.abs)) {
    Segment s = heap.top();
    heap.pop();
    if (s.depth >= tol.max_depth || heap.size() + done.size() >= max_segments) {
      done.push_back(s);
      continue;
    }
    const double mid = 0.5 * (s.a + s.b);
    Segment left = gk15(f, s.a, mid, s.depth + 1);
    Segment right = gk15(f, mid, s.b, s.depth + 1);
    value += left.value + right.value - s.value;
    err += left.error + right.error - s.error;
    l1 += left.l1 + right.l1 - s.l1;
    heap.push(left);
    heap.push(right);
  }
  // Re-sum from the leaves to shed accumulated cancellation in the running totals.
  value = 0.0;
  err = 0.0;
  l1 = 0.0;
  for (; !heap.empty(); heap.pop()) done.push_back(heap.top());
  std::sort(done.begin(), done.end(), [](const Segment& x, const Segment& y) { return x.a < y.a; });
  for (const Segment& s : done) {
    value += s.value;
    err += s.error;
    l1 += s.l1;
  }
  const double allowed = std::max(tol.rel * l1, tol.abs);
  if (!std::isfinite(value) || err > allowed) {
    std::ostringstream os;
    os << "adaptive quadrature on [" << a << ", " << b << "] reached error " << err << " > " << allowed;
    throw ToleranceNotMet(os.str(), err, allowed);
  }
  return {value, err};
}

namespace {

QuadResult integrate_box_from(const std::function<double(std::span<const double>)>& f,
                              std::span<const Interval> box, std::vector<double>& point, std::size_t axis,
                              const AdaptiveTolerance& tol) {
  if (axis == box.size()) return {f(point), 0.0};
  const Interval& side = box[axis];
  // Inner integrals get half the budget so their noise stays below the outer test.
  AdaptiveTolerance inner = tol;
  inner.rel = 0.5 * tol.rel;
  inner.abs = 0.5 * tol.abs / std::max(side.width(), 1.0);
  double inner_err = 0.0;
  auto slice = [&](double t) {
    point[axis] = t;
    QuadResult r = integrate_box_from(f, box, point, axis + 1, inner);
    inner_err = std::max(inner_err, r.error);
    return r.value;
  };
  QuadResult outer = integrate_adaptive(slice, side.lo, side.hi, tol);
  outer.error += inner_err * side.width();
  return outer;
}

}  // namespace

QuadResult integrate_box(const std::function<double(std::span<const double>)>& f, std::span<const Interval> box,
                         const AdaptiveTolerance& tol) {
  for (const Interval& side : box)
    if (!side.bounded()) throw DomainError("integrate_box: box must be bounded");
  std::vector<double> point(box.size());
  return integrate_box_from(f, box, point, 0, tol);
}

namespace {

template <unsigned Order>
void reference_rule(std::vector<double>& x, std::vector<double>& w) {
  using Rule = boost::math::quadrature::gauss<double, Order>;
  const auto& abscissa = Rule::abscissa();
  const auto& weights = Rule::weights();
  x.clear();
  w.clear();
  for (std::size_t i = 0; i < abscissa.size(); ++i) {
    if (abscissa[i] == 0.0) {
      x.push_back(0.0);
      w.push_back(weights[i]);
    } else {
      x.push_back(-abscissa[i]);
      w.push_back(weights[i]);
      x.push_back(abscissa[i]);
      w.push_back(weights[i]);
    }
  }
}

}  // namespace

void gauss_legendre_panels(double a, double b, int panels, int order, std::vector<double>& nodes,
                           std::vector<double>& weights) {
  if (!(std::isfinite(a) && std::isfinite(b) && a < b)) throw DomainError("gauss_legendre_panels: bad interval");
  if (panels < 1) throw DomainError("gauss_legendre_panels: panels must be >= 1");
  std::vector<double> rx, rw;
  switch (order) {
    case 4: reference_rule<4>(rx, rw); break;
    case 8: reference_rule<8>(rx, rw); break;
    case 16: reference_rule<16>(rx, rw); break;
    case 32: reference_rule<32>(rx, rw); break;
    default: throw DomainError("gauss_legendre_panels: order must be 4, 8, 16 or 32");
  }
  nodes.clear();
  weights.clear();
  const double width = (b - a) / panels;
  for (int p = 0; p < panels; ++p) {
    const double mid = a + (p + 0.5) * width;
    for (std::size_t i = 0; i < rx.size(); ++i) {
      nodes.push_back(mid + 0.5 * width * rx[i]);
      weights.push_back(0.5 * width * rw[i]);
    }
  }
}

TensorRule::TensorRule(std::span<const Interval> box, int panels, int order) : dim_(static_cast<int>(box.size())) {
  std::vector<std::vector<double>> axis_nodes(box.size()), axis_weights(box.size());
  std::size_t total = 1;
  for (std::size_t i = 0; i < box.size(); ++i) {
    gauss_legendre_panels(box[i].lo, box[i].hi, panels, order, axis_nodes[i], axis_weights[i]);
    total *= axis_nodes[i].size();
  }
  nodes_.resize(total * box.size());
  weights_.resize(total);
  std::vector<std::size_t> idx(box.size(), 0);
  for (std::size_t k = 0; k < total; ++k) {
    double w = 1.0;
    for (std::size_t i = 0; i < box.size(); ++i) {
      nodes_[k * box.size() + i] = axis_nodes[i][idx[i]];
      w *= axis_weights[i][idx[i]];
    }
    weights_[k] = w;
    for (std::size_t i = box.size(); i-- > 0;) {
      if (++idx[i] < axis_nodes[i].size()) break;
      idx[i] = 0;
    }
  }
}

}  // namespace mixdc
