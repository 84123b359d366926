#include "mixdc/lowerbound.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <sstream>

#include "mixdc/errors.hpp"
#include "mixdc/kernels.hpp"

namespace mixdc {

BandwidthSchedule build_schedule(const RateInputs& inputs, const RateReport& rates) {
  inputs.validate();
  const GridSpec& grid = inputs.grid;
  const int d = grid.d();
  const double gamma = rates.gamma_n;
  if (!(gamma > 0.0 && gamma < 1.0)) throw DomainError("build_schedule: Gamma_n must lie in (0, 1)");
  BandwidthSchedule s;
  s.role.resize(static_cast<std::size_t>(d));
  s.h.resize(static_cast<std::size_t>(d));
  s.beta_star.resize(static_cast<std::size_t>(d));
  s.R.assign(static_cast<std::size_t>(d), 0);
  s.rho.assign(static_cast<std::size_t>(d), std::numeric_limits<double>::quiet_NaN());
  s.m.resize(static_cast<std::size_t>(d));
  for (int i = 0; i < d; ++i) {
    const auto ui = static_cast<std::size_t>(i);
    const double beta = inputs.smoothness.beta[ui];
    if (i >= grid.d_y()) {
      s.role[ui] = CoordinateRole::Continuous;
      s.beta_star[ui] = beta;
      s.h[ui] = std::pow(gamma, 1.0 / beta);
      // Relative slack keeps e.g. h = 0.1 (computed as 0.1000...01) at m = 10.
      s.m[ui] = static_cast<int>(std::floor((1.0 + 1e-12) / s.h[ui]));
      continue;
    }
    const int N = grid.N(i);
    if ((rates.j_star >> i) & 1U) {
      s.role[ui] = CoordinateRole::Unsmoothed;
      if (N == 1)
        throw UnsupportedError("build_schedule: discrete coordinate " + std::to_string(i + 1) +
                               " has a single grid point; it carries no information and must be dropped");
      s.beta_star[ui] = -std::log(gamma) / std::log(static_cast<double>(N));
      if (s.beta_star[ui] < beta * (1.0 - 1e-12)) {
        std::ostringstream os;
        os << "build_schedule: beta*_" << i + 1 << " = " << s.beta_star[ui] << " < beta = " << beta;
        throw DomainError(os.str());
      }
      s.h[ui] = 2.0 / N;
      s.m[ui] = N / 2;
    } else {
      s.role[ui] = CoordinateRole::SmoothedDiscrete;
      s.beta_star[ui] = beta;
      const double a = std::pow(gamma, 1.0 / beta);
      if (a * N < 1.0 - 1e-12)
        throw DomainError("build_schedule: Gamma^{1/beta} N < 1 on smoothed coordinate " + std::to_string(i + 1));
      const int R = static_cast<int>(std::floor(a * N / 2.0)) + 1;
      s.R[ui] = R;
      s.h[ui] = 2.0 * R / N;
      s.rho[ui] = s.h[ui] / a;
      if (!(s.rho[ui] > 1.0 && s.rho[ui] <= 2.0 + 1e-12))
        throw DomainError("build_schedule: rho outside (1, 2] on coordinate " + std::to_string(i + 1));
      s.m[ui] = N / (2 * R);
    }
  }
  std::uint64_t m_bar = 1;
  for (int mi : s.m) {
    if (mi <= 0) {
      m_bar = 0;
      break;
    }
    if (m_bar > kMaxRectangles / static_cast<std::uint64_t>(mi))
      throw UnsupportedError("build_schedule: more than 2^20 rectangles");
    m_bar *= static_cast<std::uint64_t>(mi);
  }
  s.m_bar = m_bar;
  if (m_bar < 8)
    throw ParametricRegimeError("build_schedule: only " + std::to_string(m_bar) +
                                " rectangles (< 8); this is the parametric n^{-1/2} regime");
  return s;
}

int Codebook::hamming(std::size_t j, std::size_t l) const {
  const auto& a = words_.at(j);
  const auto& b = words_.at(l);
  int dist = 0;
  for (std::size_t w = 0; w < a.size(); ++w) dist += std::popcount(a[w] ^ b[w]);
  return dist;
}

int Codebook::min_distance() const {
  int best = std::numeric_limits<int>::max();
  for (std::size_t j = 0; j < words_.size(); ++j)
    for (std::size_t l = j + 1; l < words_.size(); ++l) best = std::min(best, hamming(j, l));
  return best;
}

std::string Codebook::hex(std::size_t j) const {
  static const char digits[] = "0123456789abcdef";
  std::string out;
  for (int start = 0; start < bits_; start += 4) {
    int nibble = 0;
    for (int b = 0; b < 4; ++b) {
      const int r = start + b;
      nibble = (nibble << 1) | ((r < bits_ && bit(j, static_cast<std::uint64_t>(r))) ? 1 : 0);
    }
    out += digits[nibble];
  }
  return out;
}

Codebook build_codebook(int bits, std::uint64_t seed, const CodebookOptions& opts) {
  if (bits < 8) throw DomainError("build_codebook: need at least 8 bits");
  Codebook cb;
  cb.bits_ = bits;
  cb.threshold_ = (bits + 7) / 8;
  if (opts.target > 0) {
    cb.target_ = opts.target;
  } else {
    const double vg = std::exp2(bits / 8.0);
    cb.target_ = vg >= 256.0 ? 256 : static_cast<std::uint64_t>(std::ceil(vg - 1e-9));
  }
  const std::size_t nwords = (static_cast<std::size_t>(bits) + 63) / 64;
  const std::uint64_t last_mask = bits % 64 == 0 ? ~std::uint64_t{0} : (std::uint64_t{1} << (bits % 64)) - 1;
  cb.words_.emplace_back(nwords, 0);
  SplitMix64 eng(stream_key(seed, {0x636f6465ULL}));
  const std::uint64_t budget = opts.budget_factor * cb.target_;
  std::vector<std::uint64_t> word(nwords);
  while (cb.M() < cb.target_ && cb.attempts_ < budget) {
    ++cb.attempts_;
    for (auto& w : word) w = eng();
    word.back() &= last_mask;
    bool ok = true;
    for (const auto& kept : cb.words_) {
      int dist = 0;
      for (std::size_t w = 0; w < nwords; ++w) dist += std::popcount(word[w] ^ kept[w]);
      if (dist < cb.threshold_) {
        ok = false;
        break;
      }
    }
    if (ok) cb.words_.push_back(word);
  }
  if (cb.M() < 2)
    throw ConstructionFailed("build_codebook: only " + std::to_string(cb.M()) + " codewords after " +
                             std::to_string(cb.attempts_) + " attempts; retry with another seed");
  return cb;
}

double default_c0(int d, int d_y) {
  return std::pow(std::exp2(-(d + d_y + 7.0)) * std::log(2.0), 1.0 / (2.0 * d));
}

HypothesisFamily HypothesisFamily::build(const RateInputs& inputs, const LowerBoundOptions& opts) {
  HypothesisFamily fam;
  fam.inputs_ = inputs;
  fam.rates_ = mixdc::gamma_n(inputs);
  fam.schedule_ = build_schedule(inputs, fam.rates_);
  fam.c0_ = opts.c0.value_or(default_c0(inputs.grid.d(), inputs.grid.d_y()));
  if (!(fam.c0_ > 0.0) || !std::isfinite(fam.c0_)) throw DomainError("HypothesisFamily: c0 must be positive");
  if (fam.min_density_bound() <= 0.0)
    throw DomainError("HypothesisFamily: c0 too large; hypotheses would take negative values");
  if (fam.schedule_.m_bar > static_cast<std::uint64_t>(std::numeric_limits<int>::max()))
    throw UnsupportedError("HypothesisFamily: too many rectangles");
  fam.codebook_ = build_codebook(static_cast<int>(fam.schedule_.m_bar), opts.seed, opts.codebook);
  return fam;
}

double HypothesisFamily::envelope_excess() const noexcept {
  return gamma_n() * std::pow(kernels::g_sup(c0_), d());
}

double HypothesisFamily::min_density_bound() const noexcept { return 1.0 - envelope_excess(); }

std::int64_t HypothesisFamily::rectangle_of(std::span<const double> z) const {
  if (static_cast<int>(z.size()) != d()) throw ShapeError("rectangle_of: wrong point dimension");
  std::int64_t r = 0;
  for (int i = 0; i < d(); ++i) {
    const auto ui = static_cast<std::size_t>(i);
    const double h = schedule_.h[ui];
    const int m = schedule_.m[ui];
    const double v = z[ui];
    if (!(v >= 0.0) || v > m * h) return -1;
    int k = static_cast<int>(std::ceil(v / h)) - 1;
    k = std::clamp(k, 0, m - 1);
    // Guard against rounding in v / h next to a face.
    if (k > 0 && v <= h * k) --k;
    if (k < m - 1 && v > h * (k + 1)) ++k;
    r = r * m + k;
  }
  return r;
}

std::vector<double> HypothesisFamily::center(std::uint64_t r) const {
  if (r >= schedule_.m_bar) throw DomainError("center: rectangle index out of range");
  std::vector<double> c(static_cast<std::size_t>(d()));
  for (int i = d(); i-- > 0;) {
    const auto ui = static_cast<std::size_t>(i);
    const auto m = static_cast<std::uint64_t>(schedule_.m[ui]);
    c[ui] = schedule_.h[ui] * (static_cast<double>(r % m) + 0.5);
    r /= m;
  }
  return c;
}

double HypothesisFamily::density(std::size_t j, std::span<const double> z) const {
  if (j >= hypotheses()) throw DomainError("density: hypothesis index out of range");
  double value = 1.0;
  for (double v : z)
    if (!(v >= 0.0 && v <= 1.0)) return 0.0;
  const std::int64_t r = rectangle_of(z);
  if (r < 0 || !codebook_.bit(j, static_cast<std::uint64_t>(r))) return value;
  const std::vector<double> c = center(static_cast<std::uint64_t>(r));
  double bump = gamma_n();
  for (int i = 0; i < d(); ++i) {
    const auto ui = static_cast<std::size_t>(i);
    bump *= kernels::g((z[ui] - c[ui]) / schedule_.h[ui], c0_);
  }
  return value + bump;
}

double HypothesisFamily::derivative(std::size_t j, std::span<const int> k, std::span<const double> z) const {
  if (static_cast<int>(k.size()) != d()) throw ShapeError("derivative: wrong order dimension");
  bool zero_order = true;
  for (int ki : k) zero_order = zero_order && ki == 0;
  if (zero_order) return density(j, z);
  if (j >= hypotheses()) throw DomainError("derivative: hypothesis index out of range");
  const std::int64_t r = rectangle_of(z);
  if (r < 0 || !codebook_.bit(j, static_cast<std::uint64_t>(r))) return 0.0;
  const std::vector<double> c = center(static_cast<std::uint64_t>(r));
  double value = gamma_n();
  for (int i = 0; i < d(); ++i) {
    const auto ui = static_cast<std::size_t>(i);
    const double h = schedule_.h[ui];
    value *= kernels::g_derivative(k[ui], (z[ui] - c[ui]) / h, c0_) / std::pow(h, k[ui]);
  }
  return value;
}

namespace {

void draw_hypothesis(const HypothesisFamily& fam, std::size_t j, Rng& rng, std::span<double> z, long* proposals) {
  const double envelope = 1.0 + fam.envelope_excess();
  for (;;) {
    if (proposals) ++*proposals;
    for (double& v : z) v = uniform_open(rng);
    if (uniform_open(rng) * envelope <= fam.density(j, z)) return;
  }
}

}  // namespace

LatentDensity HypothesisFamily::latent(std::size_t j) const {
  if (j >= hypotheses()) throw DomainError("latent: hypothesis index out of range");
  auto self = std::make_shared<const HypothesisFamily>(*this);
  LatentDensity f;
  f.d = d();
  f.density = [self, j](std::span<const double> z) { return self->density(j, z); };
  f.sample = [self, j](Rng& rng, std::span<double> z) { draw_hypothesis(*self, j, rng, z, nullptr); };
  f.support.assign(static_cast<std::size_t>(d()), Interval{0.0, 1.0});
  return f;
}

MixedDistribution HypothesisFamily::binned(std::size_t j) const {
  if (j >= hypotheses()) throw DomainError("binned: hypothesis index out of range");
  auto self = std::make_shared<const HypothesisFamily>(*this);
  const GridSpec& g = grid();
  const int dy = g.d_y();
  // Per discrete coordinate and level: the rectangle index along that axis
  // (or -1) and h * (integral of g over the cell in rectangle units).
  struct LevelInfo {
    int k = -1;
    double bump = 0.0;
  };
  auto table = std::make_shared<std::vector<std::vector<LevelInfo>>>(static_cast<std::size_t>(dy));
  double uniform = 1.0;
  for (int i = 0; i < dy; ++i) {
    const auto ui = static_cast<std::size_t>(i);
    const int N = g.N(i);
    const double h = schedule_.h[ui];
    const int m = schedule_.m[ui];
    uniform /= N;
    auto& levels = (*table)[ui];
    levels.resize(static_cast<std::size_t>(N));
    for (int l = 0; l < N; ++l) {
      const double mid = (l + 0.5) / N;
      const int k = static_cast<int>(std::floor(mid / h));
      if (k >= m) continue;
      const double c = h * (k + 0.5);
      const double u_lo = std::max(-0.5, (static_cast<double>(l) / N - c) / h);
      const double u_hi = std::min(0.5, (static_cast<double>(l + 1) / N - c) / h);
      levels[static_cast<std::size_t>(l)] = {k, h * (kernels::g_cumulative(u_hi, c0_) - kernels::g_cumulative(u_lo, c0_))};
    }
  }
  auto mass = [self, j, table, uniform, dy](const GridPoint& y, std::span<const double> x) {
    const GridSpec& grid = self->grid();
    grid.validate(y);
    if (static_cast<int>(x.size()) != grid.d_x()) throw ShapeError("binned hypothesis: wrong x dimension");
    for (double v : x)
      if (!(v >= 0.0 && v <= 1.0)) return 0.0;
    const BandwidthSchedule& s = self->schedule();
    std::int64_t r = 0;
    double bump = self->gamma_n();
    for (int i = 0; i < dy; ++i) {
      const auto ui = static_cast<std::size_t>(i);
      const LevelInfo& info = (*table)[ui][static_cast<std::size_t>(y.levels[ui])];
      if (info.k < 0) return uniform;
      r = r * s.m[ui] + info.k;
      bump *= info.bump;
    }
    for (int i = dy; i < grid.d(); ++i) {
      const auto ui = static_cast<std::size_t>(i);
      const double v = x[static_cast<std::size_t>(i - dy)];
      const double h = s.h[ui];
      const int m = s.m[ui];
      if (v > m * h) return uniform;
      int k = std::clamp(static_cast<int>(std::ceil(v / h)) - 1, 0, m - 1);
      r = r * m + k;
      bump *= kernels::g((v - h * (k + 0.5)) / h, self->c0());
    }
    if (!self->codebook().bit(j, static_cast<std::uint64_t>(r))) return uniform;
    return uniform + bump;
  };
  LatentDensity f = latent(j);
  auto sampler = [draw = f.sample, g](Rng& rng) {
    std::vector<double> z(static_cast<std::size_t>(g.d()));
    draw(rng, z);
    return bin_sample(g, z);
  };
  return MixedDistribution(g, mass, sampler, std::move(f));
}

double tv_closed_form(const HypothesisFamily& fam, std::size_t j, std::size_t l) {
  if (j == l) return 0.0;
  double prod_h = 1.0;
  for (double h : fam.schedule().h) prod_h *= h;
  return fam.codebook().hamming(j, l) * fam.gamma_n() * prod_h *
         std::pow(kernels::g_abs_integral(fam.c0()), fam.d());
}

DistanceQuad hypothesis_quad(const HypothesisFamily& fam, int panels_per_rectangle, int order) {
  DistanceQuad q;
  q.x_box.assign(static_cast<std::size_t>(fam.grid().d_x()), Interval{0.0, 1.0});
  int m = 1;
  for (int i = fam.grid().d_y(); i < fam.d(); ++i) m = std::max(m, fam.schedule().m[static_cast<std::size_t>(i)]);
  q.panels = panels_per_rectangle * m;
  q.order = order;
  return q;
}

KlCheck kl_bound_check(const HypothesisFamily& fam, std::size_t j, const DistanceQuad& quad) {
  KlCheck out;
  const DistanceSet s = mixed_distances(fam.binned(j), fam.binned(0), quad);
  out.kl = s.kl;
  out.clamp_events = s.clamp_events;
  out.bound = 2.0 * fam.gamma_n() * fam.gamma_n() * std::pow(fam.c0(), 2.0 * fam.d());
  out.n_kl = fam.inputs().n * out.kl;
  out.vg_threshold = static_cast<double>(fam.schedule().m_bar) * std::log(2.0) / 64.0;
  out.within_bound = out.kl <= out.bound;
  out.vg_condition = out.n_kl < out.vg_threshold;
  return out;
}

namespace {

void enumerate_orders(const std::vector<double>& beta_star, std::size_t i, std::vector<int>& k, double used,
                      std::vector<std::vector<int>>& out, long& skipped) {
  if (i == beta_star.size()) {
    out.push_back(k);
    return;
  }
  for (int ki = 0;; ++ki) {
    const double total = used + ki / beta_star[i];
    if (!(total < 1.0)) break;
    if (ki > kernels::kMaxDerivative) {
      ++skipped;
      break;
    }
    k[i] = ki;
    enumerate_orders(beta_star, i + 1, k, total, out, skipped);
  }
  k[i] = 0;
}

}  // namespace

HolderReport holder_check(const HypothesisFamily& fam, std::size_t j, long trials, std::uint64_t seed, double tol) {
  const BandwidthSchedule& s = fam.schedule();
  const int d = fam.d();
  const double L = fam.inputs().smoothness.L;
  HolderReport report;
  std::vector<std::vector<int>> orders;
  std::vector<int> k(static_cast<std::size_t>(d), 0);
  enumerate_orders(s.beta_star, 0, k, 0.0, orders, report.skipped_orders);
  for (std::size_t o = 0; o < orders.size(); ++o) {
    HolderRow row;
    row.k = orders[o];
    double used = 0.0;
    for (int i = 0; i < d; ++i) used += row.k[static_cast<std::size_t>(i)] / s.beta_star[static_cast<std::size_t>(i)];
    for (int i = 0; i < d; ++i) {
      const double b = s.beta_star[static_cast<std::size_t>(i)];
      if (used + 1.0 / b >= 1.0) {
        row.checked.push_back(i);
        row.exponent.push_back(b * (1.0 - used));
      }
    }
    if (!row.checked.empty()) {
      Rng rng(stream_key(seed, {o}));
      std::vector<double> z(static_cast<std::size_t>(d)), z2;
      for (long t = 0; t < trials; ++t) {
        const std::size_t pick = static_cast<std::size_t>(t) % row.checked.size();
        const auto i = static_cast<std::size_t>(row.checked[pick]);
        for (double& v : z) v = uniform_open(rng);
        const double mag = s.h[i] * std::pow(10.0, -4.0 + 4.3 * uniform_open(rng));
        double delta = uniform_open(rng) < 0.5 ? -mag : mag;
        if (z[i] + delta < 0.0 || z[i] + delta > 1.0) delta = -delta;
        if (z[i] + delta < 0.0 || z[i] + delta > 1.0) delta = (z[i] > 0.5 ? -z[i] : 1.0 - z[i]) * uniform_open(rng);
        z2 = z;
        z2[i] += delta;
        const double lhs = std::abs(fam.derivative(j, row.k, z2) - fam.derivative(j, row.k, z));
        const double rhs = L * std::pow(std::abs(delta), row.exponent[pick]);
        row.max_excess = t == 0 ? lhs - rhs : std::max(row.max_excess, lhs - rhs);
        ++row.trials;
        if (lhs - rhs > tol) ++row.violations;
      }
    }
    report.violations += row.violations;
    report.rows.push_back(std::move(row));
  }
  return report;
}

HypothesisSample sample_hypothesis(const HypothesisFamily& fam, std::size_t j, std::size_t n, std::uint64_t seed) {
  if (j >= fam.hypotheses()) throw DomainError("sample_hypothesis: hypothesis index out of range");
  HypothesisSample out;
  Rng rng(stream_key(seed, {j}));
  long proposals = 0;
  out.latent.reserve(n);
  out.observations.reserve(n);
  std::vector<double> z(static_cast<std::size_t>(fam.d()));
  for (std::size_t t = 0; t < n; ++t) {
    draw_hypothesis(fam, j, rng, z, &proposals);
    out.latent.push_back(z);
    out.observations.push_back(bin_sample(fam.grid(), z));
  }
  out.acceptance_rate = proposals > 0 ? static_cast<double>(n) / static_cast<double>(proposals) : 0.0;
  return out;
}

}  // namespace mixdc
