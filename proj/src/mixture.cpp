#include "mixdc/mixture.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <json.hpp>

#include "mixdc/errors.hpp"
#include "mixdc/normal.hpp"

namespace mixdc {

void MixtureParams::validate() const { validate(d()); }

void MixtureParams::validate(int d) const {
  if (weights.empty()) throw ShapeError("MixtureParams: need at least one component");
  if (static_cast<int>(scales.size()) != d)
    throw ShapeError("MixtureParams: expected " + std::to_string(d) + " scales, got " + std::to_string(scales.size()));
  if (means.size() != weights.size()) throw ShapeError("MixtureParams: means/weights length mismatch");
  for (const auto& mu : means) {
    if (static_cast<int>(mu.size()) != d) throw ShapeError("MixtureParams: mean vector has wrong dimension");
    for (double v : mu)
      if (!std::isfinite(v)) throw DomainError("MixtureParams: non-finite mean");
  }
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw DomainError("MixtureParams: weights must be nonnegative");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-12) throw DomainError("MixtureParams: weights must sum to one");
  for (double s : scales)
    if (!(s > 0.0) || !std::isfinite(s)) throw DomainError("MixtureParams: scales must be positive");
}

void normalize_weights(std::vector<double>& weights) {
  double total = 0.0;
  for (double w : weights) total += w;
  if (!(total > 0.0)) throw DomainError("normalize_weights: weights sum to zero");
  for (double& w : weights) w = std::max(w / total, kWeightFloor);
}

double mixture_latent_log_density(const MixtureParams& theta, std::span<const double> z) {
  const int d = theta.d();
  if (static_cast<int>(z.size()) != d) throw ShapeError("mixture_latent_density: wrong point dimension");
  double log_norm = 0.0;
  for (double s : theta.scales) log_norm -= std::log(s) + normal::kLogSqrt2Pi;
  double best = -std::numeric_limits<double>::infinity();
  std::vector<double> terms(theta.weights.size());
  for (std::size_t j = 0; j < theta.weights.size(); ++j) {
    double q = 0.0;
    for (int i = 0; i < d; ++i) {
      const double u = (z[static_cast<std::size_t>(i)] - theta.means[j][static_cast<std::size_t>(i)]) /
                       theta.scales[static_cast<std::size_t>(i)];
      q += u * u;
    }
    terms[j] = std::log(theta.weights[j]) - 0.5 * q;
    best = std::max(best, terms[j]);
  }
  if (!std::isfinite(best)) return -std::numeric_limits<double>::infinity();
  double acc = 0.0;
  for (double t : terms) acc += std::exp(t - best);
  return best + std::log(acc) + log_norm;
}

double mixture_latent_density(const MixtureParams& theta, std::span<const double> z) {
  const int d = theta.d();
  if (static_cast<int>(z.size()) != d) throw ShapeError("mixture_latent_density: wrong point dimension");
  double norm = 1.0;
  for (double s : theta.scales) norm *= normal::kInvSqrt2Pi / s;
  double acc = 0.0;
  for (std::size_t j = 0; j < theta.weights.size(); ++j) {
    double q = 0.0;
    for (int i = 0; i < d; ++i) {
      const double u = (z[static_cast<std::size_t>(i)] - theta.means[j][static_cast<std::size_t>(i)]) /
                       theta.scales[static_cast<std::size_t>(i)];
      q += u * u;
    }
    acc += theta.weights[j] * std::exp(-0.5 * q);
  }
  return acc * norm;
}

double mixture_mixed_density(const GridSpec& grid, const MixtureParams& theta, const GridPoint& y,
                             std::span<const double> x) {
  if (theta.d() != grid.d()) throw ShapeError("mixture_mixed_density: parameter dimension does not match grid");
  if (static_cast<int>(x.size()) != grid.d_x()) throw ShapeError("mixture_mixed_density: wrong x dimension");
  grid.validate(y);
  const int dy = grid.d_y();
  double acc = 0.0;
  for (std::size_t j = 0; j < theta.weights.size(); ++j) {
    const auto& mu = theta.means[j];
    double term = theta.weights[j];
    for (int i = 0; i < dy && term > 0.0; ++i) {
      const Interval side = grid.cell_interval(i, y.levels[static_cast<std::size_t>(i)]);
      const double s = theta.scales[static_cast<std::size_t>(i)];
      const double m = mu[static_cast<std::size_t>(i)];
      term *= normal::interval_prob((side.lo - m) / s, (side.hi - m) / s);
    }
    for (int i = dy; i < grid.d() && term > 0.0; ++i) {
      const double s = theta.scales[static_cast<std::size_t>(i)];
      term *= normal::pdf((x[static_cast<std::size_t>(i - dy)] - mu[static_cast<std::size_t>(i)]) / s) / s;
    }
    acc += term;
  }
  return acc;
}

std::vector<Interval> effective_box(const MixtureParams& theta, double n_sigma) {
  std::vector<Interval> box(static_cast<std::size_t>(theta.d()));
  for (int i = 0; i < theta.d(); ++i) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (const auto& mu : theta.means) {
      lo = std::min(lo, mu[static_cast<std::size_t>(i)]);
      hi = std::max(hi, mu[static_cast<std::size_t>(i)]);
    }
    const double pad = n_sigma * theta.scales[static_cast<std::size_t>(i)];
    box[static_cast<std::size_t>(i)] = {lo - pad, hi + pad};
  }
  return box;
}

std::string mixture_to_json(const GridSpec& grid, const MixtureParams& theta) {
  theta.validate(grid.d());
  nlohmann::ordered_json j;
  j["m"] = theta.m();
  j["weights"] = theta.weights;
  j["means"] = theta.means;
  j["scales"] = theta.scales;
  j["d_y"] = grid.d_y();
  j["d_x"] = grid.d_x();
  j["N"] = grid.N();
  return j.dump();
}

MixtureDocument mixture_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("mixture JSON: ") + e.what());
  }
  try {
    MixtureDocument doc;
    doc.grid = GridSpec(j.at("d_y").get<int>(), j.at("d_x").get<int>(), j.at("N").get<std::vector<int>>());
    doc.params.weights = j.at("weights").get<std::vector<double>>();
    doc.params.means = j.at("means").get<std::vector<std::vector<double>>>();
    doc.params.scales = j.at("scales").get<std::vector<double>>();
    if (j.at("m").get<int>() != doc.params.m()) throw ShapeError("mixture JSON: m does not match weights length");
    doc.params.validate(doc.grid.d());
    return doc;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("mixture JSON: ") + e.what());
  }
}

}  // namespace mixdc
