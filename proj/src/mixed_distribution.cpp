#include "mixdc/mixed_distribution.hpp"

#include <algorithm>
#include <cmath>

#include "mixdc/errors.hpp"

namespace mixdc {

MixedDistribution::MixedDistribution(GridSpec grid, MassDensity mass, Sampler sampler,
                                     std::optional<LatentDensity> latent)
    : state_(std::make_shared<const State>(State{std::move(grid), std::move(mass), std::move(sampler), std::move(latent)})) {
  if (!state_->mass) throw DomainError("MixedDistribution: missing mass-density evaluator");
  if (state_->latent && state_->latent->d != state_->grid.d())
    throw ShapeError("MixedDistribution: latent dimension does not match grid");
}

Observation MixedDistribution::sample(Rng& rng) const {
  if (!state_->sampler) throw UnsupportedError("MixedDistribution: no sampler");
  return state_->sampler(rng);
}

const LatentDensity& MixedDistribution::latent() const {
  if (!state_->latent) throw UnsupportedError("MixedDistribution: no latent density");
  return *state_->latent;
}

Observation bin_sample(const GridSpec& grid, std::span<const double> z) {
  if (static_cast<int>(z.size()) != grid.d()) throw ShapeError("bin_sample: wrong latent dimension");
  Observation obs;
  obs.y = bin_latent(grid, z.first(static_cast<std::size_t>(grid.d_y())));
  obs.x.assign(z.begin() + grid.d_y(), z.end());
  return obs;
}

LatentDensity latent_of(const MixtureParams& theta) {
  theta.validate();
  auto params = std::make_shared<const MixtureParams>(theta);
  LatentDensity f;
  f.d = theta.d();
  f.density = [params](std::span<const double> z) { return mixture_latent_density(*params, z); };
  f.sample = [params](Rng& rng, std::span<double> z) {
    const double u = uniform_open(rng);
    double acc = 0.0;
    std::size_t comp = params->weights.size() - 1;
    for (std::size_t j = 0; j < params->weights.size(); ++j) {
      acc += params->weights[j];
      if (u < acc) {
        comp = j;
        break;
      }
    }
    for (int i = 0; i < params->d(); ++i)
      z[static_cast<std::size_t>(i)] =
          params->means[comp][static_cast<std::size_t>(i)] + params->scales[static_cast<std::size_t>(i)] * standard_normal(rng);
  };
  // All but < 1e-32 of the mass per coordinate.
  f.support = effective_box(theta, 12.0);
  return f;
}

MixedDistribution bin(const MixtureParams& theta, const GridSpec& grid) {
  theta.validate(grid.d());
  auto params = std::make_shared<const MixtureParams>(theta);
  LatentDensity latent = latent_of(theta);
  auto mass = [params, grid](const GridPoint& y, std::span<const double> x) {
    return mixture_mixed_density(grid, *params, y, x);
  };
  auto sampler = [draw = latent.sample, grid](Rng& rng) {
    std::vector<double> z(static_cast<std::size_t>(grid.d()));
    draw(rng, z);
    return bin_sample(grid, z);
  };
  return MixedDistribution(grid, mass, sampler, std::move(latent));
}

MixedDistribution bin(const LatentDensity& latent, const GridSpec& grid, const CellQuadrature& quad) {
  if (latent.d != grid.d()) throw ShapeError("bin: latent dimension does not match grid");
  if (!latent.density) throw DomainError("bin: latent density evaluator missing");
  auto mass = [latent, grid, quad](const GridPoint& y, std::span<const double> x) {
    if (static_cast<int>(x.size()) != grid.d_x()) throw ShapeError("bin: wrong x dimension");
    const int dy = grid.d_y();
    std::vector<Interval> box(static_cast<std::size_t>(dy));
    for (int j = 0; j < dy; ++j) {
      Interval side = grid.cell_interval(j, y.levels.at(static_cast<std::size_t>(j)));
      const Interval& sup = latent.support.empty() ? Interval{} : latent.support[static_cast<std::size_t>(j)];
      side.lo = std::max({side.lo, sup.lo, -quad.tail_cutoff});
      side.hi = std::min({side.hi, sup.hi, quad.tail_cutoff});
      if (!(side.lo < side.hi)) return 0.0;
      box[static_cast<std::size_t>(j)] = side;
    }
    std::vector<double> z(static_cast<std::size_t>(grid.d()));
    std::copy(x.begin(), x.end(), z.begin() + dy);
    auto integrand = [&](std::span<const double> ytilde) {
      std::copy(ytilde.begin(), ytilde.end(), z.begin());
      return latent.density(z);
    };
    return integrate_box(integrand, box, quad.tol).value;
  };
  MixedDistribution::Sampler sampler;
  if (latent.sample) {
    sampler = [draw = latent.sample, grid](Rng& rng) {
      std::vector<double> z(static_cast<std::size_t>(grid.d()));
      draw(rng, z);
      return bin_sample(grid, z);
    };
  }
  return MixedDistribution(grid, mass, sampler, latent);
}

MixedDistribution pmf_distribution(const GridSpec& grid, std::vector<double> pmf) {
  if (grid.d_x() != 0) throw UnsupportedError("pmf_distribution: grid has continuous coordinates");
  if (pmf.size() != grid.support_size()) throw ShapeError("pmf_distribution: pmf length does not match grid");
  auto table = std::make_shared<const std::vector<double>>(std::move(pmf));
  auto mass = [table, grid](const GridPoint& y, std::span<const double>) { return (*table)[grid.flat_index(y)]; };
  auto sampler = [table, grid](Rng& rng) {
    const double u = uniform_open(rng);
    double acc = 0.0;
    std::uint64_t k = 0;
    for (; k + 1 < table->size(); ++k) {
      acc += (*table)[k];
      if (u < acc) break;
    }
    return Observation{grid.point_at(k), {}};
  };
  return MixedDistribution(grid, mass, sampler);
}

}  // namespace mixdc
