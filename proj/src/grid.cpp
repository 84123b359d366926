#include "mixdc/grid.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "mixdc/errors.hpp"

namespace mixdc {

bool Cell::contains(std::span<const double> latent) const {
  if (latent.size() < sides.size()) throw ShapeError("Cell::contains: latent vector too short");
  for (std::size_t j = 0; j < sides.size(); ++j)
    if (!sides[j].contains(latent[j])) return false;
  return true;
}

GridSpec::GridSpec(int d_y, int d_x, std::vector<int> points_per_coordinate)
    : d_y_(d_y), d_x_(d_x), n_(std::move(points_per_coordinate)) {
  if (d_y < 0 || d_x < 0) throw ShapeError("GridSpec: negative dimension");
  if (d_y + d_x < 1) throw ShapeError("GridSpec: total dimension must be at least 1");
  if (static_cast<int>(n_.size()) != d_y)
    throw ShapeError("GridSpec: expected " + std::to_string(d_y) + " point counts, got " +
                     std::to_string(n_.size()));
  support_ = 1;
  for (int nj : n_) {
    if (nj < 1) throw DomainError("GridSpec: N_j must be >= 1");
    if (support_ > kMaxSupport / static_cast<std::uint64_t>(nj))
      throw UnsupportedError("GridSpec: discrete support size exceeds 2^40");
    support_ *= static_cast<std::uint64_t>(nj);
  }
}

double GridSpec::point_value(int j, int level) const {
  const int nj = N(j);
  if (level < 0 || level >= nj) throw InvalidGridPoint("level out of range");
  return (level + 0.5) / nj;
}

Interval GridSpec::cell_interval(int j, int level) const {
  const int nj = N(j);
  if (level < 0 || level >= nj)
    throw InvalidGridPoint("cell_interval: level " + std::to_string(level) + " out of range for N=" +
                           std::to_string(nj));
  Interval iv;
  iv.lo = level == 0 ? -kInf : static_cast<double>(level) / nj;
  iv.hi = level == nj - 1 ? kInf : static_cast<double>(level + 1) / nj;
  return iv;
}

int GridSpec::level_of(int j, double latent) const {
  const int nj = N(j);
  if (std::isnan(latent)) throw DomainError("level_of: NaN latent value");
  if (nj == 1) return 0;
  double scaled = std::ceil(latent * nj) - 1.0;
  if (scaled < 0.0) return 0;
  if (scaled > nj - 1) return nj - 1;
  int k = static_cast<int>(scaled);
  // Correct one-ulp disagreements with the stored boundaries k/N.
  if (k > 0 && latent <= static_cast<double>(k) / nj) --k;
  if (k < nj - 1 && latent > static_cast<double>(k + 1) / nj) ++k;
  return k;
}

int GridSpec::level_of_value(int j, double value) const {
  const int nj = N(j);
  const double k = value * nj - 0.5;
  const double r = std::round(k);
  if (!(std::abs(k - r) <= 1e-9 * std::max(1.0, std::abs(k))) || r < 0 || r > nj - 1) {
    std::ostringstream os;
    os << "value " << value << " is not a grid point for N=" << nj;
    throw InvalidGridPoint(os.str());
  }
  return static_cast<int>(r);
}

GridPoint GridSpec::point_at(std::uint64_t flat) const {
  if (flat >= support_) throw InvalidGridPoint("point_at: flat index out of range");
  GridPoint y;
  y.levels.resize(static_cast<std::size_t>(d_y_));
  for (int j = d_y_ - 1; j >= 0; --j) {
    const auto nj = static_cast<std::uint64_t>(n_[static_cast<std::size_t>(j)]);
    y.levels[static_cast<std::size_t>(j)] = static_cast<int>(flat % nj);
    flat /= nj;
  }
  return y;
}

std::uint64_t GridSpec::flat_index(const GridPoint& y) const {
  validate(y);
  std::uint64_t flat = 0;
  for (int j = 0; j < d_y_; ++j)
    flat = flat * static_cast<std::uint64_t>(n_[static_cast<std::size_t>(j)]) +
           static_cast<std::uint64_t>(y.levels[static_cast<std::size_t>(j)]);
  return flat;
}

void GridSpec::validate(const GridPoint& y) const {
  if (static_cast<int>(y.levels.size()) != d_y_)
    throw ShapeError("grid point has " + std::to_string(y.levels.size()) + " coordinates, expected " +
                     std::to_string(d_y_));
  for (int j = 0; j < d_y_; ++j) {
    const int k = y.levels[static_cast<std::size_t>(j)];
    if (k < 0 || k >= n_[static_cast<std::size_t>(j)])
      throw InvalidGridPoint("grid point level " + std::to_string(k) + " out of range in coordinate " +
                             std::to_string(j));
  }
}

std::vector<double> GridSpec::values(const GridPoint& y) const {
  validate(y);
  std::vector<double> out(static_cast<std::size_t>(d_y_));
  for (int j = 0; j < d_y_; ++j) out[static_cast<std::size_t>(j)] = point_value(j, y.levels[static_cast<std::size_t>(j)]);
  return out;
}

std::string GridSpec::to_string() const {
  std::ostringstream os;
  for (std::size_t j = 0; j < n_.size(); ++j) os << (j ? "," : "") << n_[j];
  os << ';' << d_x_;
  return os.str();
}

GridSpec GridSpec::parse(const std::string& text) {
  const auto semi = text.find(';');
  if (semi == std::string::npos) throw ConfigError("grid spec must look like \"N1,N2;dx\": " + text);
  std::vector<int> n;
  std::string head = text.substr(0, semi);
  std::stringstream ss(head);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (tok.empty()) continue;
    try {
      n.push_back(std::stoi(tok));
    } catch (const std::exception&) {
      throw ConfigError("bad point count in grid spec: " + tok);
    }
  }
  int dx = 0;
  try {
    dx = std::stoi(text.substr(semi + 1));
  } catch (const std::exception&) {
    throw ConfigError("bad continuous dimension in grid spec: " + text);
  }
  const int dy = static_cast<int>(n.size());
  return GridSpec(dy, dx, std::move(n));
}

Cell cell_of(const GridSpec& grid, const GridPoint& y) {
  grid.validate(y);
  Cell c;
  c.sides.reserve(static_cast<std::size_t>(grid.d_y()));
  for (int j = 0; j < grid.d_y(); ++j) c.sides.push_back(grid.cell_interval(j, y.levels[static_cast<std::size_t>(j)]));
  return c;
}

Cell cell_of(const GridSpec& grid, std::span<const double> y_values) {
  if (static_cast<int>(y_values.size()) != grid.d_y()) throw ShapeError("cell_of: wrong number of discrete values");
  GridPoint y;
  for (int j = 0; j < grid.d_y(); ++j) y.levels.push_back(grid.level_of_value(j, y_values[static_cast<std::size_t>(j)]));
  return cell_of(grid, y);
}

GridPoint bin_latent(const GridSpec& grid, std::span<const double> latent) {
  if (static_cast<int>(latent.size()) < grid.d_y()) throw ShapeError("bin_latent: latent vector too short");
  GridPoint y;
  y.levels.resize(static_cast<std::size_t>(grid.d_y()));
  for (int j = 0; j < grid.d_y(); ++j) y.levels[static_cast<std::size_t>(j)] = grid.level_of(j, latent[static_cast<std::size_t>(j)]);
  return y;
}

}  // namespace mixdc
