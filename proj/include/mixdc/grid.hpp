#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace mixdc {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Half-open interval (lo, hi]; either end may be infinite.
struct Interval {
  double lo = -kInf;
  double hi = kInf;

  bool contains(double v) const noexcept { return v > lo && v <= hi; }
  bool bounded() const noexcept { return lo > -kInf && hi < kInf; }
  double width() const noexcept { return hi - lo; }

  friend bool operator==(const Interval&, const Interval&) = default;
};

/// Zero-based level index per discrete coordinate; level k stands for the
/// grid value (k + 1/2) / N_j.
struct GridPoint {
  std::vector<int> levels;

  friend bool operator==(const GridPoint&, const GridPoint&) = default;
};

/// Product cell A_y: one interval per discrete coordinate.
struct Cell {
  std::vector<Interval> sides;

  bool contains(std::span<const double> latent) const;
};

/// Discrete grid on [0,1]^{d_y} with N_j points per coordinate, plus d_x
/// continuous coordinates.
class GridSpec {
 public:
  /// Largest supported discrete support size; larger grids are refused.
  static constexpr std::uint64_t kMaxSupport = std::uint64_t{1} << 40;

  GridSpec() = default;
  GridSpec(int d_y, int d_x, std::vector<int> points_per_coordinate);

  /// Grid with no discrete coordinates.
  static GridSpec continuous(int d_x) { return GridSpec(0, d_x, {}); }

  int d_y() const noexcept { return d_y_; }
  int d_x() const noexcept { return d_x_; }
  int d() const noexcept { return d_y_ + d_x_; }
  const std::vector<int>& N() const noexcept { return n_; }
  int N(int j) const { return n_.at(static_cast<std::size_t>(j)); }

  /// Product of N_j (1 when d_y = 0).
  std::uint64_t support_size() const noexcept { return support_; }

  double point_value(int j, int level) const;
  Interval cell_interval(int j, int level) const;

  /// Level whose cell contains the latent value; boundary values belong to
  /// the cell on their left, matching the (lo, hi] convention.
  int level_of(int j, double latent) const;

  /// Level of an exact grid value (k - 1/2)/N_j; throws InvalidGridPoint otherwise.
  int level_of_value(int j, double value) const;

  GridPoint point_at(std::uint64_t flat) const;
  std::uint64_t flat_index(const GridPoint& y) const;
  void validate(const GridPoint& y) const;

  std::vector<double> values(const GridPoint& y) const;

  /// "N1,N2;dx" (the d_y part is empty when there are no discrete coordinates).
  std::string to_string() const;
  static GridSpec parse(const std::string& text);

  friend bool operator==(const GridSpec& a, const GridSpec& b) {
    return a.d_y_ == b.d_y_ && a.d_x_ == b.d_x_ && a.n_ == b.n_;
  }

 private:
  int d_y_ = 0;
  int d_x_ = 0;
  std::vector<int> n_;
  std::uint64_t support_ = 1;
};

Cell cell_of(const GridSpec& grid, const GridPoint& y);

/// Cell lookup from grid values (k - 1/2)/N_j.
Cell cell_of(const GridSpec& grid, std::span<const double> y_values);

/// Grid point whose cell contains the latent discrete coordinates.
GridPoint bin_latent(const GridSpec& grid, std::span<const double> latent);

}  // namespace mixdc
