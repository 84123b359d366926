#pragma once

#include <stdexcept>
#include <string>

namespace mixdc {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A discrete coordinate value that is not one of the grid points (k - 1/2) / N_j.
class InvalidGridPoint : public Error {
 public:
  using Error::Error;
};

/// Dimension mismatch between grids, parameters, or query points.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Parameter outside its admissible set (weights off the simplex, sigma <= 0, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

class UnsupportedError : public Error {
 public:
  using Error::Error;
};

/// Adaptive quadrature stopped before reaching the requested tolerance.
class ToleranceNotMet : public Error {
 public:
  ToleranceNotMet(const std::string& what, double achieved_error, double requested)
      : Error(what), achieved_error_(achieved_error), requested_(requested) {}

  double achieved_error() const noexcept { return achieved_error_; }
  double requested() const noexcept { return requested_; }

 private:
  double achieved_error_;
  double requested_;
};

/// The lower-bound construction has fewer than 8 rectangles; only the
/// parametric n^{-1/2} regime remains.
class ParametricRegimeError : public Error {
 public:
  using Error::Error;
};

/// Randomized codebook search ran out of attempts.
class ConstructionFailed : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A malformed data row. `row` is zero-based; the message counts from 1.
class DataError : public Error {
 public:
  DataError(const std::string& what, long row) : Error(what + " (row " + std::to_string(row + 1) + ")"), row_(row) {}
  long row() const noexcept { return row_; }

 private:
  long row_;
};

}  // namespace mixdc
