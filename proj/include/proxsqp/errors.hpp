#pragma once

#include <stdexcept>
#include <string>

namespace proxsqp {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

class NonFiniteInput : public Error {
 public:
  using Error::Error;
};

/// A matrix expected to have full row rank does not. Carries the offending
/// singular value (as double, whatever the working precision).
class RankDeficient : public Error {
 public:
  RankDeficient(double sigma_min, double tolerance)
      : Error("rank deficient: smallest singular value " + std::to_string(sigma_min) +
              " <= " + std::to_string(tolerance)),
        sigma_min_(sigma_min),
        tolerance_(tolerance) {}
  double sigma_min() const { return sigma_min_; }
  double tolerance() const { return tolerance_; }

 private:
  double sigma_min_;
  double tolerance_;
};

/// The eigengap separating the tracked top-r block collapsed; the local chart
/// of the eigenvalue-multiplicity manifold is no longer valid.
class GapCollapse : public Error {
 public:
  GapCollapse(double gap, double tolerance)
      : Error("eigengap " + std::to_string(gap) + " below " + std::to_string(tolerance)),
        gap_(gap),
        tolerance_(tolerance) {}
  double gap() const { return gap_; }
  double tolerance() const { return tolerance_; }

 private:
  double gap_;
  double tolerance_;
};

class IndefiniteReducedHessian : public Error {
 public:
  explicit IndefiniteReducedHessian(double min_eig)
      : Error("reduced Hessian not positive definite, min eigenvalue " + std::to_string(min_eig)),
        min_eig_(min_eig) {}
  double min_eig() const { return min_eig_; }

 private:
  double min_eig_;
};

class DataError : public Error {
 public:
  using Error::Error;
};

}  // namespace proxsqp
