#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ccbf {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using Vec2 = Eigen::Vector2d;

// Planar position dimension shared by barriers and observers.
inline constexpr std::size_t kPositionDim = 2;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Scenario, topology or argument rejected before any simulation work.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// The strict QP has no feasible point.
class InfeasibleError : public Error {
 public:
  using Error::Error;
};

/// A state or rate went non-finite. `index` is the offending flat component.
class NumericalError : public Error {
 public:
  NumericalError(const std::string& what, std::size_t index)
      : Error(what), index_(index) {}
  std::size_t index() const noexcept { return index_; }

 private:
  std::size_t index_;
};

}  // namespace ccbf
