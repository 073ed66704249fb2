#pragma once

#include "ccbf/common.hpp"

#include <vector>

namespace ccbf {

/// a^T nu >= b.
struct LinearConstraint {
  Vec a;
  double b = 0.0;
};

// min 1/2 (nu - nominal)^T W (nu - nominal)
//  s.t. a_k^T nu >= b_k for every general constraint, lower <= nu <= upper.
// Empty lower/upper mean no box; infinite entries drop that side.
struct QpProblem {
  Mat weight;
  Vec nominal;
  std::vector<LinearConstraint> constraints;
  Vec lower;
  Vec upper;
};

inline constexpr std::size_t kMaxQpVariables = 8;
inline constexpr std::size_t kMaxQpConstraints = 16;
inline constexpr double kDefaultSlackPenalty = 1e6;

// Active-set indices: general constraints first (0..k-1), then finite lower
// bounds in variable order, then finite upper bounds in variable order.
struct QpSolution {
  Vec argmin;
  std::vector<std::size_t> active_set;
  Vec multipliers;  // one per constraint in the indexing above
  double slack_used = 0.0;
  double kkt_residual = 0.0;
};

/// Exact minimiser by enumerating candidate active sets in order of size, then
/// lexicographically. Throws InfeasibleError when no candidate satisfies the
/// KKT conditions and std::invalid_argument on a malformed problem.
QpSolution solve_qp(const QpProblem& problem);

/// Returns the strict solution when one exists. Otherwise each general
/// constraint becomes a^T nu + s_k >= b_k with s_k >= 0 and a penalty * s_k^2
/// objective term. The box is never relaxed.
QpSolution solve_qp_with_slack(const QpProblem& problem, double penalty = kDefaultSlackPenalty);

/// Scaled max violation of stationarity, primal and dual feasibility, and
/// complementary slackness for `solution` against `problem`.
double kkt_residual(const QpProblem& problem, const Vec& argmin, const Vec& multipliers);

}  // namespace ccbf
