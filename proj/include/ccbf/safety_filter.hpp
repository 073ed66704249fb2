#pragma once

#include "ccbf/common.hpp"
#include "ccbf/qp.hpp"
#include "ccbf/topology.hpp"

#include <span>

namespace ccbf {

// Extended class-K function: linear k v, or scale * v^p with odd p.
struct ClassKappa {
  enum class Kind { linear, odd_power };
  Kind kind = Kind::linear;
  double gain = 1.0;  // linear
  int power = 1;      // odd_power
  double scale = 1.0; // odd_power

  static ClassKappa linear(double gain);
  static ClassKappa odd_power(int power, double scale);
};

void validate(const ClassKappa& alpha);
double eval_class_kappa(const ClassKappa& alpha, double v);

/// Row of the distributed filter, a^T u_i >= b, from
///   dh/dx_i (f + g u_i) + sum_l dh/dx^_{i,l} x^'_{i,l} - theta' >= -alpha(h^).
/// `grad_own` is over agent i's full state; `grads_others[l]` and
/// `est_rates[l]` pair up over the other agents' observed states.
LinearConstraint assemble_distributed_constraint(const Vec& grad_own, std::span<const Vec> grads_others,
                                                 std::span<const Vec> est_rates, double theta_rate,
                                                 double h_hat, const ClassKappa& alpha,
                                                 const Vec& drift, const Mat& actuation);

/// Row over the stacked input of all agents for
///   sum_i dh/dx_i (f_i + g_i u_i) >= -alpha(h).
/// Refuses topologies with uncontrollable agents.
LinearConstraint assemble_centralized_constraint(const Topology& topology, std::span<const Vec> grads,
                                                 std::span<const Vec> drifts,
                                                 std::span<const Mat> actuations,
                                                 const ClassKappa& alpha, double h_value);

}  // namespace ccbf
