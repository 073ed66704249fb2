#include "ccbf/safety_filter.hpp"

#include <cmath>

namespace ccbf {

ClassKappa ClassKappa::linear(double gain) {
  ClassKappa a;
  a.kind = Kind::linear;
  a.gain = gain;
  validate(a);
  return a;
}

ClassKappa ClassKappa::odd_power(int power, double scale) {
  ClassKappa a;
  a.kind = Kind::odd_power;
  a.power = power;
  a.scale = scale;
  validate(a);
  return a;
}

void validate(const ClassKappa& alpha) {
  if (alpha.kind == ClassKappa::Kind::linear) {
    if (!(alpha.gain > 0.0)) throw ValidationError("class-K linear gain must be positive");
  } else {
    if (alpha.power < 1 || alpha.power % 2 == 0) {
      throw ValidationError("class-K power must be a positive odd integer");
    }
    if (!(alpha.scale > 0.0)) throw ValidationError("class-K scale must be positive");
  }
}

double eval_class_kappa(const ClassKappa& alpha, double v) {
  if (alpha.kind == ClassKappa::Kind::linear) return alpha.gain * v;
  return alpha.scale * std::pow(v, alpha.power);
}

LinearConstraint assemble_distributed_constraint(const Vec& grad_own, std::span<const Vec> grads_others,
                                                 std::span<const Vec> est_rates, double theta_rate,
                                                 double h_hat, const ClassKappa& alpha,
                                                 const Vec& drift, const Mat& actuation) {
  if (grad_own.size() != drift.size() || actuation.rows() != grad_own.size()) {
    throw std::invalid_argument("assemble_distributed_constraint: own gradient, drift and g disagree");
  }
  if (grads_others.size() != est_rates.size()) {
    throw std::invalid_argument("assemble_distributed_constraint: gradients and estimate rates disagree");
  }
  LinearConstraint row;
  row.a = actuation.transpose() * grad_own;
  row.b = -eval_class_kappa(alpha, h_hat) - grad_own.dot(drift) + theta_rate;
  for (std::size_t l = 0; l < grads_others.size(); ++l) {
    if (grads_others[l].size() != est_rates[l].size()) {
      throw std::invalid_argument("assemble_distributed_constraint: dimension mismatch for agent " +
                                  std::to_string(l));
    }
    row.b -= grads_others[l].dot(est_rates[l]);
  }
  return row;
}

LinearConstraint assemble_centralized_constraint(const Topology& topology, std::span<const Vec> grads,
                                                 std::span<const Vec> drifts,
                                                 std::span<const Mat> actuations,
                                                 const ClassKappa& alpha, double h_value) {
  if (topology.n_uncontrollable > 0) {
    throw ValidationError(
        "centralized filter needs every input designable; scenario has uncontrollable agents");
  }
  const std::size_t n = topology.n_agents();
  if (grads.size() != n || drifts.size() != n || actuations.size() != n) {
    throw std::invalid_argument("assemble_centralized_constraint: one gradient/model per agent");
  }
  Eigen::Index total = 0;
  for (const Mat& g : actuations) total += g.cols();
  LinearConstraint row;
  row.a = Vec::Zero(total);
  row.b = -eval_class_kappa(alpha, h_value);
  Eigen::Index offset = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (grads[i].size() != drifts[i].size() || actuations[i].rows() != grads[i].size()) {
      throw std::invalid_argument("assemble_centralized_constraint: dimension mismatch for agent " +
                                  std::to_string(i + 1));
    }
    row.a.segment(offset, actuations[i].cols()) = actuations[i].transpose() * grads[i];
    row.b -= grads[i].dot(drifts[i]);
    offset += actuations[i].cols();
  }
  return row;
}

}  // namespace ccbf
