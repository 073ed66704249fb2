#include "ccbf/observer.hpp"

#include <cmath>
#include <sstream>

namespace ccbf {

ObserverBank make_observer_bank(std::size_t owner, std::vector<Vec> initial_estimates,
                                const Mat& weight, double leak, double initial_gain) {
  ObserverBank bank;
  bank.owner = owner;
  const std::size_t n = initial_estimates.size();
  bank.estimates = std::move(initial_estimates);
  bank.gains.assign(n, initial_gain);
  bank.weights.assign(n, weight);
  bank.leaks.assign(n, leak);
  validate(bank);
  return bank;
}

void validate(const ObserverBank& bank) {
  const std::size_t n = bank.estimates.size();
  if (bank.gains.size() != n || bank.weights.size() != n || bank.leaks.size() != n) {
    throw ValidationError("observer bank: per-target arrays have inconsistent sizes");
  }
  if (bank.owner >= n) throw ValidationError("observer bank: owner outside target range");
  for (std::size_t l = 0; l < n; ++l) {
    const Mat& p = bank.weights[l];
    if (p.rows() != bank.estimates[l].size() || p.cols() != p.rows()) {
      throw ValidationError("observer bank: weight P_" + std::to_string(l + 1) + " has wrong shape");
    }
    if (!p.isApprox(p.transpose()) || p.llt().info() != Eigen::Success) {
      throw ValidationError("observer bank: weight P_" + std::to_string(l + 1) +
                            " is not symmetric positive definite");
    }
    if (!(bank.leaks[l] > 0.0)) {
      throw ValidationError("observer bank: sigma_" + std::to_string(l + 1) + " must be positive");
    }
    if (!(bank.gains[l] >= 0.0)) {
      throw ValidationError("observer bank: delta_" + std::to_string(l + 1) + " must be nonnegative");
    }
  }
}

Vec innovation(const Topology& topology, const ObserverBank& bank, std::size_t target,
               const NeighborEstimates& neighbor_estimates, const std::optional<Vec>& measurement) {
  const std::size_t i = bank.owner;
  const Vec& own = bank.estimates.at(target);
  Vec xi = Vec::Zero(own.size());
  for (std::size_t j : topology.neighbors(i)) {
    const auto it = neighbor_estimates.find(j);
    if (it == neighbor_estimates.end()) {
      std::ostringstream msg;
      msg << "innovation: missing estimate from neighbour (i=" << i + 1 << ", j=" << j + 1
          << ", l=" << target + 1 << ")";
      throw std::invalid_argument(msg.str());
    }
    xi += own - it->second;
  }
  const bool measured = topology.measures(i, target) != 0.0;
  if (measured != measurement.has_value()) {
    std::ostringstream msg;
    msg << "innovation: measurement of agent " << target + 1 << " by agent " << i + 1
        << (measured ? " is required" : " is not permitted");
    throw std::invalid_argument(msg.str());
  }
  if (measured) xi += own - *measurement;
  return xi;
}

ObserverRates observer_rates(const ObserverBank& bank, std::size_t target, const Vec& xi,
                             const std::function<Vec(const Vec&)>& drift) {
  const Vec& estimate = bank.estimates.at(target);
  const double gain = bank.gains.at(target);
  ObserverRates r;
  r.estimate_rate = drift(estimate) - gain * xi;
  r.gain_rate = 2.0 * xi.dot(bank.weights.at(target) * xi) - bank.leaks.at(target) * gain;
  return r;
}

Vec assemble_estimate_vector(const ObserverBank& bank, const Vec& own_state) {
  Eigen::Index total = 0;
  for (const Vec& e : bank.estimates) total += e.size();
  Vec stacked(total);
  Eigen::Index offset = 0;
  for (std::size_t l = 0; l < bank.estimates.size(); ++l) {
    const Vec& slot = (l == bank.owner) ? own_state : bank.estimates[l];
    if (slot.size() != bank.estimates[l].size()) {
      throw std::invalid_argument("assemble_estimate_vector: own state has wrong dimension");
    }
    stacked.segment(offset, slot.size()) = slot;
    offset += slot.size();
  }
  return stacked;
}

double ultimate_bound_diagnostic(double lambda_min, double p_min, double sigma,
                                 double xi_sum_bound) {
  if (!(lambda_min > 0.0) || !(p_min > 0.0) || !(sigma > 0.0) || !(xi_sum_bound > 0.0)) {
    throw std::invalid_argument("ultimate_bound_diagnostic: inputs must be positive");
  }
  return std::sqrt(xi_sum_bound / (lambda_min * p_min * sigma));
}

}  // namespace ccbf
