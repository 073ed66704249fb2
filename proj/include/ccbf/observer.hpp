#pragma once

#include "ccbf/common.hpp"
#include "ccbf/topology.hpp"

#include <functional>
#include <map>
#include <optional>
#include <vector>

namespace ccbf {

// Agent `owner`'s adaptive estimates of every agent's observed state.
// Index l runs over all N + V agents, including the owner itself.
struct ObserverBank {
  std::size_t owner = 0;
  std::vector<Vec> estimates;  // x^_{i,l}
  std::vector<double> gains;   // delta^_{i,l} >= 0
  std::vector<Mat> weights;    // P_l, SPD
  std::vector<double> leaks;   // sigma_l > 0

  std::size_t n_targets() const { return estimates.size(); }
};

/// Bank with identical weight/leak/initial gain for every target.
ObserverBank make_observer_bank(std::size_t owner, std::vector<Vec> initial_estimates,
                                const Mat& weight, double leak, double initial_gain);

/// Throws ValidationError when a weight is not SPD, a leak is not positive,
/// or a gain is negative.
void validate(const ObserverBank& bank);

/// Estimates x^_{j,l} of the owner's neighbours j, keyed by neighbour index.
using NeighborEstimates = std::map<std::size_t, Vec>;

/// xi_{i,l} = sum_j a_ij (x^_{i,l} - x^_{j,l}) + b_il (x^_{i,l} - x_l).
/// `measurement` must be present exactly when b_il = 1.
Vec innovation(const Topology& topology, const ObserverBank& bank, std::size_t target,
               const NeighborEstimates& neighbor_estimates, const std::optional<Vec>& measurement);

struct ObserverRates {
  Vec estimate_rate;
  double gain_rate = 0.0;
};

/// x^' = f(x^) - delta^ xi;  delta^' = 2 xi^T P xi - sigma delta^.
ObserverRates observer_rates(const ObserverBank& bank, std::size_t target, const Vec& xi,
                             const std::function<Vec(const Vec&)>& drift);

/// Stacked estimate vector with the owner's slot replaced by its true state.
Vec assemble_estimate_vector(const ObserverBank& bank, const Vec& own_state);

/// sqrt(Xi / (lambda_min(H_l) lambda_min(P_l) sigma_l)); Xi is user supplied.
double ultimate_bound_diagnostic(double lambda_min, double p_min, double sigma,
                                 double xi_sum_bound);

}  // namespace ccbf
