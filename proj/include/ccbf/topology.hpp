#pragma once

#include "ccbf/common.hpp"

#include <utility>
#include <vector>

namespace ccbf {

// Agents are indexed 0..N-1 (controllable) then N..N+V-1 (uncontrollable).
struct Topology {
  std::size_t n_controllable = 0;
  std::size_t n_uncontrollable = 0;
  Mat adjacency;          // N x N, symmetric 0/1, zero diagonal
  Mat observation_links;  // N x V, a_il for controllable i, uncontrollable l

  std::size_t n_agents() const { return n_controllable + n_uncontrollable; }
  bool is_controllable(std::size_t agent) const { return agent < n_controllable; }

  /// b_il: 1 on the diagonal, a_il otherwise (adjacency or observation link).
  double measures(std::size_t observer, std::size_t target) const;

  /// Controllable neighbours j of controllable agent i (a_ij = 1), ascending.
  std::vector<std::size_t> neighbors(std::size_t agent) const;
};

/// Builds a topology from undirected controllable edges and (observer, target)
/// observation links, both 0-based. Does not check connectivity.
Topology make_topology(std::size_t n_controllable, std::size_t n_uncontrollable,
                       const std::vector<std::pair<std::size_t, std::size_t>>& edges,
                       const std::vector<std::pair<std::size_t, std::size_t>>& observations);

bool is_connected(const Topology& topology);

/// Throws ValidationError if the adjacency is malformed or the observability requirements fail
/// (controllable graph connected, every uncontrollable agent observed).
void validate(const Topology& topology);

Mat laplacian(const Topology& topology);

/// H_j = L + B_j with B_j = diag(b_1j, ..., b_Nj).
Mat h_matrix(const Topology& topology, std::size_t target);

struct SpectralCertificate {
  double lambda_min = 0.0;
  double lambda_max = 0.0;
  std::size_t matrix_index = 0;
};

/// All eigenvalues of a symmetric matrix, ascending, by cyclic Jacobi sweeps.
Vec jacobi_eigenvalues(const Mat& m);

SpectralCertificate extreme_eigenvalues(const Mat& m, std::size_t matrix_index = 0);

/// Scalar-weight (P = pI) form of the observer gain condition:
/// 2 lmax p^2 + L1^2 / lmin - 2 lmin delta p + sigma p < 0.
bool check_observer_certificate(const SpectralCertificate& cert, double p,
                                double lipschitz, double sigma, double delta);

}  // namespace ccbf
