#include "ccbf/topology.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <sstream>

namespace ccbf {

double Topology::measures(std::size_t observer, std::size_t target) const {
  if (observer == target) return 1.0;
  if (target < n_controllable) return adjacency(observer, target);
  return observation_links(observer, target - n_controllable);
}

std::vector<std::size_t> Topology::neighbors(std::size_t agent) const {
  std::vector<std::size_t> out;
  for (std::size_t j = 0; j < n_controllable; ++j) {
    if (j != agent && adjacency(agent, j) != 0.0) out.push_back(j);
  }
  return out;
}

Topology make_topology(std::size_t n_controllable, std::size_t n_uncontrollable,
                       const std::vector<std::pair<std::size_t, std::size_t>>& edges,
                       const std::vector<std::pair<std::size_t, std::size_t>>& observations) {
  Topology t;
  t.n_controllable = n_controllable;
  t.n_uncontrollable = n_uncontrollable;
  const auto n = static_cast<Eigen::Index>(n_controllable);
  t.adjacency = Mat::Zero(n, n);
  t.observation_links = Mat::Zero(n, static_cast<Eigen::Index>(n_uncontrollable));
  for (auto [i, j] : edges) {
    if (i >= n_controllable || j >= n_controllable || i == j) {
      std::ostringstream msg;
      msg << "edge (" << i + 1 << ", " << j + 1 << ") must join two distinct controllable agents";
      throw ValidationError(msg.str());
    }
    t.adjacency(i, j) = 1.0;
    t.adjacency(j, i) = 1.0;
  }
  for (auto [i, l] : observations) {
    if (i >= n_controllable || l < n_controllable || l >= n_controllable + n_uncontrollable) {
      std::ostringstream msg;
      msg << "observation link (" << i + 1 << ", " << l + 1
          << ") must go from a controllable to an uncontrollable agent";
      throw ValidationError(msg.str());
    }
    t.observation_links(i, l - n_controllable) = 1.0;
  }
  return t;
}

bool is_connected(const Topology& topology) {
  const std::size_t n = topology.n_controllable;
  if (n == 0) return true;
  std::vector<bool> seen(n, false);
  std::queue<std::size_t> frontier;
  frontier.push(0);
  seen[0] = true;
  std::size_t visited = 1;
  while (!frontier.empty()) {
    const std::size_t i = frontier.front();
    frontier.pop();
    for (std::size_t j : topology.neighbors(i)) {
      if (!seen[j]) {
        seen[j] = true;
        ++visited;
        frontier.push(j);
      }
    }
  }
  return visited == n;
}

void validate(const Topology& topology) {
  const auto n = static_cast<Eigen::Index>(topology.n_controllable);
  const auto v = static_cast<Eigen::Index>(topology.n_uncontrollable);
  if (topology.adjacency.rows() != n || topology.adjacency.cols() != n) {
    throw ValidationError("adjacency must be N x N over controllable agents");
  }
  if (topology.observation_links.rows() != n || topology.observation_links.cols() != v) {
    throw ValidationError("observation links must be N x V");
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    if (topology.adjacency(i, i) != 0.0) {
      throw ValidationError("adjacency has a self edge at agent " + std::to_string(i + 1));
    }
    for (Eigen::Index j = 0; j < n; ++j) {
      const double a = topology.adjacency(i, j);
      if ((a != 0.0 && a != 1.0) || a != topology.adjacency(j, i)) {
        throw ValidationError("adjacency must be a symmetric 0/1 matrix");
      }
    }
    for (Eigen::Index l = 0; l < v; ++l) {
      const double a = topology.observation_links(i, l);
      if (a != 0.0 && a != 1.0) throw ValidationError("observation links must be 0/1");
    }
  }
  if (n == 0 && v > 0) {
    throw ValidationError("uncontrollable agents need a controllable observer");
  }
  if (!is_connected(topology)) {
    throw ValidationError("controllable communication graph is not connected");
  }
  for (Eigen::Index l = 0; l < v; ++l) {
    if (topology.observation_links.col(l).sum() < 1.0) {
      throw ValidationError("uncontrollable agent " +
                            std::to_string(topology.n_controllable + static_cast<std::size_t>(l) + 1) +
                            " is not observed by any controllable agent");
    }
  }
}

Mat laplacian(const Topology& topology) {
  const Mat& a = topology.adjacency;
  Mat l = -a;
  for (Eigen::Index i = 0; i < a.rows(); ++i) l(i, i) = a.row(i).sum();
  return l;
}

Mat h_matrix(const Topology& topology, std::size_t target) {
  if (target >= topology.n_agents()) {
    throw std::out_of_range("h_matrix: target " + std::to_string(target + 1) + " is not an agent");
  }
  validate(topology);
  Mat h = laplacian(topology);
  for (std::size_t i = 0; i < topology.n_controllable; ++i) {
    const auto k = static_cast<Eigen::Index>(i);
    h(k, k) += topology.measures(i, target);
  }
  return h;
}

Vec jacobi_eigenvalues(const Mat& m) {
  if (m.rows() != m.cols()) throw std::invalid_argument("jacobi_eigenvalues: matrix is not square");
  const Eigen::Index n = m.rows();
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      if (std::abs(m(i, j) - m(j, i)) > 1e-12 * scale) {
        throw std::invalid_argument("jacobi_eigenvalues: matrix is not symmetric");
      }
    }
  }

  Mat a = 0.5 * (m + m.transpose());
  const double total = a.norm();
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = i + 1; j < n; ++j) off += a(i, j) * a(i, j);
    if (std::sqrt(off) <= 1e-15 * total || off == 0.0) break;

    for (Eigen::Index p = 0; p < n - 1; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        // Rotation angle that zeroes a(p, q); t is the smaller root of
        // t^2 + 2 t tau - 1 = 0.
        const double tau = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (tau >= 0.0 ? 1.0 : -1.0) / (std::abs(tau) + std::sqrt(1.0 + tau * tau));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = t * c;
        for (Eigen::Index k = 0; k < n; ++k) {
          const double akp = a(k, p);
          const double akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const double apk = a(p, k);
          const double aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        a(p, q) = 0.0;
        a(q, p) = 0.0;
      }
    }
  }
  Vec eig = a.diagonal();
  std::sort(eig.data(), eig.data() + eig.size());
  return eig;
}

SpectralCertificate extreme_eigenvalues(const Mat& m, std::size_t matrix_index) {
  if (m.rows() == 0) throw std::invalid_argument("extreme_eigenvalues: empty matrix");
  const Vec eig = jacobi_eigenvalues(m);
  return {eig(0), eig(eig.size() - 1), matrix_index};
}

bool check_observer_certificate(const SpectralCertificate& cert, double p, double lipschitz,
                                double sigma, double delta) {
  if (!(p > 0.0)) throw std::invalid_argument("observer certificate: p must be positive");
  if (!(sigma > 0.0)) throw std::invalid_argument("observer certificate: sigma must be positive");
  if (!(delta > 0.0)) throw std::invalid_argument("observer certificate: delta must be positive");
  if (!(cert.lambda_min > 0.0)) return false;
  const double lhs = 2.0 * cert.lambda_max * p * p + lipschitz * lipschitz / cert.lambda_min -
                     2.0 * cert.lambda_min * delta * p + sigma * p;
  return lhs < 0.0;
}

}  // namespace ccbf
