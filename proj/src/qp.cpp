#include "ccbf/qp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace ccbf {
namespace {

// All inequality rows of a problem in the documented index order.
struct Rows {
  Mat a;  // one row per constraint
  Vec b;
  std::vector<Eigen::Index> box_var;  // -1 for general rows
};

Rows collect_rows(const QpProblem& p) {
  const Eigen::Index m = p.nominal.size();
  std::vector<Vec> as;
  std::vector<double> bs;
  std::vector<Eigen::Index> vars;
  for (const auto& c : p.constraints) {
    as.push_back(c.a);
    bs.push_back(c.b);
    vars.push_back(-1);
  }
  if (p.lower.size() == m) {
    for (Eigen::Index j = 0; j < m; ++j) {
      if (!std::isfinite(p.lower(j))) continue;
      Vec a = Vec::Zero(m);
      a(j) = 1.0;
      as.push_back(a);
      bs.push_back(p.lower(j));
      vars.push_back(j);
    }
  }
  if (p.upper.size() == m) {
    for (Eigen::Index j = 0; j < m; ++j) {
      if (!std::isfinite(p.upper(j))) continue;
      Vec a = Vec::Zero(m);
      a(j) = -1.0;
      as.push_back(a);
      bs.push_back(-p.upper(j));
      vars.push_back(j);
    }
  }
  Rows r;
  r.a.resize(static_cast<Eigen::Index>(as.size()), m);
  r.b.resize(static_cast<Eigen::Index>(bs.size()));
  for (std::size_t k = 0; k < as.size(); ++k) {
    r.a.row(static_cast<Eigen::Index>(k)) = as[k].transpose();
    r.b(static_cast<Eigen::Index>(k)) = bs[k];
  }
  r.box_var = std::move(vars);
  return r;
}

void check_problem(const QpProblem& p) {
  const Eigen::Index m = p.nominal.size();
  if (m == 0 || static_cast<std::size_t>(m) > kMaxQpVariables) {
    throw std::invalid_argument("solve_qp: variable count must be in [1, 8]");
  }
  if (p.weight.rows() != m || p.weight.cols() != m) {
    throw std::invalid_argument("solve_qp: weight must be m x m");
  }
  if (!p.weight.isApprox(p.weight.transpose()) || p.weight.llt().info() != Eigen::Success) {
    throw std::invalid_argument("solve_qp: weight is not symmetric positive definite");
  }
  for (const auto& c : p.constraints) {
    if (c.a.size() != m) throw std::invalid_argument("solve_qp: constraint dimension mismatch");
    if (!c.a.allFinite() || !std::isfinite(c.b)) {
      throw std::invalid_argument("solve_qp: non-finite constraint");
    }
  }
  if ((p.lower.size() != 0 && p.lower.size() != m) || (p.upper.size() != 0 && p.upper.size() != m)) {
    throw std::invalid_argument("solve_qp: box dimension mismatch");
  }
  if (p.lower.size() == m && p.upper.size() == m && (p.lower.array() > p.upper.array()).any()) {
    throw InfeasibleError("solve_qp: box has lower > upper");
  }
  if (!p.nominal.allFinite()) throw std::invalid_argument("solve_qp: non-finite nominal");
}

double tolerance_for(const Vec& a, double b, const Vec& x) {
  return 1e-9 * (1.0 + std::abs(b) + a.cwiseAbs().dot(x.cwiseAbs()));
}

// Advances `idx` to the next k-combination of {0..n-1} in lexicographic order.
bool next_combination(std::vector<std::size_t>& idx, std::size_t n) {
  const std::size_t k = idx.size();
  for (std::size_t pos = k; pos-- > 0;) {
    if (idx[pos] < n - k + pos) {
      ++idx[pos];
      for (std::size_t q = pos + 1; q < k; ++q) idx[q] = idx[q - 1] + 1;
      return true;
    }
  }
  return false;
}

}  // namespace

double kkt_residual(const QpProblem& problem, const Vec& argmin, const Vec& multipliers) {
  const Rows rows = collect_rows(problem);
  const Vec grad = problem.weight * (argmin - problem.nominal);
  const Vec pull = rows.a.transpose() * multipliers;
  const double scale = std::max({1.0, grad.lpNorm<Eigen::Infinity>(), pull.lpNorm<Eigen::Infinity>()});
  double worst = (grad - pull).lpNorm<Eigen::Infinity>() / scale;
  for (Eigen::Index k = 0; k < rows.b.size(); ++k) {
    const Vec a = rows.a.row(k).transpose();
    const double slack = a.dot(argmin) - rows.b(k);
    const double row_scale = 1.0 + std::abs(rows.b(k)) + a.cwiseAbs().dot(argmin.cwiseAbs());
    worst = std::max(worst, std::max(0.0, -slack) / row_scale);
    worst = std::max(worst, std::max(0.0, -multipliers(k)) / scale);
    worst = std::max(worst, std::abs(multipliers(k) * slack) / (scale * row_scale));
  }
  return worst;
}

QpSolution solve_qp(const QpProblem& problem) {
  check_problem(problem);
  const Rows rows = collect_rows(problem);
  const Eigen::Index m = problem.nominal.size();
  const std::size_t n_rows = static_cast<std::size_t>(rows.b.size());
  if (n_rows > kMaxQpConstraints) {
    throw std::invalid_argument("solve_qp: at most 16 constraints (general + box) supported");
  }
  const Vec w_nom = problem.weight * problem.nominal;
  const std::size_t max_active = std::min(n_rows, static_cast<std::size_t>(m));

  for (std::size_t k = 0; k <= max_active; ++k) {
    std::vector<std::size_t> idx(k);
    for (std::size_t q = 0; q < k; ++q) idx[q] = q;
    do {
      // Lower and upper bound of one variable cannot both be active.
      bool clash = false;
      for (std::size_t p = 0; p < k && !clash; ++p)
        for (std::size_t q = p + 1; q < k && !clash; ++q)
          clash = rows.box_var[idx[p]] >= 0 && rows.box_var[idx[p]] == rows.box_var[idx[q]];
      if (clash) continue;

      const auto ka = static_cast<Eigen::Index>(k);
      Mat kkt = Mat::Zero(m + ka, m + ka);
      Vec rhs(m + ka);
      kkt.topLeftCorner(m, m) = problem.weight;
      rhs.head(m) = w_nom;
      for (Eigen::Index q = 0; q < ka; ++q) {
        const auto row = static_cast<Eigen::Index>(idx[static_cast<std::size_t>(q)]);
        kkt.block(0, m + q, m, 1) = -rows.a.row(row).transpose();
        kkt.block(m + q, 0, 1, m) = rows.a.row(row);
        rhs(m + q) = rows.b(row);
      }
      const Eigen::FullPivLU<Mat> lu(kkt);
      if (!lu.isInvertible()) continue;
      const Vec sol = lu.solve(rhs);
      const Vec nu = sol.head(m);

      bool ok = nu.allFinite();
      for (Eigen::Index q = 0; q < ka && ok; ++q) ok = sol(m + q) >= -1e-10 * (1.0 + sol.tail(ka).cwiseAbs().maxCoeff());
      for (Eigen::Index r = 0; r < rows.b.size() && ok; ++r) {
        const Vec a = rows.a.row(r).transpose();
        ok = a.dot(nu) >= rows.b(r) - tolerance_for(a, rows.b(r), nu);
      }
      if (!ok) continue;

      QpSolution out;
      out.argmin = nu;
      out.multipliers = Vec::Zero(rows.b.size());
      for (Eigen::Index q = 0; q < ka; ++q) {
        out.multipliers(static_cast<Eigen::Index>(idx[static_cast<std::size_t>(q)])) =
            std::max(0.0, sol(m + q));
      }
      out.active_set = idx;
      out.kkt_residual = kkt_residual(problem, out.argmin, out.multipliers);
      return out;
    } while (k > 0 && next_combination(idx, n_rows));
  }
  throw InfeasibleError("solve_qp: constraint system is infeasible");
}

QpSolution solve_qp_with_slack(const QpProblem& problem, double penalty) {
  if (!(penalty > 0.0)) throw std::invalid_argument("solve_qp_with_slack: penalty must be positive");
  check_problem(problem);
  try {
    return solve_qp(problem);
  } catch (const InfeasibleError&) {
  }
  const Eigen::Index m = problem.nominal.size();
  const auto k = static_cast<Eigen::Index>(problem.constraints.size());
  if (static_cast<std::size_t>(m + k) > kMaxQpVariables) {
    throw std::invalid_argument("solve_qp_with_slack: too many variables after adding slacks");
  }

  QpProblem aug;
  aug.weight = Mat::Zero(m + k, m + k);
  aug.weight.topLeftCorner(m, m) = problem.weight;
  aug.weight.bottomRightCorner(k, k) = 2.0 * penalty * Mat::Identity(k, k);
  aug.nominal = Vec::Zero(m + k);
  aug.nominal.head(m) = problem.nominal;
  for (Eigen::Index q = 0; q < k; ++q) {
    LinearConstraint c;
    c.a = Vec::Zero(m + k);
    c.a.head(m) = problem.constraints[static_cast<std::size_t>(q)].a;
    c.a(m + q) = 1.0;
    c.b = problem.constraints[static_cast<std::size_t>(q)].b;
    aug.constraints.push_back(std::move(c));
  }
  const double inf = std::numeric_limits<double>::infinity();
  aug.lower = Vec::Constant(m + k, -inf);
  aug.upper = Vec::Constant(m + k, inf);
  if (problem.lower.size() == m) aug.lower.head(m) = problem.lower;
  if (problem.upper.size() == m) aug.upper.head(m) = problem.upper;
  aug.lower.tail(k).setZero();

  QpSolution s = solve_qp(aug);

  QpSolution out;
  out.argmin = s.argmin.head(m);
  out.slack_used = k > 0 ? s.argmin.tail(k).cwiseMax(0.0).maxCoeff() : 0.0;
  out.kkt_residual = s.kkt_residual;
  // Map augmented indices back: general rows keep their index; slack lower
  // bounds are dropped; original box rows shift back into place.
  const Rows orig = collect_rows(problem);
  const Rows augr = collect_rows(aug);
  out.multipliers = Vec::Zero(orig.b.size());
  for (Eigen::Index q = 0; q < k; ++q) out.multipliers(q) = s.multipliers(q);
  for (std::size_t r = static_cast<std::size_t>(k); r < augr.box_var.size(); ++r) {
    const Eigen::Index var = augr.box_var[r];
    if (var >= m) continue;
    const bool is_lower = augr.a(static_cast<Eigen::Index>(r), var) > 0.0;
    for (std::size_t o = static_cast<std::size_t>(k); o < orig.box_var.size(); ++o) {
      if (orig.box_var[o] == var && (orig.a(static_cast<Eigen::Index>(o), var) > 0.0) == is_lower) {
        out.multipliers(static_cast<Eigen::Index>(o)) = s.multipliers(static_cast<Eigen::Index>(r));
      }
    }
  }
  for (Eigen::Index r = 0; r < out.multipliers.size(); ++r) {
    if (out.multipliers(r) > 0.0) out.active_set.push_back(static_cast<std::size_t>(r));
  }
  return out;
}

}  // namespace ccbf
