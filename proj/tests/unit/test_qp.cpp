#include <doctest.h>

#include <random>

#include "ccbf/qp.hpp"
#include "oracles.hpp"

using namespace ccbf;

namespace {

QpProblem plane(const Vec2& nominal) {
  QpProblem p;
  p.weight = Mat::Identity(2, 2);
  p.nominal = nominal;
  return p;
}

QpProblem scalar_problem(double lower, double upper, double need) {
  QpProblem p;
  p.weight = Mat::Ones(1, 1);
  p.nominal = Vec::Zero(1);
  p.lower = Vec::Constant(1, lower);
  p.upper = Vec::Constant(1, upper);
  p.constraints.push_back({Vec::Ones(1), need});
  return p;
}

}  // namespace

TEST_CASE("feasible nominal is returned unchanged") {
  QpProblem p = plane(Vec2(0.3, -0.2));
  p.constraints.push_back({Vec2(1, 0), -1.0});
  p.lower = Vec2(-1, -1);
  p.upper = Vec2(1, 1);
  const QpSolution s = solve_qp(p);
  CHECK(s.argmin == p.nominal);
  CHECK(s.active_set.empty());
  CHECK(s.kkt_residual <= 1e-8);
}

TEST_CASE("projection onto a half-plane") {
  QpProblem p = plane(Vec2(0, 0));
  p.constraints.push_back({Vec2(1, 0), 1.0});
  const QpSolution s = solve_qp(p);
  CHECK(s.argmin.isApprox(Vec2(1, 0)));
  CHECK(s.active_set == std::vector<std::size_t>{0});
  CHECK(s.multipliers(0) == doctest::Approx(1.0));
}

TEST_CASE("weighted projection follows the metric") {
  QpProblem p = plane(Vec2(0, 0));
  p.weight(1, 1) = 0.001296;
  p.constraints.push_back({Vec2(1, 1), 1.0});
  const QpSolution s = solve_qp(p);
  // Minimiser is W^-1 a t with a^T W^-1 a t = 1.
  const Vec2 w_inv_a(1.0, 1.0 / 0.001296);
  CHECK(s.argmin.isApprox(w_inv_a / w_inv_a.sum()));
}

TEST_CASE("random instances agree with the brute-force oracle") {
  std::mt19937_64 rng(42);
  for (int trial = 0; trial < 1000; ++trial) {
    const QpProblem p = oracle::random_qp2(rng);
    const auto expect = oracle::brute_force_qp2(p);
    REQUIRE(expect.has_value());
    const QpSolution s = solve_qp(p);
    CHECK((s.argmin - *expect).norm() <= 1e-6);
    CHECK(s.kkt_residual <= 1e-8);
    CHECK(p.constraints[0].a.dot(s.argmin) >= p.constraints[0].b - 1e-9);
  }
}

TEST_CASE("infeasible and malformed problems") {
  CHECK_THROWS_AS(solve_qp(scalar_problem(0.0, 1.0, 2.0)), InfeasibleError);
  QpProblem bad = plane(Vec2(0, 0));
  bad.weight(0, 0) = -1.0;
  CHECK_THROWS_AS(solve_qp(bad), std::invalid_argument);
  QpProblem crossed = plane(Vec2(0, 0));
  crossed.lower = Vec2(1, 0);
  crossed.upper = Vec2(0, 1);
  CHECK_THROWS_AS(solve_qp(crossed), InfeasibleError);
  CHECK_THROWS_AS(solve_qp_with_slack(crossed), InfeasibleError);
}

TEST_CASE("slack relaxation") {
  SUBCASE("feasible problems need no slack") {
    std::mt19937_64 rng(17);
    for (int trial = 0; trial < 100; ++trial) {
      const QpProblem p = oracle::random_qp2(rng);
      const QpSolution strict = solve_qp(p);
      const QpSolution relaxed = solve_qp_with_slack(p, 1e6);
      CHECK(relaxed.slack_used == doctest::Approx(0.0));
      CHECK((relaxed.argmin - strict.argmin).norm() < 1e-9);
    }
  }
  SUBCASE("box caps the input and slack covers the rest") {
    const QpSolution s = solve_qp_with_slack(scalar_problem(0.0, 1.0, 2.0), 1e6);
    CHECK(s.argmin.size() == 1);
    CHECK(s.argmin(0) == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(s.slack_used == doctest::Approx(1.0).epsilon(1e-9));
  }
  SUBCASE("slack shrinks as the box admits more") {
    double previous = std::numeric_limits<double>::infinity();
    for (int k = 0; k <= 30; ++k) {
      const double upper = 0.5 + 0.05 * k;
      const QpSolution s = solve_qp_with_slack(scalar_problem(0.0, upper, 2.0), 1e6);
      CHECK(s.slack_used <= previous);
      CHECK(s.slack_used == doctest::Approx(std::max(0.0, 2.0 - upper)).epsilon(1e-5));
      previous = s.slack_used;
    }
  }
}
