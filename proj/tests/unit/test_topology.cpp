#include <doctest.h>

#include <random>

#include "ccbf/topology.hpp"
#include "oracles.hpp"

using namespace ccbf;

namespace {

Topology path3() { return make_topology(3, 0, {{0, 1}, {1, 2}}, {}); }

Mat mat3(std::initializer_list<double> v) {
  Mat m(3, 3);
  auto it = v.begin();
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) m(i, j) = *it++;
  return m;
}

Topology random_connected(std::mt19937_64& rng, std::size_t n, std::size_t v) {
  std::vector<std::pair<std::size_t, std::size_t>> edges;
  for (std::size_t k = 1; k < n; ++k) {
    edges.emplace_back(std::uniform_int_distribution<std::size_t>(0, k - 1)(rng), k);
  }
  std::bernoulli_distribution extra(0.3);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (extra(rng)) edges.emplace_back(i, j);
  std::vector<std::pair<std::size_t, std::size_t>> obs;
  for (std::size_t l = 0; l < v; ++l) {
    obs.emplace_back(std::uniform_int_distribution<std::size_t>(0, n - 1)(rng), n + l);
  }
  return make_topology(n, v, edges, obs);
}

}  // namespace

TEST_CASE("laplacian of small graphs") {
  CHECK(laplacian(path3()).isApprox(mat3({1, -1, 0, -1, 2, -1, 0, -1, 1})));
  CHECK(laplacian(make_topology(1, 0, {}, {})) == Mat::Zero(1, 1));
  const Topology k3 = make_topology(3, 0, {{0, 1}, {1, 2}, {0, 2}}, {});
  CHECK(laplacian(k3).isApprox(mat3({2, -1, -1, -1, 2, -1, -1, -1, 2})));
}

TEST_CASE("h_matrix adds the measurement diagonal") {
  CHECK(h_matrix(make_topology(1, 0, {}, {}), 0) == Mat::Ones(1, 1));
  // b_i1 = a_i1 off the diagonal, so agent 2 (adjacent to 1) also enters B_1.
  const Topology t = path3();
  Mat expect = laplacian(t);
  expect(0, 0) += 1.0;
  expect(1, 1) += 1.0;
  CHECK(h_matrix(t, 0).isApprox(expect));
  expect = laplacian(t);
  expect(1, 1) += 1.0;
  expect(0, 0) += 1.0;
  expect(2, 2) += 1.0;
  CHECK(h_matrix(t, 1).isApprox(expect));

  const Topology with_target = make_topology(3, 1, {{0, 1}, {1, 2}}, {{2, 3}});
  expect = laplacian(with_target);
  expect(2, 2) += 1.0;
  CHECK(h_matrix(with_target, 3).isApprox(expect));
}

TEST_CASE("extreme eigenvalues") {
  SUBCASE("uniform measurement diagonal") {
    // L + diag(1,0,0): lambda^3 - 5 lambda^2 + 6 lambda - 1
    Mat h = laplacian(path3());
    h(0, 0) += 1.0;
    const auto roots = oracle::cubic_real_roots(-5.0, 6.0, -1.0);
    const auto c = extreme_eigenvalues(h);
    CHECK(std::abs(c.lambda_min - roots.front()) < 1e-10);
    CHECK(std::abs(c.lambda_max - roots.back()) < 1e-10);
  }

  SUBCASE("trivial matrices") {
    const auto one = extreme_eigenvalues(Mat::Ones(1, 1));
    CHECK(one.lambda_min == doctest::Approx(1.0));
    CHECK(one.lambda_max == doctest::Approx(1.0));
    Mat d = Mat::Zero(2, 2);
    d.diagonal() << 2.0, 5.0;
    const auto c = extreme_eigenvalues(d);
    CHECK(c.lambda_min == doctest::Approx(2.0));
    CHECK(c.lambda_max == doctest::Approx(5.0));
  }

  SUBCASE("H_1 of the path graph matches the cubic roots") {
    // H_1 = [[2,-1,0],[-1,3,-1],[0,-1,1]]: lambda^3 - 6 lambda^2 + 9 lambda - 3
    const auto roots = oracle::cubic_real_roots(-6.0, 9.0, -3.0);
    const auto c = extreme_eigenvalues(h_matrix(path3(), 0), 0);
    CHECK(std::abs(c.lambda_min - roots.front()) < 1e-10);
    CHECK(std::abs(c.lambda_max - roots.back()) < 1e-10);
    CHECK(c.lambda_min > 0.0);
  }

  SUBCASE("non-symmetric input is rejected") {
    Mat m = Mat::Identity(2, 2);
    m(0, 1) = 1.0;
    CHECK_THROWS_AS(extreme_eigenvalues(m), std::invalid_argument);
  }
}

TEST_CASE("jacobi spectrum agrees with the inertia oracle") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 1 + trial % 4;
    Mat a(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) a(i, j) = u(rng);
    const Mat s = a + a.transpose();
    const Vec eig = jacobi_eigenvalues(s);
    for (int k = 0; k < n; ++k) {
      CHECK(std::abs(eig(k) - oracle::bisect_eigenvalue(s, k)) < 1e-8);
    }
  }
}

TEST_CASE("random connected topologies give positive definite H_j") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 1 + static_cast<std::size_t>(trial) % 8;
    const std::size_t v = static_cast<std::size_t>(trial) % 3;
    const Topology t = random_connected(rng, n, v);
    REQUIRE_NOTHROW(validate(t));
    CHECK(laplacian(t).rowwise().sum().cwiseAbs().maxCoeff() == 0.0);
    for (std::size_t j = 0; j < t.n_agents(); ++j) {
      const Mat h = h_matrix(t, j);
      CHECK(h.isApprox(h.transpose(), 0.0));
      CHECK(extreme_eigenvalues(h, j).lambda_min > 0.0);
    }
  }
}

TEST_CASE("observer certificate") {
  SpectralCertificate unit{1.0, 1.0, 0};
  CHECK(check_observer_certificate(unit, 1.0, 0.0, 0.01, 2.0));
  CHECK_FALSE(check_observer_certificate(unit, 1.0, 0.0, 0.01, 1.0));

  const SpectralCertificate c{0.3, 2.7, 0};
  const double p = 1.5;
  const double sigma = 0.2;
  const double threshold = (2.0 * c.lambda_max * p + sigma) / (2.0 * c.lambda_min);
  CHECK(check_observer_certificate(c, p, 0.0, sigma, threshold * 1.001));
  CHECK_FALSE(check_observer_certificate(c, p, 0.0, sigma, threshold * 0.999));

  CHECK_THROWS(check_observer_certificate(unit, 0.0, 0.0, 0.01, 2.0));
  CHECK_THROWS(check_observer_certificate(unit, 1.0, 0.0, -1.0, 2.0));
}

TEST_CASE("topology validation") {
  CHECK_THROWS_AS(validate(make_topology(3, 0, {{0, 1}}, {})), ValidationError);
  CHECK_THROWS_AS(validate(make_topology(2, 1, {{0, 1}}, {})), ValidationError);
  CHECK_NOTHROW(validate(make_topology(2, 1, {{0, 1}}, {{1, 2}})));
  const Topology t = make_topology(3, 1, {{0, 1}, {1, 2}}, {{2, 3}});
  CHECK(t.measures(2, 3) == 1.0);
  CHECK(t.measures(0, 3) == 0.0);
  CHECK(t.measures(1, 1) == 1.0);
  CHECK(t.neighbors(1) == std::vector<std::size_t>{0, 2});
}
