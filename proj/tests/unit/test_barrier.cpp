#include <doctest.h>

#include <cmath>
#include <random>

#include "ccbf/barrier.hpp"
#include "fixtures.hpp"

using namespace ccbf;

namespace {

Vec positions(std::initializer_list<double> v) {
  Vec p(static_cast<Eigen::Index>(v.size()));
  Eigen::Index k = 0;
  for (double x : v) p(k++) = x;
  return p;
}

}  // namespace

TEST_CASE("primitive values and gradients") {
  SUBCASE("circle avoidance") {
    const auto c = PrimitiveConstraint::circle_avoid(0, Vec2(2, 3), 0.5, 0.1);
    const BarrierValue b = eval_primitive(c, positions({3, 3, 9, 9}));
    CHECK(b.value == doctest::Approx(0.64));
    CHECK(b.gradient == positions({2, 0, 0, 0}));
  }
  SUBCASE("separation on the boundary") {
    const auto c = PrimitiveConstraint::pair_separation(0, 1, 0.1);
    const BarrierValue b = eval_primitive(c, positions({0, 0, 0.2, 0}));
    CHECK(b.value == doctest::Approx(0.0));
    CHECK(b.gradient.isApprox(positions({-0.4, 0, 0.4, 0})));
  }
  SUBCASE("connectivity with coincident agents") {
    const auto c = PrimitiveConstraint::pair_connectivity(1, 0, 1.25);
    const BarrierValue b = eval_primitive(c, positions({1, 1, 1, 1}));
    CHECK(b.value == doctest::Approx(1.5625));
    CHECK(b.gradient.isZero());
  }
  SUBCASE("connectivity gradient sign") {
    const auto c = PrimitiveConstraint::pair_connectivity(0, 1, 1.25);
    const BarrierValue b = eval_primitive(c, positions({1, 0, 0, 0}));
    CHECK(b.gradient == positions({-2, 0, 2, 0}));
  }
}

TEST_CASE("softmin composition") {
  const std::vector<double> one{0.37};
  CHECK(softmin_compose(one, 20.0) == doctest::Approx(0.37));

  const std::vector<double> twin{0.5, 0.5};
  CHECK(softmin_compose(twin, 20.0) == doctest::Approx(0.5 - std::log(2.0) / 20.0));

  const std::vector<double> wide{0.0, 100.0};
  const double h = softmin_compose(wide, 20.0);
  CHECK(std::isfinite(h));
  CHECK(std::abs(h) < 1e-8);

  const std::vector<double> deep{-50.0, -40.0};
  CHECK(std::isfinite(softmin_compose(deep, 20.0)));
  CHECK(softmin_compose(deep, 20.0) <= -50.0);
}

TEST_CASE("softmin gradient weights") {
  const std::vector<Vec> grads{positions({1, 0}), positions({0, 1})};
  const std::vector<double> single_v{0.3};
  const std::vector<Vec> single_g{positions({4, -2})};
  CHECK(softmin_gradient(single_g, single_v, 20.0) == single_g[0]);

  const std::vector<double> equal{0.3, 0.3};
  CHECK(softmin_gradient(grads, equal, 20.0).isApprox(positions({0.5, 0.5})));
  CHECK(softmin_weights(std::vector<double>{0.1, 0.4, -0.2}, 20.0).sum() == doctest::Approx(1.0));
}

TEST_CASE("finite differences") {
  const Vec a = positions({1.5, -2.0, 0.25});
  const auto linear = [&](const Vec& x) { return a.dot(x); };
  CHECK(finite_diff_gradient(linear, positions({0.3, 0.1, -4}), 1e-3).isApprox(a, 1e-10));
  const auto quad = [](const Vec& x) { return x.squaredNorm(); };
  const Vec x0 = positions({0.3, 0.1, -4});
  CHECK((finite_diff_gradient(quad, x0, 1e-4) - 2.0 * x0).norm() < 1e-8);
}

TEST_CASE("composed barriers over random workspace configurations") {
  const Scenario s = fixtures::four_robots();
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 1000; ++trial) {
    const Vec p = fixtures::random_positions(rng, s.n_agents());
    for (std::size_t i = 0; i < s.n_controllable(); ++i) {
      const BarrierSpec spec = barrier_for(s, i);
      double lo = std::numeric_limits<double>::infinity();
      for (const auto& c : spec.primitives) lo = std::min(lo, eval_primitive(c, p).value);
      const double h = barrier_value(spec, p);
      CHECK(h <= lo);
      CHECK(lo - h <= std::log(static_cast<double>(spec.primitives.size())) / spec.sharpness + 1e-12);
    }
  }
}

TEST_CASE("analytic gradient matches central differences") {
  const Scenario s = fixtures::four_robots();
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 100; ++trial) {
    const Vec p = fixtures::random_positions(rng, s.n_agents());
    for (std::size_t i = 0; i < s.n_controllable(); ++i) {
      const BarrierSpec spec = barrier_for(s, i);
      const Vec analytic = evaluate(spec, p).gradient;
      const Vec numeric = finite_diff_gradient([&](const Vec& x) { return barrier_value(spec, x); }, p, 1e-5);
      CHECK((analytic - numeric).norm() <= 1e-5 * std::max(1.0, analytic.norm()));
    }
  }
}

TEST_CASE("gradient map is Lipschitz on the workspace box") {
  const Scenario s = fixtures::four_robots();
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n(0.0, 1.0);
  double worst = 0.0;
  for (int trial = 0; trial < 500; ++trial) {
    const Vec p = fixtures::random_positions(rng, s.n_agents());
    Vec d(p.size());
    for (Eigen::Index k = 0; k < d.size(); ++k) d(k) = n(rng);
    d *= 1e-4 / d.norm();
    for (std::size_t i = 0; i < s.n_controllable(); ++i) {
      const BarrierSpec spec = barrier_for(s, i);
      const double ratio = (evaluate(spec, p + d).gradient - evaluate(spec, p).gradient).norm() / d.norm();
      worst = std::max(worst, ratio);
    }
  }
  CHECK(std::isfinite(worst));
  CHECK(worst < 1e4);
}

TEST_CASE("barrier validation") {
  BarrierSpec empty;
  CHECK_THROWS_AS(validate(empty, 2), ValidationError);
  BarrierSpec self;
  self.primitives.push_back(PrimitiveConstraint::pair_separation(0, 0, 0.1));
  CHECK_THROWS_AS(validate(self, 2), ValidationError);
  CHECK(primitive_kind_from_string("pair_connectivity") == PrimitiveKind::pair_connectivity);
  CHECK_THROWS_AS(primitive_kind_from_string("ellipse"), ValidationError);
}
