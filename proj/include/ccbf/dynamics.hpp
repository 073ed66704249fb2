#pragma once

#include "ccbf/common.hpp"

#include <functional>

namespace ccbf {

// x' = f(x) + g(x) u. The first `observed_dim` state components are the
// planar position that barriers depend on and observers estimate.
struct ControlAffineModel {
  std::size_t state_dim = 0;
  std::size_t input_dim = 0;
  std::size_t observed_dim = kPositionDim;
  std::function<Vec(const Vec&)> drift;
  std::function<Mat(const Vec&)> actuation;
  /// Drift restricted to the observed coordinates, as used by the observers.
  std::function<Vec(const Vec&)> observed_drift;

  Vec rate(const Vec& state, const Vec& input) const {
    return drift(state) + actuation(state) * input;
  }
};

/// Offset-point unicycle: state [x, y, theta], input [v, w],
/// p' = [[cos, -l sin], [sin, l cos]] u, theta' = w.
ControlAffineModel unicycle_model(double offset);

/// x' = u over `dim` coordinates; all coordinates observed.
ControlAffineModel single_integrator_model(std::size_t dim = kPositionDim);

struct UnicycleState {
  Vec2 position = Vec2::Zero();
  double heading = 0.0;  // radians

  Vec to_vector() const;
  static UnicycleState from_vector(const Vec& state);
};

/// Symmetric component-wise input limits |u_k| <= limits_k.
struct InputBounds {
  Vec limits;

  static InputBounds unicycle(double v_max, double w_max);
  Vec clamp(const Vec& u) const;
  bool contains(const Vec& u, double tol = 0.0) const;
};

/// Wraps to (-pi, pi].
double wrap_angle(double angle);

using VectorField = std::function<Vec(double t, const Vec& y)>;

/// One classical RK4 step. Throws NumericalError naming the first non-finite
/// component of the input state, any stage rate, or the result.
Vec rk4_step(const VectorField& field, const Vec& state, double t, double dt);

/// Proportional go-to-goal on the observed position: u = clamp(g_p(x)^-1 k (goal - p)),
/// where g_p is the observed block of g. Zero at the goal.
Vec nominal_goto(const ControlAffineModel& model, const Vec& state, const Vec2& goal,
                 double gain, const InputBounds& bounds);

}  // namespace ccbf
