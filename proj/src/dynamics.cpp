#include "ccbf/dynamics.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

namespace ccbf {

ControlAffineModel unicycle_model(double offset) {
  if (!(offset > 0.0) || !std::isfinite(offset)) {
    throw std::invalid_argument("unicycle_model: offset must be positive");
  }
  ControlAffineModel m;
  m.state_dim = 3;
  m.input_dim = 2;
  m.observed_dim = 2;
  m.drift = [](const Vec&) -> Vec { return Vec::Zero(3); };
  m.actuation = [offset](const Vec& x) -> Mat {
    const double c = std::cos(x(2));
    const double s = std::sin(x(2));
    Mat g(3, 2);
    g << c, -offset * s,
         s, offset * c,
         0.0, 1.0;
    return g;
  };
  m.observed_drift = [](const Vec&) -> Vec { return Vec::Zero(2); };
  return m;
}

ControlAffineModel single_integrator_model(std::size_t dim) {
  const auto n = static_cast<Eigen::Index>(dim);
  ControlAffineModel m;
  m.state_dim = dim;
  m.input_dim = dim;
  m.observed_dim = dim;
  m.drift = [n](const Vec&) -> Vec { return Vec::Zero(n); };
  m.actuation = [n](const Vec&) -> Mat { return Mat::Identity(n, n); };
  m.observed_drift = [n](const Vec&) -> Vec { return Vec::Zero(n); };
  return m;
}

Vec UnicycleState::to_vector() const {
  Vec v(3);
  v << position.x(), position.y(), heading;
  return v;
}

UnicycleState UnicycleState::from_vector(const Vec& state) {
  if (state.size() != 3) throw std::invalid_argument("UnicycleState: expected 3 components");
  return {Vec2(state(0), state(1)), wrap_angle(state(2))};
}

InputBounds InputBounds::unicycle(double v_max, double w_max) {
  if (!(v_max > 0.0) || !(w_max > 0.0)) {
    throw std::invalid_argument("InputBounds: v_max and w_max must be positive");
  }
  InputBounds b;
  b.limits = Vec(2);
  b.limits << v_max, w_max;
  return b;
}

Vec InputBounds::clamp(const Vec& u) const {
  return u.cwiseMax(-limits).cwiseMin(limits);
}

bool InputBounds::contains(const Vec& u, double tol) const {
  return ((u.cwiseAbs() - limits).array() <= tol).all();
}

double wrap_angle(double angle) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  double a = std::fmod(angle, two_pi);
  if (a <= -std::numbers::pi) a += two_pi;
  if (a > std::numbers::pi) a -= two_pi;
  return a;
}

namespace {

void require_finite(const Vec& v, const char* what) {
  for (Eigen::Index k = 0; k < v.size(); ++k) {
    if (!std::isfinite(v(k))) {
      std::ostringstream msg;
      msg << "rk4_step: non-finite " << what << " at component " << k;
      throw NumericalError(msg.str(), static_cast<std::size_t>(k));
    }
  }
}

}  // namespace

Vec rk4_step(const VectorField& field, const Vec& state, double t, double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("rk4_step: dt must be positive");
  require_finite(state, "state");
  const Vec k1 = field(t, state);
  require_finite(k1, "rate");
  const Vec k2 = field(t + 0.5 * dt, state + 0.5 * dt * k1);
  require_finite(k2, "rate");
  const Vec k3 = field(t + 0.5 * dt, state + 0.5 * dt * k2);
  require_finite(k3, "rate");
  const Vec k4 = field(t + dt, state + dt * k3);
  require_finite(k4, "rate");
  Vec next = state + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  require_finite(next, "state");
  return next;
}

Vec nominal_goto(const ControlAffineModel& model, const Vec& state, const Vec2& goal,
                 double gain, const InputBounds& bounds) {
  if (!(gain > 0.0)) throw std::invalid_argument("nominal_goto: gain must be positive");
  const Vec2 error = goal - state.head<2>();
  if (error.isZero(0.0)) return Vec::Zero(static_cast<Eigen::Index>(model.input_dim));
  const Mat g = model.actuation(state).topRows(2);
  const Vec u = g.fullPivLu().solve(gain * error);
  return bounds.clamp(u);
}

}  // namespace ccbf
