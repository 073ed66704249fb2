#include "ccbf/rcbf.hpp"

#include <algorithm>
#include <cmath>

namespace ccbf {

void validate(const FunnelParams& params) {
  if (!(params.rho_inf > 0.0) || !(params.rho_inf < params.rho0)) {
    throw ValidationError("funnel requires 0 < rho_inf < rho0");
  }
  if (!(params.decay > 0.0)) throw ValidationError("funnel decay must be positive");
}

FunnelValue funnel(const FunnelParams& params, double t) {
  const double span = params.rho0 - params.rho_inf;
  const double decay = std::exp(-params.decay * t);
  return {span * decay + params.rho_inf, -params.decay * span * decay};
}

void validate(const RcbfState& state) {
  validate(state.funnel);
  const RcbfGains& g = state.gains;
  if (!(g.c > 0.0) || !(g.varsigma > 0.0) || !(g.gamma > 0.0) || !(g.smoothing > 0.0)) {
    throw ValidationError("rcbf gains c, varsigma, gamma, epsilon must be positive");
  }
  if (!(state.r_hat >= 0.0)) throw ValidationError("rcbf r_hat must be nonnegative");
  if (!std::isfinite(state.theta)) throw ValidationError("rcbf theta must be finite");
}

double reconstruction_error(double h_true, double h_hat) { return h_true - h_hat; }

double rcbf_value(double h_at_estimate, double theta) { return h_at_estimate - theta; }

Transformed transform(double e, double rho, double guard) {
  if (!(rho > 0.0)) throw std::invalid_argument("transform: rho must be positive");
  const double lo = guard * rho;
  const double hi = (1.0 - guard) * rho;
  Transformed out;
  out.clamped = !(e >= lo && e <= hi);
  out.error = std::clamp(std::isnan(e) ? lo : e, lo, hi);
  out.epsilon = 0.5 * std::log(out.error / (rho - out.error));
  return out;
}

double inverse_transform(double epsilon, double rho) {
  return rho / (1.0 + std::exp(-2.0 * epsilon));
}

RcbfRates rcbf_rates(const RcbfState& state, double t, double e, double grad_norm,
                     double est_rate_norm, double guard) {
  if (!std::isfinite(t) || !std::isfinite(e) || !std::isfinite(grad_norm) ||
      !std::isfinite(est_rate_norm) || !std::isfinite(state.theta) || !std::isfinite(state.r_hat)) {
    throw std::invalid_argument("rcbf_rates: non-finite input");
  }
  const FunnelParams& f = state.funnel;
  const RcbfGains& g = state.gains;
  const FunnelValue fv = funnel(f, t);
  const double rho = fv.rho;
  const Transformed tr = transform(e, rho, guard);
  const double err = tr.error;
  const double eps = tr.epsilon;
  const double gap = err * (rho - err);
  const double signal = grad_norm + est_rate_norm;
  const double chi = eps * rho / (2.0 * gap) * signal;
  const double r2 = state.r_hat * state.r_hat;

  RcbfRates out;
  out.epsilon = eps;
  out.rho = rho;
  out.chi = chi;
  out.clamped = tr.clamped;
  out.theta_terms[0] = -g.c * gap / rho * eps;
  out.theta_terms[1] = -(f.decay * err / rho) * (f.rho0 - f.rho_inf) * std::exp(-f.decay * t);
  out.theta_terms[2] = -rho * eps / (4.0 * gap);
  out.theta_terms[3] = -r2 * signal * chi / std::sqrt(chi * chi * r2 + g.smoothing * g.smoothing);
  out.theta_rate = out.theta_terms[0] + out.theta_terms[1] + out.theta_terms[2] + out.theta_terms[3];
  out.r_hat_rate = g.gamma * std::abs(eps) * rho / (2.0 * gap) * signal - g.varsigma * state.r_hat;
  return out;
}

}  // namespace ccbf
