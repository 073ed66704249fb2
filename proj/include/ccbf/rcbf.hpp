#pragma once

#include "ccbf/common.hpp"

#include <array>

namespace ccbf {

/// rho(t) = (rho0 - rho_inf) exp(-decay t) + rho_inf.
struct FunnelParams {
  double rho0 = 1.0;
  double rho_inf = 0.15;
  double decay = 1.0;
};

void validate(const FunnelParams& params);

struct FunnelValue {
  double rho = 0.0;
  double rho_rate = 0.0;
};

FunnelValue funnel(const FunnelParams& params, double t);

struct RcbfGains {
  double c = 0.01;          // transformed-error feedback
  double varsigma = 0.8;    // r^ leak
  double gamma = 0.01;      // r^ adaptation rate
  double smoothing = 0.01;  // smooth |.| constant in the robustifying term
};

struct RcbfState {
  double theta = 0.0;
  double r_hat = 0.0;
  RcbfGains gains;
  FunnelParams funnel;
};

void validate(const RcbfState& state);

inline constexpr double kDefaultFunnelGuard = 1e-6;

/// e = h(x) - h^.
double reconstruction_error(double h_true, double h_hat);

/// h^ = h(upsilon^) - theta.
double rcbf_value(double h_at_estimate, double theta);

struct Transformed {
  double epsilon = 0.0;
  double error = 0.0;    // e after clamping into [guard rho, (1 - guard) rho]
  bool clamped = false;  // funnel violation
};

/// epsilon = 0.5 ln(e / (rho - e)) with e clamped by the relative guard.
Transformed transform(double e, double rho, double guard = kDefaultFunnelGuard);

/// e = rho exp(2 epsilon) / (1 + exp(2 epsilon)).
double inverse_transform(double epsilon, double rho);

struct RcbfRates {
  double theta_rate = 0.0;
  double r_hat_rate = 0.0;
  double chi = 0.0;
  double epsilon = 0.0;
  double rho = 0.0;
  bool clamped = false;
  // theta_rate split as: transformed-error feedback, funnel tracking,
  // funnel barrier, robustification.
  std::array<double, 4> theta_terms{};
};

/// Adaptive laws for theta and r^. `grad_norm` is |dh/d upsilon^| and
/// `est_rate_norm` the norm of the stacked estimate rates. Throws
/// std::invalid_argument on non-finite inputs.
RcbfRates rcbf_rates(const RcbfState& state, double t, double e, double grad_norm,
                     double est_rate_norm, double guard = kDefaultFunnelGuard);

}  // namespace ccbf
