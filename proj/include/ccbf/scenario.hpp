#pragma once

#include "ccbf/barrier.hpp"
#include "ccbf/common.hpp"
#include "ccbf/dynamics.hpp"
#include "ccbf/observer.hpp"
#include "ccbf/rcbf.hpp"
#include "ccbf/safety_filter.hpp"
#include "ccbf/topology.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace ccbf {

enum class ModelKind { unicycle, single_integrator };
enum class ControlMode { distributed, centralized };

// How theta(0) and rho0 are chosen:
//   fixed:       the configured theta0 and rho0
//   half_margin: rho0 = h(x(0)), theta(0) = h(upsilon^(0)) - h(x(0)) / 2
enum class InitMode { fixed, half_margin };

struct Obstacle {
  Vec2 center = Vec2::Zero();
  double radius = 0.0;
};

struct Goal {
  std::string name;
  Vec2 center = Vec2::Zero();
  double tolerance = 0.0;  // "reached" when |p - center| <= tolerance
};

// Barrier primitive as written in a scenario; the subject is the owning agent
// and obstacles/radii are resolved against the scenario at build time.
struct PrimitiveDecl {
  PrimitiveKind kind = PrimitiveKind::circle_avoid;
  std::size_t obstacle = 0;  // circle_avoid, 0-based
  std::size_t other = 0;     // pair kinds, 0-based
};

struct AgentSpec {
  ModelKind model = ModelKind::unicycle;
  double offset = 0.036;
  InputBounds bounds = InputBounds::unicycle(0.22, 2.84);
  Vec initial_state;
  std::string goal;
  bool goal_required = true;
  double nominal_gain = 1.0;
  bool hold_at_goal = false;  // zero nominal input once inside the goal disc
  // Controllable agents only.
  // Leader tracking: the nominal goal becomes the point `follow_distance`
  // short of this agent's own estimate of the leader's position.
  std::optional<std::size_t> follow;
  double follow_distance = 0.0;
  // When >= 0, a nominal target inside an obstacle inflated by the robot
  // radius plus this margin is pushed radially onto that inflated circle.
  double target_margin = -1.0;
  ClassKappa alpha;
  Vec weight_diag;  // empty: diag{1, l^2} for unicycles, identity otherwise
  std::vector<PrimitiveDecl> barrier;
};

struct SafetyParams {
  double robot_radius = 0.1;
  double connect_distance = 1.25;
  double sharpness = kDefaultSharpness;
};

struct ObserverParams {
  Vec weight_diag = Vec::Constant(2, 2.0);
  double sigma = 0.01;
  double initial_gain = 2.0;
  Vec2 initial_offset = Vec2::Zero();  // added to every initial estimate
};

struct RcbfParams {
  InitMode init_mode = InitMode::fixed;
  double theta0 = 0.1;
  double r_hat0 = 0.0;
  double rho0 = 1.0;
  double rho_inf = 0.15;
  double varrho = 1.0;
  double c = 0.01;
  double varsigma = 0.8;
  double gamma = 0.01;
  double epsilon = 0.01;
  double guard = kDefaultFunnelGuard;
};

struct EngineParams {
  double dt = 0.01;
  double horizon = 100.0;
  double goal_hold = 1.0;
  double slack_penalty = kDefaultSlackPenalty;
  ControlMode mode = ControlMode::distributed;
  std::uint64_t seed = 0;
};

struct Scenario {
  std::string name;
  Topology topology;
  std::vector<AgentSpec> agents;  // controllable first, then uncontrollable
  std::vector<Obstacle> obstacles;
  std::vector<Goal> goals;
  SafetyParams safety;
  ObserverParams observer;
  RcbfParams rcbf;
  EngineParams engine;

  std::size_t n_agents() const { return agents.size(); }
  std::size_t n_controllable() const { return topology.n_controllable; }
};

ControlAffineModel model_for(const AgentSpec& agent);
Mat weight_for(const AgentSpec& agent);
BarrierSpec barrier_for(const Scenario& scenario, std::size_t agent);
const Goal* goal_for(const Scenario& scenario, std::size_t agent);

/// Stacked observed positions [p_1; ...; p_{N+V}] of per-agent states.
Vec stacked_positions(const std::vector<Vec>& states);

// Everything derived from the scenario at t = 0 for one controllable agent.
struct AgentInitialCondition {
  std::vector<Vec> estimates;  // x^_{i,l}(0) for every l
  double h_true = 0.0;         // h_i(x(0))
  double h_estimate = 0.0;     // h_i(upsilon^_i(0))
  RcbfState rcbf;
  double error() const { return h_true - rcbf_value(h_estimate, rcbf.theta); }
  double h_hat() const { return rcbf_value(h_estimate, rcbf.theta); }
};

std::vector<AgentInitialCondition> initial_conditions(const Scenario& scenario);

/// Full structural and initial-condition validation. Messages name the
/// violated assumption or inequality and the offending field.
void validate(const Scenario& scenario);

}  // namespace ccbf
