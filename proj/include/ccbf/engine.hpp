#pragma once

#include "ccbf/scenario.hpp"

#include <limits>
#include <optional>
#include <vector>

namespace ccbf {

// Per-agent event bits carried in the trace `event` column.
enum EventFlag : unsigned {
  kEventFunnelViolation = 1u << 0,  // transform guard clamped e
  kEventCbfRelaxed = 1u << 1,       // slack > 0 in the relaxed QP
  kEventQpInfeasible = 1u << 2,     // strict QP had no solution
};

struct Event {
  double time = 0.0;
  std::size_t agent = 0;
  EventFlag kind = kEventFunnelViolation;
  double magnitude = 0.0;  // slack for relaxations, e for funnel violations
};

struct AgentDiagnostics {
  double h_true = 0.0;
  double h_hat = 0.0;
  double error = 0.0;
  double rho = 0.0;
  double theta = 0.0;
  double r_hat = 0.0;
  double slack = 0.0;
  unsigned events = 0;
};

// One row of the trace: the step-start snapshot and the inputs applied over
// the step.
struct TraceRecord {
  double t = 0.0;
  std::vector<Vec2> positions;
  std::vector<double> headings;  // wrapped; 0 for models without heading
  std::vector<Vec> inputs;
  std::vector<AgentDiagnostics> agents;  // controllable agents
  std::vector<double> estimate_errors;   // |x^_{i,l} - x_l|, i-major over controllable i
};

struct WorldState {
  double time = 0.0;
  std::vector<Vec> agent_states;
  std::vector<ObserverBank> banks;  // one per controllable agent
  std::vector<RcbfState> rcbf;      // one per controllable agent
  std::vector<Vec> last_inputs;
  std::vector<Event> event_log;
};

struct MonitorReport {
  std::size_t steps = 0;
  double end_time = 0.0;
  bool early_stop = false;
  std::vector<double> min_h_true;
  std::vector<double> min_h_hat;
  std::vector<double> min_error;          // min e_i
  std::vector<double> min_funnel_margin;  // min rho_i - e_i
  std::vector<double> min_conservatism;   // min h_i - h^_i
  std::size_t funnel_violations = 0;
  std::size_t relaxations = 0;
  std::size_t infeasible_steps = 0;
  std::size_t safety_violations = 0;  // (step, agent) pairs with h_i(x) < -kSafetyTolerance
  double max_slack = 0.0;
  double min_separation = std::numeric_limits<double>::infinity();
  double min_obstacle_clearance = std::numeric_limits<double>::infinity();
  double max_connectivity_excess = -std::numeric_limits<double>::infinity();
  std::vector<std::optional<double>> goal_times;  // first time each agent's predicate held
  std::vector<double> goal_tolerances;            // 0 when the agent has no goal predicate
};

inline constexpr double kSafetyTolerance = 1e-6;

struct RunResult {
  std::vector<TraceRecord> trace;
  MonitorReport report;
  WorldState final_world;
};

class Simulator {
 public:
  /// Validates the scenario; throws ValidationError on failure.
  explicit Simulator(Scenario scenario);

  const Scenario& scenario() const { return scenario_; }
  WorldState initial_world() const;

  struct StepOutput {
    WorldState world;
    TraceRecord record;
  };

  /// Advances one fixed step. Inputs are computed from the step-start
  /// snapshot and held through the RK4 stages, which integrate plant,
  /// observers, and (theta, r^) together.
  StepOutput step(const WorldState& world, double dt) const;

  /// Steps to the horizon, or until every required goal has held for
  /// `goal_hold` seconds. NumericalError messages carry the last trace row.
  RunResult run() const;

 private:
  struct AgentEval;

  std::vector<AgentEval> evaluate(double t, const std::vector<Vec>& states,
                                  const std::vector<ObserverBank>& banks,
                                  const std::vector<RcbfState>& rcbf) const;
  Vec pack(const WorldState& world) const;
  void unpack(const Vec& y, WorldState& world) const;
  std::vector<Vec> distributed_inputs(const WorldState& world, const std::vector<AgentEval>& evals,
                                      TraceRecord& record) const;
  std::vector<Vec> centralized_inputs(const WorldState& world, TraceRecord& record) const;
  Vec nominal_input(std::size_t agent, const Vec& state, const std::vector<ObserverBank>& banks) const;

  Scenario scenario_;
  std::vector<ControlAffineModel> models_;
  std::vector<BarrierSpec> barriers_;
  std::vector<Mat> weights_;
  std::vector<std::optional<Vec2>> goals_;
};

/// Safety and task monitors over a finished trace.
MonitorReport monitor(const Scenario& scenario, const std::vector<TraceRecord>& trace);

/// Human-readable dump of one trace row, used in abort diagnostics.
std::string describe(const TraceRecord& record);

}  // namespace ccbf
