#include "ccbf/engine.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace ccbf {

struct Simulator::AgentEval {
  std::vector<Vec> est_rates;     // per target l
  std::vector<double> gain_rates; // per target l
  double h_true = 0.0;
  double h_estimate = 0.0;        // h_i(upsilon^_i)
  Vec gradient;                   // dh_i/d upsilon^_i over stacked positions
  double error = 0.0;
  RcbfRates rates;
};

Simulator::Simulator(Scenario scenario) : scenario_(std::move(scenario)) {
  validate(scenario_);
  for (std::size_t k = 0; k < scenario_.n_agents(); ++k) {
    models_.push_back(model_for(scenario_.agents[k]));
    weights_.push_back(weight_for(scenario_.agents[k]));
    const Goal* g = goal_for(scenario_, k);
    goals_.push_back(g ? std::optional<Vec2>(g->center) : std::nullopt);
  }
  for (std::size_t i = 0; i < scenario_.n_controllable(); ++i) {
    barriers_.push_back(barrier_for(scenario_, i));
  }
}

WorldState Simulator::initial_world() const {
  WorldState w;
  for (const AgentSpec& a : scenario_.agents) {
    w.agent_states.push_back(a.initial_state);
    w.last_inputs.push_back(Vec::Zero(a.bounds.limits.size()));
  }
  const Mat p = scenario_.observer.weight_diag.asDiagonal();
  for (AgentInitialCondition& ic : initial_conditions(scenario_)) {
    const std::size_t owner = w.banks.size();
    w.banks.push_back(make_observer_bank(owner, std::move(ic.estimates), p, scenario_.observer.sigma,
                                         scenario_.observer.initial_gain));
    w.rcbf.push_back(ic.rcbf);
  }
  return w;
}

std::vector<Simulator::AgentEval> Simulator::evaluate(double t, const std::vector<Vec>& states,
                                                      const std::vector<ObserverBank>& banks,
                                                      const std::vector<RcbfState>& rcbf) const {
  const Topology& topo = scenario_.topology;
  const std::size_t n = topo.n_controllable;
  const std::size_t total = topo.n_agents();
  const Vec truth = stacked_positions(states);
  const bool distributed = scenario_.engine.mode == ControlMode::distributed;

  std::vector<AgentEval> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    AgentEval& ev = out[i];
    const ObserverBank& bank = banks[i];
    const std::vector<std::size_t> nbrs = topo.neighbors(i);
    Vec stacked_rates(static_cast<Eigen::Index>(2 * total));
    for (std::size_t l = 0; l < total; ++l) {
      NeighborEstimates neighbor_estimates;
      for (std::size_t j : nbrs) neighbor_estimates.emplace(j, banks[j].estimates[l]);
      std::optional<Vec> measurement;
      if (topo.measures(i, l) != 0.0) measurement = Vec(states[l].head<2>());
      const Vec xi = innovation(topo, bank, l, neighbor_estimates, measurement);
      ObserverRates r = observer_rates(bank, l, xi, models_[l].observed_drift);
      stacked_rates.segment<2>(static_cast<Eigen::Index>(2 * l)) = r.estimate_rate;
      ev.est_rates.push_back(std::move(r.estimate_rate));
      ev.gain_rates.push_back(r.gain_rate);
    }
    if (!distributed) continue;

    const Vec upsilon = assemble_estimate_vector(bank, states[i].head<2>());
    const BarrierValue hv = ccbf::evaluate(barriers_[i], upsilon);
    ev.h_estimate = hv.value;
    ev.gradient = hv.gradient;
    ev.h_true = barrier_value(barriers_[i], truth);
    ev.error = reconstruction_error(ev.h_true, rcbf_value(ev.h_estimate, rcbf[i].theta));
    ev.rates = rcbf_rates(rcbf[i], t, ev.error, ev.gradient.norm(), stacked_rates.norm(),
                          scenario_.rcbf.guard);
  }
  return out;
}

// Flat layout: agent states in order; then per controllable i and target l the
// estimate (2) and gain (1); then per controllable i (theta, r^).
Vec Simulator::pack(const WorldState& world) const {
  std::vector<double> y;
  for (const Vec& x : world.agent_states) y.insert(y.end(), x.data(), x.data() + x.size());
  for (const ObserverBank& b : world.banks) {
    for (std::size_t l = 0; l < b.n_targets(); ++l) {
      y.insert(y.end(), b.estimates[l].data(), b.estimates[l].data() + b.estimates[l].size());
      y.push_back(b.gains[l]);
    }
  }
  for (const RcbfState& r : world.rcbf) {
    y.push_back(r.theta);
    y.push_back(r.r_hat);
  }
  return Eigen::Map<const Vec>(y.data(), static_cast<Eigen::Index>(y.size()));
}

void Simulator::unpack(const Vec& y, WorldState& world) const {
  Eigen::Index k = 0;
  for (Vec& x : world.agent_states) {
    x = y.segment(k, x.size());
    k += x.size();
  }
  for (ObserverBank& b : world.banks) {
    for (std::size_t l = 0; l < b.n_targets(); ++l) {
      b.estimates[l] = y.segment(k, b.estimates[l].size());
      k += b.estimates[l].size();
      b.gains[l] = y(k++);
    }
  }
  for (RcbfState& r : world.rcbf) {
    r.theta = y(k++);
    r.r_hat = y(k++);
  }
}

Vec Simulator::nominal_input(std::size_t agent, const Vec& state,
                             const std::vector<ObserverBank>& banks) const {
  const AgentSpec& a = scenario_.agents[agent];
  if (a.follow && agent < banks.size()) {
    const Vec2 leader = banks[agent].estimates[*a.follow].head<2>();
    const Vec2 away = state.head<2>() - leader;
    const double dist = away.norm();
    Vec2 target = dist > a.follow_distance ? Vec2(leader + away * (a.follow_distance / dist))
                                           : Vec2(state.head<2>());
    if (a.target_margin >= 0.0) {
      for (const Obstacle& o : scenario_.obstacles) {
        const double keep = o.radius + scenario_.safety.robot_radius + a.target_margin;
        const Vec2 out = target - o.center;
        if (out.norm() < keep && out.norm() > 0.0) target = o.center + out * (keep / out.norm());
      }
    }
    return nominal_goto(models_[agent], state, target, a.nominal_gain, a.bounds);
  }
  const Vec zero = Vec::Zero(static_cast<Eigen::Index>(models_[agent].input_dim));
  if (!goals_[agent]) return zero;
  if (a.hold_at_goal) {
    const Goal* g = goal_for(scenario_, agent);
    if ((state.head<2>() - g->center).norm() <= g->tolerance) return zero;
  }
  return nominal_goto(models_[agent], state, *goals_[agent], a.nominal_gain, a.bounds);
}

namespace {

Vec pad_to_state(const Vec& position_grad, std::size_t state_dim) {
  Vec g = Vec::Zero(static_cast<Eigen::Index>(state_dim));
  g.head<2>() = position_grad;
  return g;
}

// Strict solve first; on infeasibility fall back to the slack-relaxed problem.
QpSolution filter(const QpProblem& problem, double penalty, unsigned& events) {
  try {
    return solve_qp(problem);
  } catch (const InfeasibleError&) {
    events |= kEventQpInfeasible;
  }
  QpSolution s = solve_qp_with_slack(problem, penalty);
  if (s.slack_used > 0.0) events |= kEventCbfRelaxed;
  return s;
}

}  // namespace

std::vector<Vec> Simulator::distributed_inputs(const WorldState& world,
                                               const std::vector<AgentEval>& evals,
                                               TraceRecord& record) const {
  const std::size_t total = scenario_.n_agents();
  std::vector<Vec> inputs(total);
  for (std::size_t i = 0; i < evals.size(); ++i) {
    const AgentEval& ev = evals[i];
    const Vec& x = world.agent_states[i];
    const ControlAffineModel& model = models_[i];
    const double h_hat = rcbf_value(ev.h_estimate, world.rcbf[i].theta);

    std::vector<Vec> grads_others;
    std::vector<Vec> rates_others;
    for (std::size_t l = 0; l < total; ++l) {
      if (l == i) continue;
      grads_others.push_back(ev.gradient.segment<2>(static_cast<Eigen::Index>(2 * l)));
      rates_others.push_back(ev.est_rates[l]);
    }
    const Vec grad_own = pad_to_state(ev.gradient.segment<2>(static_cast<Eigen::Index>(2 * i)),
                                      model.state_dim);
    const LinearConstraint row = assemble_distributed_constraint(
        grad_own, grads_others, rates_others, ev.rates.theta_rate, h_hat,
        scenario_.agents[i].alpha, model.drift(x), model.actuation(x));

    QpProblem qp;
    qp.weight = weights_[i];
    qp.nominal = nominal_input(i, x, world.banks);
    qp.constraints.push_back(row);
    qp.lower = -scenario_.agents[i].bounds.limits;
    qp.upper = scenario_.agents[i].bounds.limits;

    AgentDiagnostics& d = record.agents[i];
    if (ev.rates.clamped) d.events |= kEventFunnelViolation;
    const QpSolution sol = filter(qp, scenario_.engine.slack_penalty, d.events);
    inputs[i] = sol.argmin;
    d.h_true = ev.h_true;
    d.h_hat = h_hat;
    d.error = ev.error;
    d.rho = ev.rates.rho;
    d.theta = world.rcbf[i].theta;
    d.r_hat = world.rcbf[i].r_hat;
    d.slack = sol.slack_used;
  }
  return inputs;
}

std::vector<Vec> Simulator::centralized_inputs(const WorldState& world, TraceRecord& record) const {
  const std::size_t n = scenario_.n_agents();
  const Vec truth = stacked_positions(world.agent_states);

  std::vector<Vec> drifts;
  std::vector<Mat> actuations;
  Eigen::Index m = 0;
  for (std::size_t k = 0; k < n; ++k) {
    drifts.push_back(models_[k].drift(world.agent_states[k]));
    actuations.push_back(models_[k].actuation(world.agent_states[k]));
    m += actuations.back().cols();
  }

  QpProblem qp;
  qp.weight = Mat::Zero(m, m);
  qp.nominal = Vec::Zero(m);
  qp.lower = Vec::Zero(m);
  qp.upper = Vec::Zero(m);
  Eigen::Index offset = 0;
  for (std::size_t k = 0; k < n; ++k) {
    const Eigen::Index mk = actuations[k].cols();
    qp.weight.block(offset, offset, mk, mk) = weights_[k];
    qp.nominal.segment(offset, mk) = nominal_input(k, world.agent_states[k], world.banks);
    qp.lower.segment(offset, mk) = -scenario_.agents[k].bounds.limits;
    qp.upper.segment(offset, mk) = scenario_.agents[k].bounds.limits;
    offset += mk;
  }
  std::vector<double> values;
  for (std::size_t i = 0; i < n; ++i) {
    const BarrierValue hv = ccbf::evaluate(barriers_[i], truth);
    std::vector<Vec> grads;
    for (std::size_t k = 0; k < n; ++k) {
      grads.push_back(pad_to_state(hv.gradient.segment<2>(static_cast<Eigen::Index>(2 * k)),
                                   models_[k].state_dim));
    }
    qp.constraints.push_back(assemble_centralized_constraint(
        scenario_.topology, grads, drifts, actuations, scenario_.agents[i].alpha, hv.value));
    values.push_back(hv.value);
  }

  unsigned events = 0;
  const QpSolution sol = filter(qp, scenario_.engine.slack_penalty, events);
  std::vector<Vec> inputs(n);
  offset = 0;
  for (std::size_t k = 0; k < n; ++k) {
    const Eigen::Index mk = actuations[k].cols();
    inputs[k] = sol.argmin.segment(offset, mk);
    offset += mk;
    AgentDiagnostics& d = record.agents[k];
    d.h_true = values[k];
    d.h_hat = values[k];
    d.slack = sol.slack_used;
    d.events = events;
  }
  return inputs;
}

Simulator::StepOutput Simulator::step(const WorldState& world, double dt) const {
  const std::size_t total = scenario_.n_agents();
  const std::size_t n = scenario_.n_controllable();
  const bool distributed = scenario_.engine.mode == ControlMode::distributed;

  StepOutput out;
  TraceRecord& rec = out.record;
  rec.t = world.time;
  rec.agents.resize(n);
  for (std::size_t k = 0; k < total; ++k) {
    const Vec& x = world.agent_states[k];
    rec.positions.emplace_back(x.head<2>());
    rec.headings.push_back(models_[k].state_dim > 2 ? wrap_angle(x(2)) : 0.0);
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t l = 0; l < total; ++l) {
      rec.estimate_errors.push_back((world.banks[i].estimates[l] - world.agent_states[l].head<2>()).norm());
    }
  }

  // Controllable inputs from the snapshot, then the uncontrollable policies.
  const std::vector<AgentEval> evals =
      evaluate(world.time, world.agent_states, world.banks, world.rcbf);
  std::vector<Vec> inputs =
      distributed ? distributed_inputs(world, evals, rec) : centralized_inputs(world, rec);
  for (std::size_t l = n; l < total; ++l) inputs[l] = nominal_input(l, world.agent_states[l], world.banks);
  rec.inputs = inputs;

  std::vector<bool> stage_clamp(n, false);
  const VectorField field = [&](double t, const Vec& y) -> Vec {
    WorldState w = world;
    unpack(y, w);
    Vec rate(y.size());
    Eigen::Index k = 0;
    for (std::size_t a = 0; a < total; ++a) {
      const Vec xr = models_[a].rate(w.agent_states[a], inputs[a]);
      rate.segment(k, xr.size()) = xr;
      k += xr.size();
    }
    const std::vector<AgentEval> ev = evaluate(t, w.agent_states, w.banks, w.rcbf);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t l = 0; l < total; ++l) {
        rate.segment(k, ev[i].est_rates[l].size()) = ev[i].est_rates[l];
        k += ev[i].est_rates[l].size();
        rate(k++) = ev[i].gain_rates[l];
      }
    }
    for (std::size_t i = 0; i < n; ++i) {
      if (distributed) {
        rate(k++) = ev[i].rates.theta_rate;
        rate(k++) = ev[i].rates.r_hat_rate;
        if (ev[i].rates.clamped) stage_clamp[i] = true;
      } else {
        rate(k++) = 0.0;
        rate(k++) = 0.0;
      }
    }
    return rate;
  };

  out.world = world;
  unpack(rk4_step(field, pack(world), world.time, dt), out.world);
  out.world.time = world.time + dt;
  out.world.last_inputs = inputs;
  for (ObserverBank& b : out.world.banks) {
    for (double& g : b.gains) g = std::max(g, 0.0);
  }
  for (RcbfState& r : out.world.rcbf) r.r_hat = std::max(r.r_hat, 0.0);

  for (std::size_t i = 0; i < n; ++i) {
    AgentDiagnostics& d = rec.agents[i];
    if (stage_clamp[i]) d.events |= kEventFunnelViolation;
    if (d.events & kEventFunnelViolation) {
      out.world.event_log.push_back({world.time, i, kEventFunnelViolation, d.error});
    }
    if (d.events & kEventQpInfeasible) {
      out.world.event_log.push_back({world.time, i, kEventQpInfeasible, 0.0});
    }
    if (d.events & kEventCbfRelaxed) {
      out.world.event_log.push_back({world.time, i, kEventCbfRelaxed, d.slack});
    }
  }
  return out;
}

std::string describe(const TraceRecord& r) {
  std::ostringstream s;
  s.precision(9);
  s << "t=" << r.t;
  for (std::size_t k = 0; k < r.positions.size(); ++k) {
    s << " p" << k + 1 << "=(" << r.positions[k].x() << "," << r.positions[k].y() << ")";
    s << " th" << k + 1 << "=" << r.headings[k];
    if (k < r.inputs.size()) s << " u" << k + 1 << "=(" << r.inputs[k].transpose() << ")";
  }
  for (std::size_t i = 0; i < r.agents.size(); ++i) {
    const AgentDiagnostics& d = r.agents[i];
    s << " h" << i + 1 << "=" << d.h_true << " hhat" << i + 1 << "=" << d.h_hat << " e" << i + 1
      << "=" << d.error << " rho" << i + 1 << "=" << d.rho;
  }
  return s.str();
}

RunResult Simulator::run() const {
  const EngineParams& e = scenario_.engine;
  const auto steps = static_cast<std::size_t>(std::llround(e.horizon / e.dt));

  std::vector<std::size_t> required;
  for (std::size_t k = 0; k < scenario_.n_agents(); ++k) {
    if (scenario_.agents[k].goal_required && goals_[k]) required.push_back(k);
  }

  RunResult result;
  WorldState world = initial_world();
  double holding_since = -1.0;  // negative: goals not currently held
  bool early = false;
  for (std::size_t s = 0; s < steps; ++s) {
    StepOutput next;
    try {
      next = step(world, e.dt);
    } catch (const NumericalError& err) {
      const std::string last = result.trace.empty() ? "none" : describe(result.trace.back());
      throw NumericalError(std::string(err.what()) + "; last trace row: " + last, err.index());
    }
    result.trace.push_back(std::move(next.record));
    world = std::move(next.world);

    if (!required.empty()) {
      bool all = true;
      for (std::size_t k : required) {
        const Goal* g = goal_for(scenario_, k);
        all = all && (world.agent_states[k].head<2>() - g->center).norm() <= g->tolerance;
      }
      if (!all) {
        holding_since = -1.0;
      } else if (holding_since < 0.0) {
        holding_since = world.time;
      } else if (world.time - holding_since >= e.goal_hold - 1e-9) {
        early = true;
        break;
      }
    }
  }
  result.report = monitor(scenario_, result.trace);
  result.report.early_stop = early;
  result.report.end_time = world.time;
  result.final_world = std::move(world);
  return result;
}

MonitorReport monitor(const Scenario& scenario, const std::vector<TraceRecord>& trace) {
  const std::size_t n = scenario.n_controllable();
  const std::size_t total = scenario.n_agents();
  const double inf = std::numeric_limits<double>::infinity();
  MonitorReport m;
  m.steps = trace.size();
  m.min_h_true.assign(n, inf);
  m.min_h_hat.assign(n, inf);
  m.min_error.assign(n, inf);
  m.min_funnel_margin.assign(n, inf);
  m.min_conservatism.assign(n, inf);
  m.goal_times.assign(total, std::nullopt);
  m.goal_tolerances.assign(total, 0.0);
  for (std::size_t k = 0; k < total; ++k) {
    if (const Goal* g = goal_for(scenario, k); g && scenario.agents[k].goal_required) {
      m.goal_tolerances[k] = g->tolerance;
    }
  }

  std::vector<std::pair<std::size_t, std::size_t>> tethers;
  for (std::size_t i = 0; i < n; ++i) {
    for (const PrimitiveDecl& d : scenario.agents[i].barrier) {
      if (d.kind == PrimitiveKind::pair_connectivity) tethers.emplace_back(i, d.other);
    }
  }

  for (const TraceRecord& r : trace) {
    for (std::size_t i = 0; i < n && i < r.agents.size(); ++i) {
      const AgentDiagnostics& d = r.agents[i];
      m.min_h_true[i] = std::min(m.min_h_true[i], d.h_true);
      m.min_h_hat[i] = std::min(m.min_h_hat[i], d.h_hat);
      m.min_error[i] = std::min(m.min_error[i], d.error);
      m.min_funnel_margin[i] = std::min(m.min_funnel_margin[i], d.rho - d.error);
      m.min_conservatism[i] = std::min(m.min_conservatism[i], d.h_true - d.h_hat);
      if (d.events & kEventFunnelViolation) ++m.funnel_violations;
      if (d.events & kEventCbfRelaxed) ++m.relaxations;
      if (d.events & kEventQpInfeasible) ++m.infeasible_steps;
      if (d.h_true < -kSafetyTolerance) ++m.safety_violations;
      m.max_slack = std::max(m.max_slack, d.slack);
    }
    for (std::size_t a = 0; a < total; ++a) {
      for (std::size_t b = a + 1; b < total; ++b) {
        m.min_separation = std::min(m.min_separation, (r.positions[a] - r.positions[b]).norm());
      }
    }
    for (std::size_t i = 0; i < n; ++i) {
      for (const Obstacle& o : scenario.obstacles) {
        const double clearance =
            (r.positions[i] - o.center).norm() - (scenario.safety.robot_radius + o.radius);
        m.min_obstacle_clearance = std::min(m.min_obstacle_clearance, clearance);
      }
    }
    for (auto [a, b] : tethers) {
      m.max_connectivity_excess = std::max(
          m.max_connectivity_excess,
          (r.positions[a] - r.positions[b]).norm() - scenario.safety.connect_distance);
    }
    for (std::size_t k = 0; k < total; ++k) {
      if (m.goal_times[k] || m.goal_tolerances[k] <= 0.0) continue;
      const Goal* g = goal_for(scenario, k);
      if ((r.positions[k] - g->center).norm() <= g->tolerance) m.goal_times[k] = r.t;
    }
  }
  if (!trace.empty()) m.end_time = trace.back().t;
  return m;
}

}  // namespace ccbf
