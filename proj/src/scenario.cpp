#include "ccbf/scenario.hpp"

#include <cmath>
#include <sstream>

namespace ccbf {
namespace {

std::string agent_path(std::size_t agent) {
  return "agents[" + std::to_string(agent) + "]";
}

[[noreturn]] void fail(const std::string& field, const std::string& what) {
  throw ValidationError(field + ": " + what);
}

}  // namespace

ControlAffineModel model_for(const AgentSpec& agent) {
  switch (agent.model) {
    case ModelKind::unicycle: return unicycle_model(agent.offset);
    case ModelKind::single_integrator: return single_integrator_model(kPositionDim);
  }
  throw ValidationError("unknown model kind");
}

Mat weight_for(const AgentSpec& agent) {
  if (agent.weight_diag.size() > 0) return agent.weight_diag.asDiagonal();
  if (agent.model == ModelKind::unicycle) {
    Vec d(2);
    d << 1.0, agent.offset * agent.offset;
    return d.asDiagonal();
  }
  return Mat::Identity(2, 2);
}

BarrierSpec barrier_for(const Scenario& scenario, std::size_t agent) {
  const SafetyParams& s = scenario.safety;
  BarrierSpec spec;
  spec.sharpness = s.sharpness;
  for (const PrimitiveDecl& d : scenario.agents.at(agent).barrier) {
    switch (d.kind) {
      case PrimitiveKind::circle_avoid: {
        const Obstacle& o = scenario.obstacles.at(d.obstacle);
        spec.primitives.push_back(
            PrimitiveConstraint::circle_avoid(agent, o.center, o.radius, s.robot_radius));
        break;
      }
      case PrimitiveKind::pair_separation:
        spec.primitives.push_back(PrimitiveConstraint::pair_separation(agent, d.other, s.robot_radius));
        break;
      case PrimitiveKind::pair_connectivity:
        spec.primitives.push_back(
            PrimitiveConstraint::pair_connectivity(agent, d.other, s.connect_distance));
        break;
    }
  }
  return spec;
}

const Goal* goal_for(const Scenario& scenario, std::size_t agent) {
  const std::string& name = scenario.agents.at(agent).goal;
  for (const Goal& g : scenario.goals) {
    if (g.name == name) return &g;
  }
  return nullptr;
}

Vec stacked_positions(const std::vector<Vec>& states) {
  Vec p(static_cast<Eigen::Index>(kPositionDim * states.size()));
  for (std::size_t k = 0; k < states.size(); ++k) {
    p.segment<2>(static_cast<Eigen::Index>(2 * k)) = states[k].head<2>();
  }
  return p;
}

std::vector<AgentInitialCondition> initial_conditions(const Scenario& scenario) {
  const std::size_t n = scenario.n_controllable();
  std::vector<Vec> states;
  for (const AgentSpec& a : scenario.agents) states.push_back(a.initial_state);
  const Vec truth = stacked_positions(states);
  const RcbfParams& rp = scenario.rcbf;

  std::vector<AgentInitialCondition> out;
  for (std::size_t i = 0; i < n; ++i) {
    AgentInitialCondition ic;
    for (const Vec& x : states) ic.estimates.push_back(x.head<2>() + scenario.observer.initial_offset);
    Vec upsilon = truth;
    for (std::size_t l = 0; l < states.size(); ++l) {
      if (l != i) upsilon.segment<2>(static_cast<Eigen::Index>(2 * l)) = ic.estimates[l];
    }
    const BarrierSpec spec = barrier_for(scenario, i);
    ic.h_true = barrier_value(spec, truth);
    ic.h_estimate = barrier_value(spec, upsilon);

    ic.rcbf.gains = {rp.c, rp.varsigma, rp.gamma, rp.epsilon};
    ic.rcbf.funnel = {rp.rho0, rp.rho_inf, rp.varrho};
    ic.rcbf.theta = rp.theta0;
    ic.rcbf.r_hat = rp.r_hat0;
    if (rp.init_mode == InitMode::half_margin) {
      ic.rcbf.funnel.rho0 = ic.h_true;
      ic.rcbf.theta = ic.h_estimate - ic.h_true / 2.0;
    }
    out.push_back(std::move(ic));
  }
  return out;
}

void validate(const Scenario& scenario) {
  validate(scenario.topology);
  const std::size_t n = scenario.n_controllable();
  const std::size_t total = scenario.topology.n_agents();
  if (scenario.agents.size() != total) {
    fail("agents", "expected " + std::to_string(total) + " agents from the topology, found " +
                       std::to_string(scenario.agents.size()));
  }

  for (std::size_t k = 0; k < scenario.obstacles.size(); ++k) {
    if (!(scenario.obstacles[k].radius > 0.0)) {
      fail("obstacles[" + std::to_string(k) + "].radius", "must be positive");
    }
  }
  for (std::size_t k = 0; k < scenario.goals.size(); ++k) {
    if (!(scenario.goals[k].tolerance > 0.0)) {
      fail("goals." + scenario.goals[k].name + ".tolerance", "must be positive");
    }
  }
  const SafetyParams& s = scenario.safety;
  if (!(s.robot_radius > 0.0)) fail("safety.robot_radius", "must be positive");
  if (!(s.connect_distance > 0.0)) fail("safety.connect_distance", "must be positive");
  if (!(s.sharpness > 0.0) || !std::isfinite(s.sharpness)) fail("safety.sharpness", "must be positive");

  for (std::size_t i = 0; i < total; ++i) {
    const AgentSpec& a = scenario.agents[i];
    const std::string path = agent_path(i);
    if (a.model == ModelKind::unicycle && !(a.offset > 0.0)) fail(path + ".model.offset", "must be positive");
    const ControlAffineModel model = model_for(a);
    if (static_cast<std::size_t>(a.initial_state.size()) != model.state_dim) {
      fail(path + ".initial", "expected " + std::to_string(model.state_dim) + " components");
    }
    if (!a.initial_state.allFinite()) fail(path + ".initial", "must be finite");
    if (static_cast<std::size_t>(a.bounds.limits.size()) != model.input_dim ||
        !(a.bounds.limits.array() > 0.0).all()) {
      fail(path + ".bounds", "needs one positive limit per input");
    }
    if (!(a.nominal_gain > 0.0)) fail(path + ".nominal_gain", "must be positive");
    if (!a.goal.empty() && goal_for(scenario, i) == nullptr) {
      fail(path + ".goal", "unknown goal '" + a.goal + "'");
    }
    if (a.goal.empty() && a.goal_required) fail(path + ".goal", "required goal is missing");
    if (i >= n) {
      if (!a.barrier.empty()) fail(path + ".barrier", "uncontrollable agents carry no barrier");
      if (a.follow) fail(path + ".follow", "only controllable agents can follow a leader");
      continue;
    }
    if (a.follow && (*a.follow >= total || *a.follow == i)) fail(path + ".follow", "must name another agent");
    if (!(a.follow_distance >= 0.0) || !std::isfinite(a.follow_distance)) {
      fail(path + ".follow_distance", "must be nonnegative");
    }
    try {
      validate(a.alpha);
    } catch (const ValidationError& e) {
      fail(path + ".alpha", e.what());
    }
    if (a.weight_diag.size() > 0 &&
        (static_cast<std::size_t>(a.weight_diag.size()) != model.input_dim ||
         !(a.weight_diag.array() > 0.0).all())) {
      fail(path + ".weight", "needs one positive entry per input");
    }
    for (std::size_t k = 0; k < a.barrier.size(); ++k) {
      const PrimitiveDecl& d = a.barrier[k];
      const std::string p = path + ".barrier[" + std::to_string(k) + "]";
      if (d.kind == PrimitiveKind::circle_avoid && d.obstacle >= scenario.obstacles.size()) {
        fail(p + ".obstacle", "no such obstacle");
      }
      if (d.kind != PrimitiveKind::circle_avoid && (d.other >= total || d.other == i)) {
        fail(p + ".with", "must name another agent");
      }
    }
    try {
      validate(barrier_for(scenario, i), total);
    } catch (const ValidationError& e) {
      fail(path + ".barrier", e.what());
    }
  }

  const EngineParams& e = scenario.engine;
  if (!(e.dt > 0.0)) fail("engine.dt", "must be positive");
  if (!(e.horizon >= 0.0)) fail("engine.horizon", "must be nonnegative");
  if (!(e.goal_hold >= 0.0)) fail("engine.goal_hold", "must be nonnegative");
  if (!(e.slack_penalty > 0.0)) fail("engine.slack_penalty", "must be positive");
  if (e.mode == ControlMode::centralized && scenario.topology.n_uncontrollable > 0) {
    fail("engine.mode",
         "centralized-baseline filter is inapplicable when uncontrollable agents are present");
  }

  const ObserverParams& o = scenario.observer;
  if (o.weight_diag.size() != 2 || !(o.weight_diag.array() > 0.0).all()) {
    fail("observer.weight", "needs two positive diagonal entries");
  }
  if (!(o.sigma > 0.0)) fail("observer.sigma", "must be positive");
  if (!(o.initial_gain >= 0.0)) fail("observer.delta0", "must be nonnegative");

  const RcbfParams& r = scenario.rcbf;
  if (!(r.guard > 0.0 && r.guard < 0.5)) fail("rcbf.guard", "must lie in (0, 0.5)");
  if (!(r.r_hat0 >= 0.0)) fail("rcbf.r_hat0", "must be nonnegative");
  if (!(r.c > 0.0) || !(r.varsigma > 0.0) || !(r.gamma > 0.0) || !(r.epsilon > 0.0) ||
      !(r.varrho > 0.0)) {
    fail("rcbf", "c, varsigma, gamma, epsilon and varrho must be positive");
  }
  if (r.init_mode == InitMode::fixed && !(r.rho_inf > 0.0 && r.rho_inf < r.rho0)) {
    fail("rcbf.rho_inf", "requires 0 < rho_inf < rho0");
  }

  const auto ics = initial_conditions(scenario);
  for (std::size_t i = 0; i < n; ++i) {
    const AgentInitialCondition& ic = ics[i];
    const std::string path = agent_path(i);
    std::ostringstream v;
    if (!(ic.h_true > 0.0)) {
      v << "initial barrier value h(x(0)) = " << ic.h_true << " must be > 0";
      fail(path + ".initial", v.str());
    }
    if (e.mode == ControlMode::centralized) continue;
    if (!(ic.rcbf.funnel.rho_inf < ic.rcbf.funnel.rho0)) {
      v << "requires rho_inf < rho0, got rho0 = " << ic.rcbf.funnel.rho0;
      fail(path + ".rcbf", v.str());
    }
    const double e0 = ic.error();
    if (!(e0 > 0.0 && e0 < ic.rcbf.funnel.rho0)) {
      v << "initial reconstruction error e(0) = " << e0 << " must satisfy 0 < e(0) < rho0 = "
        << ic.rcbf.funnel.rho0;
      fail(path + ".rcbf", v.str());
    }
    if (!(ic.h_hat() >= 0.0)) {
      v << "initial reconstructed barrier h^(0) = " << ic.h_hat() << " must be >= 0";
      fail(path + ".rcbf", v.str());
    }
  }
}

}  // namespace ccbf
