#include "ccbf/io.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

namespace ccbf {
namespace {

using nlohmann::json;

[[noreturn]] void field_error(const std::string& path, const std::string& what) {
  throw ValidationError(path + ": " + what);
}

const json& require(const json& obj, const std::string& key, const std::string& path) {
  if (!obj.is_object() || !obj.contains(key)) field_error(path + "." + key, "missing");
  return obj.at(key);
}

double number(const json& v, const std::string& path) {
  if (!v.is_number()) field_error(path, "expected a number");
  return v.get<double>();
}

double number_or(const json& obj, const std::string& key, double fallback, const std::string& path) {
  if (!obj.is_object() || !obj.contains(key)) return fallback;
  return number(obj.at(key), path + "." + key);
}

Vec vector_of(const json& v, const std::string& path, std::ptrdiff_t expected = -1) {
  if (!v.is_array()) field_error(path, "expected an array of numbers");
  if (expected >= 0 && static_cast<std::ptrdiff_t>(v.size()) != expected) {
    field_error(path, "expected " + std::to_string(expected) + " entries");
  }
  Vec out(static_cast<Eigen::Index>(v.size()));
  for (std::size_t k = 0; k < v.size(); ++k) {
    out(static_cast<Eigen::Index>(k)) = number(v[k], path + "[" + std::to_string(k) + "]");
  }
  return out;
}

std::size_t agent_id(const json& v, std::size_t n_agents, const std::string& path) {
  if (!v.is_number_integer()) field_error(path, "expected an integer agent id");
  const auto id = v.get<long long>();
  if (id < 1 || static_cast<std::size_t>(id) > n_agents) {
    field_error(path, "agent id " + std::to_string(id) + " out of range 1.." + std::to_string(n_agents));
  }
  return static_cast<std::size_t>(id - 1);
}

std::string text_or(const json& obj, const std::string& key, const std::string& fallback,
                    const std::string& path) {
  if (!obj.contains(key)) return fallback;
  if (!obj.at(key).is_string()) field_error(path + "." + key, "expected a string");
  return obj.at(key).get<std::string>();
}

json vec_json(const Vec& v) {
  json a = json::array();
  for (Eigen::Index k = 0; k < v.size(); ++k) a.push_back(v(k));
  return a;
}

ClassKappa parse_alpha(const json& v, const std::string& path) {
  const std::string kind = text_or(v, "kind", "linear", path);
  try {
    if (kind == "linear") return ClassKappa::linear(number_or(v, "gain", 1.0, path));
    if (kind == "odd_power") {
      const json& p = require(v, "power", path);
      if (!p.is_number_integer()) field_error(path + ".power", "expected an odd integer");
      return ClassKappa::odd_power(p.get<int>(), number_or(v, "scale", 1.0, path));
    }
  } catch (const ValidationError& e) {
    field_error(path, e.what());
  }
  field_error(path + ".kind", "expected 'linear' or 'odd_power'");
}

Scenario from_json(const json& doc) {
  Scenario s;
  if (!doc.is_object()) field_error("<root>", "expected an object");
  s.name = text_or(doc, "name", "", "");

  if (doc.contains("safety")) {
    const json& v = doc.at("safety");
    s.safety.robot_radius = number_or(v, "robot_radius", s.safety.robot_radius, "safety");
    s.safety.connect_distance = number_or(v, "connect_distance", s.safety.connect_distance, "safety");
    s.safety.sharpness = number_or(v, "sharpness", s.safety.sharpness, "safety");
  }

  if (doc.contains("obstacles")) {
    const json& obs = doc.at("obstacles");
    if (!obs.is_array()) field_error("obstacles", "expected an array");
    for (std::size_t k = 0; k < obs.size(); ++k) {
      const std::string p = "obstacles[" + std::to_string(k) + "]";
      Obstacle o;
      o.center = vector_of(require(obs[k], "center", p), p + ".center", 2);
      o.radius = number(require(obs[k], "radius", p), p + ".radius");
      s.obstacles.push_back(o);
    }
  }

  if (doc.contains("goals")) {
    const json& goals = doc.at("goals");
    if (!goals.is_object()) field_error("goals", "expected an object keyed by goal name");
    for (const auto& [name, g] : goals.items()) {
      const std::string p = "goals." + name;
      Goal goal;
      goal.name = name;
      goal.center = vector_of(require(g, "center", p), p + ".center", 2);
      goal.tolerance = number(require(g, "tolerance", p), p + ".tolerance");
      s.goals.push_back(goal);
    }
  }

  const json& agents = require(doc, "agents", "");
  if (!agents.is_array()) field_error("agents", "expected an array");
  const std::size_t total = agents.size();
  std::size_t n_controllable = 0;
  bool seen_uncontrollable = false;
  for (std::size_t k = 0; k < total; ++k) {
    const json& a = agents[k];
    const std::string p = "agents[" + std::to_string(k) + "]";
    if (a.contains("id") && agent_id(a.at("id"), total, p + ".id") != k) {
      field_error(p + ".id", "agents must be listed in id order starting at 1");
    }
    const json& ctl = require(a, "controllable", p);
    if (!ctl.is_boolean()) field_error(p + ".controllable", "expected true or false");
    if (ctl.get<bool>()) {
      if (seen_uncontrollable) {
        field_error(p + ".controllable", "controllable agents must precede uncontrollable ones");
      }
      ++n_controllable;
    } else {
      seen_uncontrollable = true;
    }

    AgentSpec spec;
    const json& model = require(a, "model", p);
    const std::string kind = text_or(model, "kind", "unicycle", p + ".model");
    if (kind == "unicycle") {
      spec.model = ModelKind::unicycle;
      spec.offset = number(require(model, "offset", p + ".model"), p + ".model.offset");
    } else if (kind == "single_integrator") {
      spec.model = ModelKind::single_integrator;
      spec.offset = 0.0;
    } else {
      field_error(p + ".model.kind", "expected 'unicycle' or 'single_integrator'");
    }
    const Vec limits = vector_of(require(a, "bounds", p), p + ".bounds");
    if (!(limits.array() > 0.0).all()) field_error(p + ".bounds", "limits must be positive");
    spec.bounds.limits = limits;
    spec.initial_state = vector_of(require(a, "initial", p), p + ".initial");
    spec.goal = text_or(a, "goal", "", p);
    spec.goal_required = a.contains("goal_required") ? a.at("goal_required").get<bool>() : !spec.goal.empty();
    spec.nominal_gain = number_or(a, "nominal_gain", spec.nominal_gain, p);
    if (a.contains("hold_at_goal")) {
      if (!a.at("hold_at_goal").is_boolean()) field_error(p + ".hold_at_goal", "expected true or false");
      spec.hold_at_goal = a.at("hold_at_goal").get<bool>();
    }
    if (a.contains("follow")) spec.follow = agent_id(a.at("follow"), total, p + ".follow");
    spec.follow_distance = number_or(a, "follow_distance", spec.follow_distance, p);
    spec.target_margin = number_or(a, "target_margin", spec.target_margin, p);
    if (a.contains("alpha")) spec.alpha = parse_alpha(a.at("alpha"), p + ".alpha");
    if (a.contains("weight")) spec.weight_diag = vector_of(a.at("weight"), p + ".weight");
    if (a.contains("barrier")) {
      const json& bar = a.at("barrier");
      if (!bar.is_array()) field_error(p + ".barrier", "expected an array");
      for (std::size_t q = 0; q < bar.size(); ++q) {
        const std::string bp = p + ".barrier[" + std::to_string(q) + "]";
        PrimitiveDecl d;
        try {
          d.kind = primitive_kind_from_string(text_or(bar[q], "kind", "", bp));
        } catch (const ValidationError& e) {
          field_error(bp + ".kind", e.what());
        }
        if (d.kind == PrimitiveKind::circle_avoid) {
          const json& o = require(bar[q], "obstacle", bp);
          if (!o.is_number_integer() || o.get<long long>() < 1 ||
              static_cast<std::size_t>(o.get<long long>()) > s.obstacles.size()) {
            field_error(bp + ".obstacle", "expected an obstacle number 1.." + std::to_string(s.obstacles.size()));
          }
          d.obstacle = static_cast<std::size_t>(o.get<long long>() - 1);
        } else {
          d.other = agent_id(require(bar[q], "with", bp), total, bp + ".with");
        }
        spec.barrier.push_back(d);
      }
    }
    s.agents.push_back(std::move(spec));
  }

  std::vector<std::pair<std::size_t, std::size_t>> edges;
  std::vector<std::pair<std::size_t, std::size_t>> observations;
  const json& topo = require(doc, "topology", "");
  if (topo.contains("edges")) {
    const json& es = topo.at("edges");
    for (std::size_t k = 0; k < es.size(); ++k) {
      const std::string p = "topology.edges[" + std::to_string(k) + "]";
      if (!es[k].is_array() || es[k].size() != 2) field_error(p, "expected [i, j]");
      edges.emplace_back(agent_id(es[k][0], total, p), agent_id(es[k][1], total, p));
    }
  }
  if (topo.contains("observations")) {
    const json& os = topo.at("observations");
    for (std::size_t k = 0; k < os.size(); ++k) {
      const std::string p = "topology.observations[" + std::to_string(k) + "]";
      if (!os[k].is_array() || os[k].size() != 2) field_error(p, "expected [observer, target]");
      observations.emplace_back(agent_id(os[k][0], total, p), agent_id(os[k][1], total, p));
    }
  }
  try {
    s.topology = make_topology(n_controllable, total - n_controllable, edges, observations);
  } catch (const ValidationError& e) {
    field_error("topology", e.what());
  }

  if (doc.contains("observer")) {
    const json& v = doc.at("observer");
    if (v.contains("weight")) s.observer.weight_diag = vector_of(v.at("weight"), "observer.weight", 2);
    s.observer.sigma = number_or(v, "sigma", s.observer.sigma, "observer");
    s.observer.initial_gain = number_or(v, "delta0", s.observer.initial_gain, "observer");
    if (v.contains("initial_offset")) {
      s.observer.initial_offset = vector_of(v.at("initial_offset"), "observer.initial_offset", 2);
    }
  }

  if (doc.contains("rcbf")) {
    const json& v = doc.at("rcbf");
    RcbfParams& r = s.rcbf;
    const std::string mode = text_or(v, "init_mode", "fixed", "rcbf");
    if (mode == "fixed") {
      r.init_mode = InitMode::fixed;
    } else if (mode == "half-margin") {
      r.init_mode = InitMode::half_margin;
    } else {
      field_error("rcbf.init_mode", "expected 'fixed' or 'half-margin'");
    }
    r.theta0 = number_or(v, "theta0", r.theta0, "rcbf");
    r.r_hat0 = number_or(v, "r_hat0", r.r_hat0, "rcbf");
    r.rho0 = number_or(v, "rho0", r.rho0, "rcbf");
    r.rho_inf = number_or(v, "rho_inf", r.rho_inf, "rcbf");
    r.varrho = number_or(v, "varrho", r.varrho, "rcbf");
    r.c = number_or(v, "c", r.c, "rcbf");
    r.varsigma = number_or(v, "varsigma", r.varsigma, "rcbf");
    r.gamma = number_or(v, "gamma", r.gamma, "rcbf");
    r.epsilon = number_or(v, "epsilon", r.epsilon, "rcbf");
    r.guard = number_or(v, "guard", r.guard, "rcbf");
  }

  if (doc.contains("engine")) {
    const json& v = doc.at("engine");
    EngineParams& e = s.engine;
    e.dt = number_or(v, "dt", e.dt, "engine");
    e.horizon = number_or(v, "horizon", e.horizon, "engine");
    e.goal_hold = number_or(v, "goal_hold", e.goal_hold, "engine");
    e.slack_penalty = number_or(v, "slack_penalty", e.slack_penalty, "engine");
    const std::string mode = text_or(v, "mode", "distributed", "engine");
    if (mode == "distributed") {
      e.mode = ControlMode::distributed;
    } else if (mode == "centralized-baseline") {
      e.mode = ControlMode::centralized;
    } else {
      field_error("engine.mode", "expected 'distributed' or 'centralized-baseline'");
    }
    if (v.contains("seed")) {
      if (!v.at("seed").is_number_unsigned()) field_error("engine.seed", "expected a nonnegative integer");
      e.seed = v.at("seed").get<std::uint64_t>();
    }
  }
  return s;
}

std::string line_and_column(const std::string& text, std::size_t byte) {
  std::size_t line = 1;
  std::size_t col = 1;
  for (std::size_t k = 0; k < byte && k < text.size(); ++k) {
    if (text[k] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

}  // namespace

Scenario parse_scenario(const std::string& text, const std::string& source) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError(source + ": parse error at " + line_and_column(text, e.byte == 0 ? 0 : e.byte - 1) +
                          ": " + e.what());
  }
  Scenario s;
  try {
    s = from_json(doc);
  } catch (const json::exception& e) {
    throw ValidationError(source + ": " + e.what());
  } catch (const ValidationError& e) {
    throw ValidationError(source + ": " + e.what());
  }
  try {
    validate(s);
  } catch (const ValidationError& e) {
    throw ValidationError(source + ": " + e.what());
  }
  return s;
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError(path.string() + ": cannot open scenario file");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str(), path.string());
}

std::string serialize_scenario(const Scenario& s) {
  json doc;
  doc["name"] = s.name;
  doc["safety"] = {{"robot_radius", s.safety.robot_radius},
                   {"connect_distance", s.safety.connect_distance},
                   {"sharpness", s.safety.sharpness}};
  doc["obstacles"] = json::array();
  for (const Obstacle& o : s.obstacles) doc["obstacles"].push_back({{"center", vec_json(o.center)}, {"radius", o.radius}});
  doc["goals"] = json::object();
  for (const Goal& g : s.goals) doc["goals"][g.name] = {{"center", vec_json(g.center)}, {"tolerance", g.tolerance}};

  doc["agents"] = json::array();
  for (std::size_t k = 0; k < s.agents.size(); ++k) {
    const AgentSpec& a = s.agents[k];
    json j;
    j["id"] = k + 1;
    j["controllable"] = s.topology.is_controllable(k);
    if (a.model == ModelKind::unicycle) {
      j["model"] = {{"kind", "unicycle"}, {"offset", a.offset}};
    } else {
      j["model"] = {{"kind", "single_integrator"}};
    }
    j["bounds"] = vec_json(a.bounds.limits);
    j["initial"] = vec_json(a.initial_state);
    if (!a.goal.empty()) j["goal"] = a.goal;
    j["goal_required"] = a.goal_required;
    j["nominal_gain"] = a.nominal_gain;
    j["hold_at_goal"] = a.hold_at_goal;
    if (a.follow) {
      j["follow"] = *a.follow + 1;
      j["follow_distance"] = a.follow_distance;
      j["target_margin"] = a.target_margin;
    }
    if (s.topology.is_controllable(k)) {
      if (a.alpha.kind == ClassKappa::Kind::linear) {
        j["alpha"] = {{"kind", "linear"}, {"gain", a.alpha.gain}};
      } else {
        j["alpha"] = {{"kind", "odd_power"}, {"power", a.alpha.power}, {"scale", a.alpha.scale}};
      }
      j["weight"] = vec_json(weight_for(a).diagonal());
      json bar = json::array();
      for (const PrimitiveDecl& d : a.barrier) {
        json pj;
        pj["kind"] = std::string(to_string(d.kind));
        if (d.kind == PrimitiveKind::circle_avoid) {
          pj["obstacle"] = d.obstacle + 1;
        } else {
          pj["with"] = d.other + 1;
        }
        bar.push_back(pj);
      }
      j["barrier"] = bar;
    }
    doc["agents"].push_back(j);
  }

  json edges = json::array();
  json observations = json::array();
  const Topology& t = s.topology;
  for (std::size_t i = 0; i < t.n_controllable; ++i) {
    for (std::size_t j = i + 1; j < t.n_controllable; ++j) {
      if (t.adjacency(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) != 0.0) edges.push_back({i + 1, j + 1});
    }
    for (std::size_t l = 0; l < t.n_uncontrollable; ++l) {
      if (t.observation_links(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(l)) != 0.0) {
        observations.push_back({i + 1, t.n_controllable + l + 1});
      }
    }
  }
  doc["topology"] = {{"edges", edges}, {"observations", observations}};

  doc["observer"] = {{"weight", vec_json(s.observer.weight_diag)},
                     {"sigma", s.observer.sigma},
                     {"delta0", s.observer.initial_gain},
                     {"initial_offset", vec_json(s.observer.initial_offset)}};
  const RcbfParams& r = s.rcbf;
  doc["rcbf"] = {{"init_mode", r.init_mode == InitMode::fixed ? "fixed" : "half-margin"},
                 {"theta0", r.theta0}, {"r_hat0", r.r_hat0}, {"rho0", r.rho0},
                 {"rho_inf", r.rho_inf}, {"varrho", r.varrho}, {"c", r.c},
                 {"varsigma", r.varsigma}, {"gamma", r.gamma}, {"epsilon", r.epsilon},
                 {"guard", r.guard}};
  const EngineParams& e = s.engine;
  doc["engine"] = {{"dt", e.dt}, {"horizon", e.horizon}, {"goal_hold", e.goal_hold},
                   {"slack_penalty", e.slack_penalty},
                   {"mode", e.mode == ControlMode::distributed ? "distributed" : "centralized-baseline"},
                   {"seed", e.seed}};
  return doc.dump(2) + "\n";
}

std::vector<std::string> trace_header(std::size_t n_agents, std::size_t n_controllable) {
  std::vector<std::string> h{"t"};
  for (std::size_t k = 1; k <= n_agents; ++k) {
    const std::string id = std::to_string(k);
    for (const char* c : {"p%_x", "p%_y", "th%", "v%", "w%"}) {
      std::string name = c;
      name.replace(name.find('%'), 1, id);
      h.push_back(name);
    }
  }
  for (std::size_t i = 1; i <= n_controllable; ++i) {
    const std::string id = std::to_string(i);
    for (const char* c : {"h%_true", "h%_hat", "e%", "rho%", "theta%", "rhat%", "slack%", "event%"}) {
      std::string name = c;
      name.replace(name.find('%'), 1, id);
      h.push_back(name);
    }
  }
  for (std::size_t i = 1; i <= n_controllable; ++i) {
    for (std::size_t l = 1; l <= n_agents; ++l) {
      h.push_back("esterr_" + std::to_string(i) + "_" + std::to_string(l));
    }
  }
  return h;
}

void write_trace(const std::vector<TraceRecord>& records, std::size_t n_agents,
                 std::size_t n_controllable, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write trace to " + path.string());
  const std::vector<std::string> header = trace_header(n_agents, n_controllable);
  for (std::size_t k = 0; k < header.size(); ++k) out << (k ? "," : "") << header[k];
  out << '\n';
  for (const TraceRecord& r : records) {
    if (r.positions.size() != n_agents || r.agents.size() != n_controllable ||
        r.estimate_errors.size() != n_agents * n_controllable) {
      throw Error("write_trace: record does not match the trace schema");
    }
    out << format_number(r.t);
    for (std::size_t k = 0; k < n_agents; ++k) {
      const Vec& u = r.inputs[k];
      out << ',' << format_number(r.positions[k].x()) << ',' << format_number(r.positions[k].y())
          << ',' << format_number(r.headings[k]) << ',' << format_number(u.size() > 0 ? u(0) : 0.0)
          << ',' << format_number(u.size() > 1 ? u(1) : 0.0);
    }
    for (const AgentDiagnostics& d : r.agents) {
      out << ',' << format_number(d.h_true) << ',' << format_number(d.h_hat) << ','
          << format_number(d.error) << ',' << format_number(d.rho) << ',' << format_number(d.theta)
          << ',' << format_number(d.r_hat) << ',' << format_number(d.slack) << ',' << d.events;
    }
    for (double e : r.estimate_errors) out << ',' << format_number(e);
    out << '\n';
  }
  if (!out) throw Error("failed while writing trace to " + path.string());
}

std::size_t TraceTable::column(const std::string& name) const {
  for (std::size_t k = 0; k < header.size(); ++k) {
    if (header[k] == name) return k;
  }
  throw std::out_of_range("trace has no column '" + name + "'");
}

TraceTable read_trace(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read trace " + path.string());
  TraceTable table;
  std::string line;
  if (!std::getline(in, line)) return table;
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) table.header.push_back(cell);
  }
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
    if (row.size() != table.header.size()) {
      throw Error("trace row " + std::to_string(table.rows.size() + 1) + " has " +
                  std::to_string(row.size()) + " cells, header has " + std::to_string(table.header.size()));
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

std::string report_to_json(const Scenario& scenario, const MonitorReport& m) {
  const auto finite_or_null = [](double v) -> json { return std::isfinite(v) ? json(v) : json(nullptr); };
  json doc;
  doc["scenario"] = scenario.name;
  doc["mode"] = scenario.engine.mode == ControlMode::distributed ? "distributed" : "centralized-baseline";
  doc["steps"] = m.steps;
  doc["end_time"] = m.end_time;
  doc["early_stop"] = m.early_stop;
  doc["safety_violations"] = m.safety_violations;
  doc["funnel_violations"] = m.funnel_violations;
  doc["relaxations"] = m.relaxations;
  doc["infeasible_steps"] = m.infeasible_steps;
  doc["max_slack"] = m.max_slack;
  doc["min_separation"] = finite_or_null(m.min_separation);
  doc["min_obstacle_clearance"] = finite_or_null(m.min_obstacle_clearance);
  doc["max_connectivity_excess"] = finite_or_null(m.max_connectivity_excess);
  json agents = json::array();
  for (std::size_t i = 0; i < m.min_h_true.size(); ++i) {
    agents.push_back({{"agent", i + 1},
                      {"min_h_true", finite_or_null(m.min_h_true[i])},
                      {"min_h_hat", finite_or_null(m.min_h_hat[i])},
                      {"min_error", finite_or_null(m.min_error[i])},
                      {"min_funnel_margin", finite_or_null(m.min_funnel_margin[i])}});
  }
  doc["controllable"] = agents;
  json goals = json::array();
  for (std::size_t k = 0; k < m.goal_times.size(); ++k) {
    json g = {{"agent", k + 1}};
    if (m.goal_tolerances[k] <= 0.0) {
      g["goal_time"] = "no goal predicate";
    } else if (m.goal_times[k]) {
      g["goal_time"] = *m.goal_times[k];
    } else {
      g["goal_time"] = "not reached";
    }
    g["tolerance"] = m.goal_tolerances[k];
    goals.push_back(g);
  }
  doc["goals"] = goals;
  return doc.dump(2) + "\n";
}

}  // namespace ccbf
