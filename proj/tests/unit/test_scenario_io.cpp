#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "ccbf/engine.hpp"
#include "ccbf/io.hpp"
#include "fixtures.hpp"

using namespace ccbf;
namespace fs = std::filesystem;

namespace {

std::string read_file(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path temp_path(const std::string& name) { return fs::temp_directory_path() / ("ccbf_unit_" + name); }

std::string rejection(const Scenario& s) {
  try {
    validate(s);
  } catch (const ValidationError& e) {
    return e.what();
  }
  return "";
}

bool contains(const std::string& haystack, const std::string& needle) {
  return haystack.find(needle) != std::string::npos;
}

}  // namespace

TEST_CASE("four-robot scenario constants") {
  const Scenario s = fixtures::four_robots();
  REQUIRE(s.n_agents() == 4);
  CHECK(s.n_controllable() == 3);

  REQUIRE(s.obstacles.size() == 3);
  CHECK(s.obstacles[0].center == Vec2(0.8, 2.5));
  CHECK(s.obstacles[0].radius == 0.5);
  CHECK(s.obstacles[1].center == Vec2(3.0, 3.5));
  CHECK(s.obstacles[1].radius == 0.3);
  CHECK(s.obstacles[2].center == Vec2(3.0, 1.5));
  CHECK(s.obstacles[2].radius == 0.5);

  const Goal* g0 = goal_for(s, 3);
  const Goal* g1 = goal_for(s, 0);
  REQUIRE(g0);
  REQUIRE(g1);
  CHECK(g0->center == Vec2(0.0, 4.0));
  CHECK(g0->tolerance == 0.05);
  CHECK(g1->center == Vec2(1.0, 0.5));
  CHECK(g1->tolerance == 0.4);
  CHECK(goal_for(s, 1) == g1);

  CHECK(s.safety.robot_radius == 0.1);
  CHECK(s.safety.connect_distance == 1.25);
  CHECK(s.safety.sharpness == 20.0);

  const double initial[4][3] = {{4, 4, 0}, {4, 3, 0}, {4, 0.5, -M_PI}, {3.5, 0.6, -M_PI}};
  for (std::size_t k = 0; k < 4; ++k) {
    const AgentSpec& a = s.agents[k];
    CHECK(a.model == ModelKind::unicycle);
    CHECK(a.offset == 0.036);
    CHECK(a.bounds.limits(0) == 0.22);
    CHECK(a.bounds.limits(1) == 2.84);
    for (int c = 0; c < 3; ++c) CHECK(a.initial_state(c) == initial[k][c]);
  }
  for (std::size_t i = 0; i < 3; ++i) {
    const Mat w = weight_for(s.agents[i]);
    CHECK(w(0, 0) == 1.0);
    CHECK(w(1, 1) == doctest::Approx(0.036 * 0.036).epsilon(1e-12));
  }
  CHECK(s.agents[0].alpha.kind == ClassKappa::Kind::linear);
  CHECK(s.agents[0].alpha.gain == 1.0);
  CHECK(s.agents[1].alpha.kind == ClassKappa::Kind::linear);
  CHECK(s.agents[2].alpha.kind == ClassKappa::Kind::odd_power);
  CHECK(s.agents[2].alpha.power == 5);
  CHECK(s.agents[2].alpha.scale == 0.1);

  CHECK(s.observer.weight_diag == Vec::Constant(2, 2.0));
  CHECK(s.observer.sigma == 0.01);
  CHECK(s.observer.initial_gain == 2.0);
  CHECK(s.observer.initial_offset == Vec2::Zero());

  const RcbfParams& r = s.rcbf;
  CHECK(r.init_mode == InitMode::fixed);
  CHECK(r.theta0 == 0.1);
  CHECK(r.r_hat0 == 0.0);
  CHECK(r.rho0 == 1.0);
  CHECK(r.rho_inf == 0.15);
  CHECK(r.varrho == 1.0);
  CHECK(r.c == 0.01);
  CHECK(r.varsigma == 0.8);
  CHECK(r.gamma == 0.01);
  CHECK(r.epsilon == 0.01);

  CHECK(s.topology.measures(2, 3) == 1.0);
  CHECK(s.topology.measures(0, 3) == 0.0);
  CHECK(s.topology.measures(1, 3) == 0.0);
  CHECK_NOTHROW(validate(s));
}

TEST_CASE("initial reconstruction with fixed theta") {
  const Scenario s = fixtures::four_robots();
  for (const AgentInitialCondition& ic : initial_conditions(s)) {
    CHECK(ic.h_estimate == ic.h_true);
    CHECK(ic.h_hat() == doctest::Approx(ic.h_true - 0.1));
    CHECK(ic.error() == doctest::Approx(0.1));
  }
}

TEST_CASE("half-margin initialisation") {
  Scenario s = fixtures::four_robots();
  s.rcbf.init_mode = InitMode::half_margin;
  s.observer.initial_offset = Vec2(0.05, 0.0);
  for (const AgentInitialCondition& ic : initial_conditions(s)) {
    CHECK(ic.rcbf.funnel.rho0 == ic.h_true);
    CHECK(ic.h_hat() == doctest::Approx(ic.h_true / 2.0));
    CHECK(ic.error() == doctest::Approx(ic.h_true / 2.0));
  }
  CHECK_NOTHROW(validate(s));
}

TEST_CASE("scenario rejections name the problem") {
  SUBCASE("funnel ordering") {
    Scenario s = fixtures::four_robots();
    s.rcbf.rho_inf = 1.5;
    CHECK(contains(rejection(s), "rho_inf"));
  }
  SUBCASE("disconnected controllable graph") {
    Scenario s = fixtures::four_robots();
    s.topology = make_topology(3, 1, {{0, 1}}, {{2, 3}});
    CHECK(contains(rejection(s), "not connected"));
  }
  SUBCASE("unobserved uncontrollable agent") {
    Scenario s = fixtures::four_robots();
    s.topology = make_topology(3, 1, {{0, 1}, {1, 2}}, {});
    CHECK(contains(rejection(s), "not observed"));
  }
  SUBCASE("unsafe start") {
    Scenario s = fixtures::four_robots();
    s.agents[0].initial_state.head<2>() = Vec2(0.8, 2.5);
    const std::string msg = rejection(s);
    CHECK(contains(msg, "h(x(0))"));
    CHECK(contains(msg, "agents[0]"));
  }
  SUBCASE("reconstruction error outside the funnel") {
    Scenario s = fixtures::four_robots();
    s.rcbf.theta0 = -0.1;
    CHECK(contains(rejection(s), "e(0)"));
  }
  SUBCASE("centralized filter with an uncontrollable agent") {
    Scenario s = fixtures::four_robots();
    s.engine.mode = ControlMode::centralized;
    CHECK(contains(rejection(s), "engine.mode"));
  }
  SUBCASE("follow only for controllable agents") {
    Scenario s = fixtures::four_robots();
    s.agents[3].follow = 0;
    CHECK(contains(rejection(s), "follow"));
  }
}

TEST_CASE("parse errors report location or field") {
  try {
    parse_scenario("{\n  \"agents\": [,]\n}", "bad.json");
    FAIL("expected a parse error");
  } catch (const ValidationError& e) {
    CHECK(contains(e.what(), "bad.json"));
    CHECK(contains(e.what(), "line 2"));
  }
  try {
    parse_scenario(R"({"agents": [{"id": 1, "controllable": true}], "topology": {"edges": []}})", "x.json");
    FAIL("expected a field error");
  } catch (const ValidationError& e) {
    CHECK(contains(e.what(), "agents[0]"));
  }
  CHECK_THROWS_AS(load_scenario("/nonexistent/scenario.json"), Error);
}

TEST_CASE("serialisation round trip") {
  for (const char* name : {"four_robots.json", "baseline_pair.json"}) {
    const Scenario a = load_scenario(fixtures::scenario_path(name));
    const std::string text = serialize_scenario(a);
    const Scenario b = parse_scenario(text, "round-trip");
    CHECK(serialize_scenario(b) == text);
    CHECK(b.name == a.name);
    CHECK(b.topology.adjacency == a.topology.adjacency);
    CHECK(b.topology.observation_links == a.topology.observation_links);
    REQUIRE(b.agents.size() == a.agents.size());
    for (std::size_t k = 0; k < a.agents.size(); ++k) {
      CHECK(b.agents[k].initial_state == a.agents[k].initial_state);
      CHECK(b.agents[k].barrier.size() == a.agents[k].barrier.size());
      CHECK(b.agents[k].follow == a.agents[k].follow);
    }
  }
}

TEST_CASE("trace header layout") {
  const auto h = trace_header(2, 1);
  REQUIRE(h.size() == 1 + 2 * 5 + 8 + 2);
  CHECK(h.front() == "t");
  CHECK(h[1] == "p1_x");
  CHECK(h[5] == "w1");
  CHECK(h[11] == "h1_true");
  CHECK(h[18] == "event1");
  CHECK(h[19] == "esterr_1_1");
  CHECK(h[20] == "esterr_1_2");
}

TEST_CASE("trace files") {
  SUBCASE("empty trace writes only the header") {
    const fs::path p = temp_path("empty.csv");
    write_trace({}, 4, 3, p);
    const std::string text = read_file(p);
    CHECK(std::count(text.begin(), text.end(), '\n') == 1);
    const TraceTable t = read_trace(p);
    CHECK(t.rows.empty());
    CHECK(t.header == trace_header(4, 3));
    fs::remove(p);
  }
  SUBCASE("one record gives two lines and round trips") {
    Scenario s = fixtures::four_robots();
    const Simulator sim(s);
    const TraceRecord rec = sim.step(sim.initial_world(), 0.01).record;
    const fs::path p = temp_path("one.csv");
    write_trace({rec}, 4, 3, p);
    const std::string text = read_file(p);
    CHECK(std::count(text.begin(), text.end(), '\n') == 2);
    const TraceTable t = read_trace(p);
    REQUIRE(t.rows.size() == 1);
    const auto& row = t.rows[0];
    CHECK(row[t.column("p4_x")] == doctest::Approx(rec.positions[3].x()).epsilon(1e-9));
    CHECK(row[t.column("th3")] == doctest::Approx(rec.headings[2]).epsilon(1e-9));
    CHECK(row[t.column("h2_hat")] == doctest::Approx(rec.agents[1].h_hat).epsilon(1e-9));
    CHECK(row[t.column("rho1")] == doctest::Approx(1.0));
    CHECK(row[t.column("esterr_3_4")] == 0.0);
    CHECK_THROWS_AS(t.column("nope"), std::out_of_range);
    fs::remove(p);
  }
  SUBCASE("short run round trips to nine digits") {
    Scenario s = fixtures::four_robots();
    s.engine.horizon = 0.5;
    const RunResult r = Simulator(s).run();
    const fs::path p = temp_path("run.csv");
    write_trace(r.trace, 4, 3, p);
    const TraceTable t = read_trace(p);
    REQUIRE(t.rows.size() == r.trace.size());
    const std::size_t c = t.column("theta2");
    for (std::size_t k = 0; k < r.trace.size(); ++k) {
      const double v = r.trace[k].agents[1].theta;
      CHECK(std::abs(t.rows[k][c] - v) <= 1e-8 * std::max(1.0, std::abs(v)));
    }
    fs::remove(p);
  }
  SUBCASE("unwritable path and schema mismatch") {
    CHECK_THROWS_AS(write_trace({}, 1, 1, "/nonexistent/dir/trace.csv"), Error);
    TraceRecord rec;
    CHECK_THROWS_AS(write_trace({rec}, 4, 3, temp_path("bad.csv")), Error);
  }
}

TEST_CASE("report json") {
  Scenario s = fixtures::four_robots();
  s.engine.horizon = 0.2;
  const RunResult r = Simulator(s).run();
  const std::string json = report_to_json(s, r.report);
  CHECK(contains(json, "\"min_separation\""));
  CHECK(contains(json, "\"funnel_violations\""));
  CHECK(contains(json, "not reached"));
  CHECK(contains(json, "no goal predicate"));
}

TEST_CASE("init mode names") {
  Scenario s = fixtures::four_robots();
  s.rcbf.init_mode = InitMode::half_margin;
  const std::string text = serialize_scenario(s);
  CHECK(contains(text, "\"half-margin\""));
  CHECK(parse_scenario(text).rcbf.init_mode == InitMode::half_margin);
  std::string bad = text;
  bad.replace(bad.find("half-margin"), 11, "mystery");
  CHECK_THROWS_WITH_AS(parse_scenario(bad), doctest::Contains("rcbf.init_mode"), ValidationError);
}
