#include "ccbf/engine.hpp"
#include "ccbf/io.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iostream>
#include <optional>

namespace {

enum ExitCode { kClean = 0, kSafetyViolation = 1, kUsage = 2, kNumerical = 3 };

int fail(ExitCode code, const std::string& reason, const std::string& message) {
  nlohmann::json j = {{"status", "error"}, {"reason", reason}, {"message", message}, {"exit_code", code}};
  std::cerr << j.dump() << '\n';
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Distributed coupled-CBF multi-agent simulator"};
  std::string scenario_path;
  std::string trace_path;
  std::string report_path;
  std::optional<double> dt;
  std::optional<double> horizon;
  std::string mode;

  app.add_option("-s,--scenario", scenario_path, "Scenario JSON file")->required();
  app.add_option("-t,--trace", trace_path, "Output CSV trace");
  app.add_option("-r,--report", report_path, "Output JSON summary report (stdout if omitted)");
  app.add_option("--dt", dt, "Step size override [s]")->check(CLI::PositiveNumber);
  app.add_option("--horizon", horizon, "Horizon override [s]")->check(CLI::NonNegativeNumber);
  app.add_option("--mode", mode, "Controller mode")->check(CLI::IsMember({"distributed", "centralized-baseline"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail(kUsage, "usage", e.what());
  }

  ccbf::Scenario scenario;
  try {
    scenario = ccbf::load_scenario(scenario_path);
    if (dt) scenario.engine.dt = *dt;
    if (horizon) scenario.engine.horizon = *horizon;
    if (mode == "distributed") scenario.engine.mode = ccbf::ControlMode::distributed;
    if (mode == "centralized-baseline") scenario.engine.mode = ccbf::ControlMode::centralized;
    ccbf::validate(scenario);
  } catch (const ccbf::ValidationError& e) {
    return fail(kUsage, "validation", e.what());
  } catch (const ccbf::Error& e) {
    return fail(kUsage, "io", e.what());
  }

  ccbf::RunResult result;
  try {
    const ccbf::Simulator sim(scenario);
    result = sim.run();
  } catch (const ccbf::ValidationError& e) {
    return fail(kUsage, "validation", e.what());
  } catch (const ccbf::NumericalError& e) {
    return fail(kNumerical, "numerical", e.what());
  } catch (const ccbf::InfeasibleError& e) {
    return fail(kNumerical, "infeasible", e.what());
  }

  try {
    if (!trace_path.empty()) {
      ccbf::write_trace(result.trace, scenario.n_agents(), scenario.n_controllable(), trace_path);
    }
    const std::string report = ccbf::report_to_json(scenario, result.report);
    if (report_path.empty()) {
      std::cout << report;
    } else {
      std::ofstream out(report_path);
      if (!out) throw ccbf::Error("cannot write report to " + report_path);
      out << report;
    }
  } catch (const ccbf::Error& e) {
    return fail(kUsage, "io", e.what());
  }

  if (result.report.safety_violations > 0) {
    return fail(kSafetyViolation, "safety_violation",
                std::to_string(result.report.safety_violations) + " (step, agent) samples with h_i(x) < -1e-6");
  }
  return kClean;
}
