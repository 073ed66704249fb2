#pragma once

#include "ccbf/engine.hpp"
#include "ccbf/scenario.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace ccbf {

/// Parse errors report line and column; validation errors name the field.
Scenario parse_scenario(const std::string& text, const std::string& source = "<string>");
Scenario load_scenario(const std::filesystem::path& path);

/// JSON text with every default made explicit; parse_scenario round-trips it.
std::string serialize_scenario(const Scenario& scenario);

/// t; per agent k: pk_x, pk_y, thk, vk, wk; per controllable i: hi_true,
/// hi_hat, ei, rhoi, thetai, rhati, slacki, eventi; per (i, l): esterr_i_l.
std::vector<std::string> trace_header(std::size_t n_agents, std::size_t n_controllable);

/// CSV, 9 significant digits, header first. Throws Error if unwritable.
void write_trace(const std::vector<TraceRecord>& records, std::size_t n_agents,
                 std::size_t n_controllable, const std::filesystem::path& path);

struct TraceTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  /// Column index by name; throws std::out_of_range naming the column.
  std::size_t column(const std::string& name) const;
};

TraceTable read_trace(const std::filesystem::path& path);

std::string report_to_json(const Scenario& scenario, const MonitorReport& report);

}  // namespace ccbf
