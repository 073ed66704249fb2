#pragma once

#include <random>
#include <string>

#include "ccbf/io.hpp"
#include "ccbf/scenario.hpp"

namespace fixtures {

inline std::string scenario_path(const std::string& name) {
  return std::string(CCBF_SCENARIO_DIR) + "/" + name;
}

inline ccbf::Scenario four_robots() { return ccbf::load_scenario(scenario_path("four_robots.json")); }

/// Uniform positions for `agents` agents over the workspace [-0.5, 4.5]^2.
inline ccbf::Vec random_positions(std::mt19937_64& rng, std::size_t agents) {
  std::uniform_real_distribution<double> u(-0.5, 4.5);
  ccbf::Vec p(static_cast<Eigen::Index>(2 * agents));
  for (Eigen::Index k = 0; k < p.size(); ++k) p(k) = u(rng);
  return p;
}

}  // namespace fixtures
