#pragma once

#include "ccbf/common.hpp"

#include <functional>
#include <span>
#include <string_view>
#include <vector>

namespace ccbf {

enum class PrimitiveKind { circle_avoid, pair_separation, pair_connectivity };

std::string_view to_string(PrimitiveKind kind);
PrimitiveKind primitive_kind_from_string(std::string_view name);

// One smooth scalar constraint b(p) >= 0 over planar positions:
//   circle_avoid:      |p_i - c|^2 - (r_R + r_O)^2
//   pair_separation:   |p_i - p_j|^2 - 4 r_R^2
//   pair_connectivity: d_f^2 - |p_i - p_j|^2
struct PrimitiveConstraint {
  PrimitiveKind kind = PrimitiveKind::circle_avoid;
  std::size_t subject = 0;
  std::size_t other = 0;  // pair kinds only
  Vec2 center = Vec2::Zero();
  double obstacle_radius = 0.0;
  double robot_radius = 0.0;
  double connect_distance = 0.0;

  static PrimitiveConstraint circle_avoid(std::size_t agent, const Vec2& center,
                                          double obstacle_radius, double robot_radius);
  static PrimitiveConstraint pair_separation(std::size_t agent, std::size_t other,
                                             double robot_radius);
  static PrimitiveConstraint pair_connectivity(std::size_t agent, std::size_t other,
                                               double connect_distance);
};

inline constexpr double kDefaultSharpness = 20.0;

/// h = softmin_kappa over the primitives.
struct BarrierSpec {
  std::vector<PrimitiveConstraint> primitives;
  double sharpness = kDefaultSharpness;
};

void validate(const BarrierSpec& spec, std::size_t n_agents);

struct BarrierValue {
  double value = 0.0;
  Vec gradient;  // w.r.t. stacked positions, 2 per agent
};

/// Stacked positions are [p_1; p_2; ...] with 2 entries per agent.
BarrierValue eval_primitive(const PrimitiveConstraint& c, const Vec& stacked_positions);

/// -(1/kappa) ln sum_k exp(-kappa b_k), evaluated with a max shift.
double softmin_compose(std::span<const double> values, double kappa);

/// w_k = exp(-kappa b_k) / sum_j exp(-kappa b_j).
Vec softmin_weights(std::span<const double> values, double kappa);

Vec softmin_gradient(std::span<const Vec> gradients, std::span<const double> values, double kappa);

BarrierValue evaluate(const BarrierSpec& spec, const Vec& stacked_positions);
double barrier_value(const BarrierSpec& spec, const Vec& stacked_positions);

/// Central differences, one coordinate at a time.
Vec finite_diff_gradient(const std::function<double(const Vec&)>& h, const Vec& point, double step);

}  // namespace ccbf
