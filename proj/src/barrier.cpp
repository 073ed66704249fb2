#include "ccbf/barrier.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace ccbf {

std::string_view to_string(PrimitiveKind kind) {
  switch (kind) {
    case PrimitiveKind::circle_avoid: return "circle_avoid";
    case PrimitiveKind::pair_separation: return "pair_separation";
    case PrimitiveKind::pair_connectivity: return "pair_connectivity";
  }
  return "unknown";
}

PrimitiveKind primitive_kind_from_string(std::string_view name) {
  if (name == "circle_avoid") return PrimitiveKind::circle_avoid;
  if (name == "pair_separation") return PrimitiveKind::pair_separation;
  if (name == "pair_connectivity") return PrimitiveKind::pair_connectivity;
  throw ValidationError("unknown primitive kind '" + std::string(name) + "'");
}

PrimitiveConstraint PrimitiveConstraint::circle_avoid(std::size_t agent, const Vec2& center,
                                                      double obstacle_radius, double robot_radius) {
  PrimitiveConstraint c;
  c.kind = PrimitiveKind::circle_avoid;
  c.subject = agent;
  c.center = center;
  c.obstacle_radius = obstacle_radius;
  c.robot_radius = robot_radius;
  return c;
}

PrimitiveConstraint PrimitiveConstraint::pair_separation(std::size_t agent, std::size_t other,
                                                         double robot_radius) {
  PrimitiveConstraint c;
  c.kind = PrimitiveKind::pair_separation;
  c.subject = agent;
  c.other = other;
  c.robot_radius = robot_radius;
  return c;
}

PrimitiveConstraint PrimitiveConstraint::pair_connectivity(std::size_t agent, std::size_t other,
                                                           double connect_distance) {
  PrimitiveConstraint c;
  c.kind = PrimitiveKind::pair_connectivity;
  c.subject = agent;
  c.other = other;
  c.connect_distance = connect_distance;
  return c;
}

void validate(const BarrierSpec& spec, std::size_t n_agents) {
  if (spec.primitives.empty()) throw ValidationError("barrier needs at least one primitive");
  if (!(spec.sharpness > 0.0) || !std::isfinite(spec.sharpness)) {
    throw ValidationError("barrier sharpness must be finite and positive");
  }
  for (const auto& c : spec.primitives) {
    if (c.subject >= n_agents) throw ValidationError("barrier primitive subject out of range");
    switch (c.kind) {
      case PrimitiveKind::circle_avoid:
        if (!(c.obstacle_radius > 0.0) || !(c.robot_radius > 0.0)) {
          throw ValidationError("circle_avoid radii must be positive");
        }
        break;
      case PrimitiveKind::pair_separation:
      case PrimitiveKind::pair_connectivity:
        if (c.other >= n_agents || c.other == c.subject) {
          throw ValidationError("pair primitive must reference two distinct agents");
        }
        if (c.kind == PrimitiveKind::pair_separation && !(c.robot_radius > 0.0)) {
          throw ValidationError("pair_separation robot radius must be positive");
        }
        if (c.kind == PrimitiveKind::pair_connectivity && !(c.connect_distance > 0.0)) {
          throw ValidationError("pair_connectivity distance must be positive");
        }
        break;
    }
  }
}

BarrierValue eval_primitive(const PrimitiveConstraint& c, const Vec& stacked_positions) {
  const auto slot = [](std::size_t agent) { return static_cast<Eigen::Index>(2 * agent); };
  BarrierValue out;
  out.gradient = Vec::Zero(stacked_positions.size());
  const Vec2 pi = stacked_positions.segment<2>(slot(c.subject));
  switch (c.kind) {
    case PrimitiveKind::circle_avoid: {
      const Vec2 d = pi - c.center;
      const double r = c.robot_radius + c.obstacle_radius;
      out.value = d.squaredNorm() - r * r;
      out.gradient.segment<2>(slot(c.subject)) = 2.0 * d;
      break;
    }
    case PrimitiveKind::pair_separation: {
      const Vec2 d = pi - stacked_positions.segment<2>(slot(c.other));
      out.value = d.squaredNorm() - 4.0 * c.robot_radius * c.robot_radius;
      out.gradient.segment<2>(slot(c.subject)) = 2.0 * d;
      out.gradient.segment<2>(slot(c.other)) = -2.0 * d;
      break;
    }
    case PrimitiveKind::pair_connectivity: {
      const Vec2 d = pi - stacked_positions.segment<2>(slot(c.other));
      out.value = c.connect_distance * c.connect_distance - d.squaredNorm();
      out.gradient.segment<2>(slot(c.subject)) = -2.0 * d;
      out.gradient.segment<2>(slot(c.other)) = 2.0 * d;
      break;
    }
  }
  return out;
}

double softmin_compose(std::span<const double> values, double kappa) {
  if (values.empty()) throw std::invalid_argument("softmin_compose: no values");
  if (!(kappa > 0.0)) throw std::invalid_argument("softmin_compose: kappa must be positive");
  const double lo = *std::min_element(values.begin(), values.end());
  double sum = 0.0;
  for (double b : values) sum += std::exp(-kappa * (b - lo));
  return lo - std::log(sum) / kappa;
}

Vec softmin_weights(std::span<const double> values, double kappa) {
  if (values.empty()) throw std::invalid_argument("softmin_weights: no values");
  const double lo = *std::min_element(values.begin(), values.end());
  Vec w(static_cast<Eigen::Index>(values.size()));
  for (std::size_t k = 0; k < values.size(); ++k) {
    w(static_cast<Eigen::Index>(k)) = std::exp(-kappa * (values[k] - lo));
  }
  return w / w.sum();
}

Vec softmin_gradient(std::span<const Vec> gradients, std::span<const double> values, double kappa) {
  if (gradients.size() != values.size() || gradients.empty()) {
    throw std::invalid_argument("softmin_gradient: gradients and values must align");
  }
  const Vec w = softmin_weights(values, kappa);
  Vec g = Vec::Zero(gradients.front().size());
  for (std::size_t k = 0; k < gradients.size(); ++k) g += w(static_cast<Eigen::Index>(k)) * gradients[k];
  return g;
}

BarrierValue evaluate(const BarrierSpec& spec, const Vec& stacked_positions) {
  std::vector<double> values;
  std::vector<Vec> gradients;
  values.reserve(spec.primitives.size());
  gradients.reserve(spec.primitives.size());
  for (const auto& c : spec.primitives) {
    BarrierValue b = eval_primitive(c, stacked_positions);
    values.push_back(b.value);
    gradients.push_back(std::move(b.gradient));
  }
  return {softmin_compose(values, spec.sharpness),
          softmin_gradient(gradients, values, spec.sharpness)};
}

double barrier_value(const BarrierSpec& spec, const Vec& stacked_positions) {
  std::vector<double> values;
  values.reserve(spec.primitives.size());
  for (const auto& c : spec.primitives) values.push_back(eval_primitive(c, stacked_positions).value);
  return softmin_compose(values, spec.sharpness);
}

Vec finite_diff_gradient(const std::function<double(const Vec&)>& h, const Vec& point, double step) {
  if (!(step > 0.0)) throw std::invalid_argument("finite_diff_gradient: step must be positive");
  Vec grad(point.size());
  Vec probe = point;
  for (Eigen::Index k = 0; k < point.size(); ++k) {
    probe(k) = point(k) + step;
    const double up = h(probe);
    probe(k) = point(k) - step;
    const double down = h(probe);
    probe(k) = point(k);
    grad(k) = (up - down) / (2.0 * step);
  }
  return grad;
}

}  // namespace ccbf
