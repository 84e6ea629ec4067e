#include "recode/controllers.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace recode::controllers {

std::vector<LinearConstraint> build_cbf_constraints(const Vec2& ego_position,
                                                    const std::vector<Vec2>& neighbor_positions,
                                                    const CBFParams& params) {
  std::vector<LinearConstraint> rows;
  rows.reserve(neighbor_positions.size());
  for (const Vec2& pj : neighbor_positions) {
    const Vec2 diff = ego_position - pj;
    const double dist = diff.norm();
    if (dist <= 1e-9) {
      throw std::invalid_argument("build_cbf_constraints: coincident agent positions");
    }
    LinearConstraint row;
    row.normal = -2.0 * diff;
    row.offset = params.gain * (diff.squaredNorm() - params.min_distance * params.min_distance);
    row.hard = true;
    rows.push_back(row);
  }
  return rows;
}

std::vector<LinearConstraint> build_boundary_constraints(const Vec2& ego_position, double dt,
                                                         const WorldBounds& bounds) {
  const double x = ego_position.x();
  const double y = ego_position.y();
  if (std::abs(x) > bounds.x_max || std::abs(y) > bounds.y_max) {
    throw std::invalid_argument("build_boundary_constraints: ego outside bounds");
  }
  // p + u·dt stays in the box
  std::vector<LinearConstraint> rows;
  rows.push_back({Vec2(1.0, 0.0), (bounds.x_max - x) / dt, true, 0.0});
  rows.push_back({Vec2(-1.0, 0.0), (bounds.x_max + x) / dt, true, 0.0});
  rows.push_back({Vec2(0.0, 1.0), (bounds.y_max - y) / dt, true, 0.0});
  rows.push_back({Vec2(0.0, -1.0), (bounds.y_max + y) / dt, true, 0.0});
  return rows;
}

std::vector<BallConstraint> build_connectivity_constraints(
    const Vec2& ego_position, const std::vector<Vec2>& neighbor_positions, double dt,
    double comm_range) {
  std::vector<BallConstraint> balls;
  balls.reserve(neighbor_positions.size());
  for (const Vec2& pj : neighbor_positions) {
    const Vec2 diff = pj - ego_position;
    if (diff.norm() > comm_range + 1e-9) {
      throw std::invalid_argument("build_connectivity_constraints: link already over range");
    }
    BallConstraint ball;
    ball.center = diff / dt;
    ball.radius = comm_range / dt;
    balls.push_back(ball);
  }
  return balls;
}

namespace {

std::vector<Vec2> neighbor_positions_of(const ObservationGraph& obs) {
  std::vector<Vec2> positions;
  positions.reserve(obs.neighbor_edges.size());
  for (const auto& edge : obs.neighbor_edges) positions.push_back(obs.position + edge.rel_position);
  return positions;
}

bool has_connectivity_constraint(Scenario s) {
  return s == Scenario::connectivity || s == Scenario::sensor_coverage;
}

}  // namespace

ConvexProgram build_default_program(const ObservationGraph& obs, const ScenarioSpec& spec) {
  ConvexProgram program;
  program.norm_bound = spec.max_speed;

  switch (spec.scenario) {
    case Scenario::narrow_corridor:
    case Scenario::connectivity: {
      // maximize d·u_y, d = sign of the displacement toward the goal region
      const double d = obs.goal_displacement.y() >= 0.0 ? 1.0 : -1.0;
      program.objective.lin_vector = Vec2(0.0, -d);
      program.objective.regularization = spec.regularization;
      break;
    }
    case Scenario::waypoint:
    case Scenario::sensor_coverage: {
      // ‖(p + u·dt) − g‖² in u
      const double dt = spec.dt;
      program.objective.quad_matrix = 2.0 * dt * dt * qcqp::Mat2::Identity();
      program.objective.lin_vector = -2.0 * dt * obs.goal_displacement;
      break;
    }
  }

  const std::vector<Vec2> neighbors = neighbor_positions_of(obs);
  auto cbf_rows = build_cbf_constraints(obs.position, neighbors, spec.cbf);
  program.linear.insert(program.linear.end(), cbf_rows.begin(), cbf_rows.end());

  auto boundary_rows = build_boundary_constraints(obs.position, spec.dt, spec.bounds);
  program.linear.insert(program.linear.end(), boundary_rows.begin(), boundary_rows.end());

  for (const auto& face : obs.obstacle_faces) {
    // keep the next-step position on the free side of the face
    LinearConstraint row;
    row.normal = -face.normal;
    row.offset = face.clearance / spec.dt;
    row.hard = true;
    program.linear.push_back(row);
  }

  if (has_connectivity_constraint(spec.scenario)) {
    // Both endpoints of a link move in the same step, so the plain
    // comm_range disc can be overshot by up to 2·M·dt. Tighten by that
    // reach, with a hold-current-distance floor that keeps u = 0 feasible
    // even after an excursion.
    const double reach = 2.0 * spec.max_speed.max_speed * spec.dt;
    for (const auto& edge : obs.neighbor_edges) {
      const double dist = edge.rel_position.norm();
      BallConstraint ball;
      ball.center = edge.rel_position / spec.dt;
      ball.radius = std::max(dist + 1e-3, spec.comm_range - reach) / spec.dt;
      program.balls.push_back(ball);
    }
  }
  return program;
}

ConvexProgram augment_recode(const ConvexProgram& program, const ThetaParams& theta,
                             double lambda0) {
  for (const auto& ball : program.balls) {
    if (ball.soft()) throw std::invalid_argument("augment_recode: program already augmented");
  }
  if (!(lambda0 > 0.0)) throw std::invalid_argument("augment_recode: lambda0 must be positive");
  ConvexProgram augmented = program;
  BallConstraint learned;
  learned.center = theta.reference_action;
  learned.radius = std::max(0.0, theta.uncertainty_radius);
  learned.slack_penalty = lambda0;
  augmented.balls.push_back(learned);
  return augmented;
}

ConvexProgram augment_linear(const ConvexProgram& program, const LinearTheta& theta) {
  for (const auto& row : program.linear) {
    if (!row.hard) throw std::invalid_argument("augment_linear: program already augmented");
  }
  const double norm = theta.normal.norm();
  if (norm == 0.0) throw std::invalid_argument("augment_linear: zero normal");
  ConvexProgram augmented = program;
  LinearConstraint learned;
  learned.normal = theta.normal / norm;
  learned.offset = theta.offset;
  learned.hard = false;
  learned.slack_penalty = theta.slack_penalty;
  augmented.linear.push_back(learned);
  return augmented;
}

SolveResult shield(const Vec2& policy_action, const ObservationGraph& obs,
                   const ScenarioSpec& spec) {
  ConvexProgram program = build_default_program(obs, spec);
  program.objective.quad_matrix = 2.0 * qcqp::Mat2::Identity();
  program.objective.lin_vector = -2.0 * policy_action;
  program.objective.regularization = 0.0;
  return qcqp::solve(program);
}

ConvexProgram online_cbf_program(const ObservationGraph& obs, double learned_gain,
                                 const ScenarioSpec& spec) {
  ScenarioSpec adjusted = spec;
  adjusted.cbf.gain = std::clamp(learned_gain, kOnlineCbfGainMin, kOnlineCbfGainMax);
  return build_default_program(obs, adjusted);
}

}  // namespace recode::controllers
