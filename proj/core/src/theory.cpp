#include "recode/theory.hpp"

#include <cmath>
#include <stdexcept>

namespace recode::theory {

namespace {

// Strict feasibility of a with a `margin`-ball inside the hard set.
bool has_margin(const qcqp::ConvexProgram& program, const Vec2& a, double margin) {
  if (a.norm() > program.norm_bound.max_speed - margin) return false;
  for (const auto& row : program.linear) {
    if (!row.hard) continue;
    if (row.normal.dot(a) > row.offset - margin * row.normal.norm()) return false;
  }
  for (const auto& ball : program.balls) {
    if (ball.soft()) continue;
    if ((a - ball.center).norm() > ball.radius - margin) return false;
  }
  return true;
}

}  // namespace

TrackingResult construct_tracking_params(const std::vector<DesiredStep>& desired,
                                         const env::EnvConfig& config,
                                         const std::vector<Vec2>& neighbor_positions,
                                         double epsilon, double lambda0) {
  if (desired.empty()) throw std::invalid_argument("construct_tracking_params: empty trajectory");
  if (!(epsilon > 0.0)) throw std::invalid_argument("construct_tracking_params: epsilon > 0");

  const auto spec = config.scenario_spec();
  const double margin = 0.1 * config.max_speed.max_speed;

  TrackingResult result;
  Vec2 actual = desired.front().position;
  result.actual_positions.push_back(actual);

  for (size_t t = 0; t < desired.size(); ++t) {
    // target state of this step under the desired trajectory
    const Vec2 target = desired[t].position + desired[t].action * config.dt;
    const Vec2 anchored_action = (target - actual) / config.dt;

    ObservationGraph obs;
    obs.position = actual;
    obs.goal_displacement = Vec2(0.0, 1.0);
    obs.bounds_distances =
        Eigen::Vector4d(config.bounds.x_max - actual.x(), config.bounds.x_max + actual.x(),
                        config.bounds.y_max - actual.y(), config.bounds.y_max + actual.y());
    int id = 1;
    for (const Vec2& p : neighbor_positions) {
      EdgeFeature e;
      e.neighbor_id = id++;
      e.rel_position = p - actual;
      obs.neighbor_edges.push_back(e);
    }
    const auto base = controllers::build_default_program(obs, spec);
    if (!has_margin(base, anchored_action, margin)) {
      throw std::runtime_error("construct_tracking_params: margin violated at step " +
                               std::to_string(t));
    }

    controllers::ThetaParams theta;
    theta.reference_action = anchored_action;
    theta.uncertainty_radius = epsilon;
    result.thetas.push_back(theta);

    const auto solved = qcqp::solve(controllers::augment_recode(base, theta, lambda0));
    if (solved.status != qcqp::SolveStatus::optimal) {
      throw std::runtime_error("construct_tracking_params: solver failed at step " +
                               std::to_string(t));
    }
    const double err = (solved.control - anchored_action).norm();
    result.control_errors.push_back(err);
    result.max_control_error = std::max(result.max_control_error, err);

    actual += solved.control * config.dt;
    result.actual_positions.push_back(actual);
  }

  const Vec2 final_desired =
      desired.back().position + desired.back().action * config.dt;
  result.final_state_deviation = (actual - final_desired).norm();
  return result;
}

std::vector<DesiredStep> straight_corridor_trajectory(const env::EnvConfig& config,
                                                      const Vec2& start, const Vec2& velocity,
                                                      int steps) {
  std::vector<DesiredStep> trajectory;
  trajectory.reserve(steps);
  Vec2 p = start;
  for (int t = 0; t < steps; ++t) {
    trajectory.push_back({p, velocity});
    p += velocity * config.dt;
  }
  return trajectory;
}

void Prop2CheckSpec::validate() const {
  if (!(steepness > flatness_bound)) {
    throw std::invalid_argument("Prop2CheckSpec: requires delta_2 > delta_1");
  }
  if (!(delta() > 0.0)) throw std::invalid_argument("Prop2CheckSpec: requires Delta > 0");
  if (std::abs(direction.norm() - 1.0) > 1e-9) {
    throw std::invalid_argument("Prop2CheckSpec: direction must be unit length");
  }
  if (!q_true) throw std::invalid_argument("Prop2CheckSpec: Q* must be set");
}

Prop2Result prop2_check(const Prop2CheckSpec& spec, const Vec2& a_point, double lambda0) {
  spec.validate();
  if (a_point.norm() + spec.radius >= spec.max_speed - 1e-9) {
    throw std::invalid_argument("prop2_check: the r-ball around a is not strictly feasible");
  }

  qcqp::ConvexProgram program;
  program.objective = spec.objective;
  program.norm_bound.max_speed = spec.max_speed;
  qcqp::BallConstraint learned;
  learned.center = a_point;
  learned.radius = spec.radius;
  learned.slack_penalty = lambda0;
  program.balls.push_back(learned);

  // the large slack penalty dominates the scaled objective, so the bound's
  // 1e-6 equality tolerance needs a much tighter duality gap than the default
  qcqp::SolverOptions opts;
  opts.gap_tol = 1e-15;
  const auto solved = qcqp::solve(program, opts);
  if (solved.status != qcqp::SolveStatus::optimal) {
    throw std::runtime_error("prop2_check: solver failed");
  }

  Prop2Result result;
  result.u_opt = solved.control;
  result.lhs = spec.q_true(solved.control);
  result.rhs = spec.q_true(a_point) + spec.radius * spec.delta() - 2.0 * spec.approx_error;
  result.holds = result.lhs >= result.rhs - 1e-9;
  return result;
}

Prop2CheckSpec analytic_prop2_spec() {
  Prop2CheckSpec spec;
  spec.radius = 0.2;
  spec.flatness_bound = 0.0;
  spec.steepness = 1.0;
  spec.c1 = 1.0;
  spec.c2 = 1.0;
  spec.approx_error = 0.0;
  spec.direction = Vec2(0.0, 1.0);
  // J = −u_y (steepness 1 along d), Q^l ≡ 0, hence Q* = −J = u_y
  spec.objective.lin_vector = Vec2(0.0, -1.0);
  spec.objective.regularization = 1e-9;
  spec.q_true = [](const Vec2& u) { return u.y(); };
  spec.max_speed = 1.0;
  return spec;
}

}  // namespace recode::theory
