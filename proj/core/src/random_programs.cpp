#include "recode/random_programs.hpp"

#include <cmath>

namespace recode::qcqp {

ConvexProgram random_valid_program(std::mt19937_64& rng, const RandomProgramOptions& opts) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_real_distribution<double> sym(-1.0, 1.0);
  const double M = opts.max_speed;

  ConvexProgram p;
  p.norm_bound.max_speed = M;

  // anchor strictly inside the norm disc; all hard constraints keep a margin
  // around it, so the program is always valid
  const double anchor_angle = 2.0 * M_PI * unit(rng);
  const double anchor_norm = 0.5 * M * unit(rng);
  const Vec2 anchor(anchor_norm * std::cos(anchor_angle), anchor_norm * std::sin(anchor_angle));

  if (opts.quadratic_objective_only || unit(rng) < 0.6) {
    Eigen::Matrix2d A;
    A << sym(rng), sym(rng), sym(rng), sym(rng);
    p.objective.quad_matrix = A.transpose() * A + 0.05 * Mat2::Identity();
    p.objective.lin_vector = Vec2(sym(rng), sym(rng));
  } else {
    p.objective.quad_matrix = Mat2::Zero();
    Vec2 q(sym(rng), sym(rng));
    if (q.norm() < 1e-3) q = Vec2(1.0, 0.0);
    p.objective.lin_vector = q;
    p.objective.regularization = 1e-6;
  }

  std::uniform_int_distribution<int> n_lin_dist(0, opts.max_linear);
  const int n_lin = n_lin_dist(rng);
  for (int i = 0; i < n_lin; ++i) {
    const double angle = 2.0 * M_PI * unit(rng);
    const Vec2 normal(std::cos(angle), std::sin(angle));
    LinearConstraint row;
    row.normal = normal;
    row.offset = normal.dot(anchor) + (0.05 + 0.8 * unit(rng)) * M;
    row.hard = true;
    p.linear.push_back(row);
  }

  std::uniform_int_distribution<int> n_ball_dist(0, opts.max_hard_balls);
  const int n_balls = n_ball_dist(rng);
  for (int i = 0; i < n_balls; ++i) {
    const double angle = 2.0 * M_PI * unit(rng);
    const double offset = 0.3 * M * unit(rng);
    BallConstraint ball;
    ball.center = anchor + offset * Vec2(std::cos(angle), std::sin(angle));
    ball.radius = offset + (0.1 + 0.8 * unit(rng)) * M;
    p.balls.push_back(ball);
  }

  if (opts.with_slack_ball) {
    const double angle = 2.0 * M_PI * unit(rng);
    BallConstraint ball;
    if (opts.slack_ball_reachable) {
      const double offset = 0.2 * M * unit(rng);
      ball.center = anchor + offset * Vec2(std::cos(angle), std::sin(angle));
      ball.radius = offset + (0.1 + 0.5 * unit(rng)) * M;
    } else {
      const double dist = 1.5 * M * unit(rng);
      ball.center = Vec2(dist * std::cos(angle), dist * std::sin(angle));
      ball.radius = 0.6 * M * unit(rng);
    }
    const double ladder[] = {1e2, 1e3, 1e4};
    ball.slack_penalty = ladder[static_cast<int>(3.0 * unit(rng)) % 3];
    p.balls.push_back(ball);
  }
  return p;
}

}  // namespace recode::qcqp
