#pragma once

#include <Eigen/Core>

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace recode::qcqp {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;

/// Quadratic objective 0.5 uᵀ(P + reg·I)u + qᵀu over the 2-D control u.
/// P must be symmetric positive semidefinite; a linear objective is P = 0
/// with a small regularization to keep the minimizer unique.
struct Objective {
  Mat2 quad_matrix = Mat2::Zero();
  Vec2 lin_vector = Vec2::Zero();
  double regularization = 0.0;

  double value(const Vec2& u) const {
    return 0.5 * u.dot(quad_matrix * u) +
           0.5 * regularization * u.squaredNorm() + lin_vector.dot(u);
  }
};

/// Half-plane normalᵀu ≤ offset. Soft rows (hard = false) may be violated
/// at linear cost slack_penalty per unit of violation.
struct LinearConstraint {
  Vec2 normal = Vec2::UnitX();
  double offset = 0.0;
  bool hard = true;
  double slack_penalty = 0.0;  // used only when hard == false; must be > 0
};

/// Disc ‖u − center‖₂ ≤ radius. When slack_penalty is set the radius may be
/// exceeded by a slack s ≥ 0 penalized by slack_penalty·s in the objective.
struct BallConstraint {
  Vec2 center = Vec2::Zero();
  double radius = 0.0;
  std::optional<double> slack_penalty;

  bool soft() const { return slack_penalty.has_value(); }
};

/// ‖u‖₂ ≤ max_speed.
struct NormBound {
  double max_speed = 1.0;
};

/// One agent's per-step convex program: objective + half-planes + discs +
/// a hard speed bound. Soft constraints carry exact-penalty slacks, so they
/// can never make the program infeasible.
struct ConvexProgram {
  Objective objective;
  std::vector<LinearConstraint> linear;
  std::vector<BallConstraint> balls;
  NormBound norm_bound;

  int slack_count() const;
};

enum class SolveStatus { optimal, infeasible_hard, numerical_failure };

std::string to_string(SolveStatus s);

/// Solution of a ConvexProgram. slack_values are aligned with the program's
/// slack-bearing constraints: soft balls in declaration order, then soft
/// linear rows in declaration order. objective_value includes the penalty
/// terms sum(lambda_k * s_k).
struct SolveResult {
  Vec2 control = Vec2::Zero();
  std::vector<double> slack_values;
  double objective_value = 0.0;
  SolveStatus status = SolveStatus::numerical_failure;
};

struct SolverOptions {
  double gap_tol = 1e-9;      // duality-gap target on the scaled objective
  double feas_tol = 1e-6;     // hard-constraint residual tolerance
  int max_outer = 50;         // barrier stages
  int max_inner = 80;         // Newton steps per stage
  double mu = 20.0;           // barrier parameter growth
};

/// Minimizes objective(u) + sum(lambda_k * s_k) over the hard-feasible set,
/// with s_k = max(0, violation of soft constraint k). Interior-point method
/// on the cone formulation; a phase-1 solve detects empty hard-constraint
/// intersections.
SolveResult solve(const ConvexProgram& program, const SolverOptions& opts = {});

/// Elementwise solve; per-program failures do not abort the batch.
std::vector<SolveResult> batch_solve(std::span<const ConvexProgram> programs,
                                     const SolverOptions& opts = {});

/// Brute-force reference: dense grid over [−M, M]², hard-infeasible points
/// discarded (with a slop of ~one grid cell so degenerate sets keep their
/// nearest grid point), exact-penalty objective evaluated at the rest.
SolveResult oracle_solve(const ConvexProgram& program, double grid_resolution);

/// objective(u) + sum over soft constraints of slack_penalty·max(0, violation).
double exact_penalty_value(const ConvexProgram& program, const Vec2& u);

/// Largest hard-constraint residual at u; ≤ 0 means hard-feasible.
double max_hard_residual(const ConvexProgram& program, const Vec2& u);

/// Closed-form optimal slacks at a fixed control.
std::vector<double> slacks_at(const ConvexProgram& program, const Vec2& u);

}  // namespace recode::qcqp
