#pragma once

#include "recode/observation.hpp"
#include "recode/qcqp.hpp"

namespace recode::controllers {

using qcqp::BallConstraint;
using qcqp::ConvexProgram;
using qcqp::LinearConstraint;
using qcqp::SolveResult;

/// Pairwise collision barrier h_j = gain·(‖p_ego − p_j‖² − min_distance²).
struct CBFParams {
  double gain = 1.0;          // 1/s
  double min_distance = 0.24; // m
};

/// Axis-aligned arena [−x_max, x_max] × [−y_max, y_max].
struct WorldBounds {
  double x_max = 0.45;
  double y_max = 3.2;
};

/// Learned ball-constraint parameters: reference action and uncertainty
/// radius. Policy squashing keeps ‖reference_action‖ ≤ a_max and
/// uncertainty_radius ∈ [0, b_max].
struct ThetaParams {
  Vec2 reference_action = Vec2::Zero();
  double uncertainty_radius = 0.0;
};

/// Learned half-plane variant: normalᵀu ≤ offset with exact-penalty slack.
struct LinearTheta {
  Vec2 normal = Vec2::UnitX();  // unit length
  double offset = 0.0;
  double slack_penalty = 1e3;
};

/// Everything the program builders need to know about a scenario.
struct ScenarioSpec {
  Scenario scenario = Scenario::narrow_corridor;
  double dt = 0.1;
  WorldBounds bounds;
  qcqp::NormBound max_speed{0.5};
  CBFParams cbf;
  double comm_range = 1.5;
  double agent_radius = 0.12;
  double regularization = 1e-6;  // applied to linear objectives only
};

inline double a_max(const ScenarioSpec& spec) { return spec.max_speed.max_speed; }
inline double b_max(const ScenarioSpec& spec) { return 2.0 * spec.max_speed.max_speed; }

constexpr double kOnlineCbfGainMin = 0.1;
constexpr double kOnlineCbfGainMax = 10.0;

/// One hard row per neighbor: −2(p_ego − p_j)ᵀu ≤ gain·(‖p_ego − p_j‖² − d_min²).
/// Throws when a neighbor is closer than 1e-9 (degenerate geometry).
std::vector<LinearConstraint> build_cbf_constraints(const Vec2& ego_position,
                                                    const std::vector<Vec2>& neighbor_positions,
                                                    const CBFParams& params);

/// Four hard rows keeping p + u·dt inside the bounds. Throws when the ego is
/// already outside (environment invariant broken).
std::vector<LinearConstraint> build_boundary_constraints(const Vec2& ego_position, double dt,
                                                         const WorldBounds& bounds);

/// One hard disc per neighbor keeping ‖(p + u·dt) − p_j‖ ≤ comm_range,
/// rewritten on u. Throws when a link is already over range.
std::vector<BallConstraint> build_connectivity_constraints(
    const Vec2& ego_position, const std::vector<Vec2>& neighbor_positions, double dt,
    double comm_range);

/// The per-scenario handcrafted program: objective + CBF + boundary
/// (+ connectivity discs and obstacle rows where applicable) + norm bound.
ConvexProgram build_default_program(const ObservationGraph& obs, const ScenarioSpec& spec);

/// Adds the learned ball ‖u − a‖ ≤ b + s with penalty lambda0·s. The hard
/// constraint set is untouched. Throws if a slack ball is already present.
ConvexProgram augment_recode(const ConvexProgram& program, const ThetaParams& theta,
                             double lambda0);

/// Adds the learned half-plane normalᵀu ≤ offset + s. Throws if a soft linear
/// row is already present.
ConvexProgram augment_linear(const ConvexProgram& program, const LinearTheta& theta);

/// Projects a raw policy action onto the scenario's hard-feasible set:
/// min ‖u − policy_action‖² subject to hard constraints only.
SolveResult shield(const Vec2& policy_action, const ObservationGraph& obs,
                   const ScenarioSpec& spec);

/// The handcrafted program with the barrier gain replaced by a learned one,
/// clamped into [kOnlineCbfGainMin, kOnlineCbfGainMax].
ConvexProgram online_cbf_program(const ObservationGraph& obs, double learned_gain,
                                 const ScenarioSpec& spec);

}  // namespace recode::controllers
