#pragma once

#include "recode/controllers.hpp"
#include "recode/env.hpp"

#include <functional>
#include <vector>

namespace recode::theory {

/// One step of a desired trajectory: state and the action executed there.
struct DesiredStep {
  Vec2 position = Vec2::Zero();
  Vec2 action = Vec2::Zero();
};

struct TrackingResult {
  std::vector<controllers::ThetaParams> thetas;
  std::vector<double> control_errors;   // ‖u_opt(t) − a(t)‖ per step
  std::vector<Vec2> actual_positions;   // rolled-out states (length T+1)
  double max_control_error = 0.0;
  double final_state_deviation = 0.0;
};

/// Constructive tracking: re-anchors a(t) against the actual rolled-out state
/// so that executing the solved control reaches x*(t+1) up to epsilon·dt, and
/// sets b(t) = epsilon. Throws (with the step index) when a desired action
/// loses its strict-feasibility margin of 0.1·max_speed.
TrackingResult construct_tracking_params(const std::vector<DesiredStep>& desired,
                                         const env::EnvConfig& config,
                                         const std::vector<Vec2>& neighbor_positions,
                                         double epsilon, double lambda0);

/// A strictly feasible straight-line run up the corridor.
std::vector<DesiredStep> straight_corridor_trajectory(const env::EnvConfig& config,
                                                      const Vec2& start, const Vec2& velocity,
                                                      int steps);

/// Synthetic construction for the uncertainty-mitigation bound.
struct Prop2CheckSpec {
  double radius = 0.2;          // r
  double flatness_bound = 0.0;  // delta_1, bound on ‖∇Q^l‖ in the ball
  double steepness = 1.0;       // delta_2, lower bound on d·∇(−J) along d
  double c1 = 1.0;
  double c2 = 1.0;
  double approx_error = 0.0;    // epsilon
  Vec2 direction = Vec2(0.0, 1.0);  // unit vector d
  std::function<double(const Vec2&)> q_true;  // Q*
  qcqp::Objective objective;    // J
  double max_speed = 1.0;       // hard feasible set: the speed disc

  void validate() const;  // delta_2 > delta_1, Delta > 0, ‖d‖ = 1
  double delta() const { return c2 * steepness - c1 * flatness_bound; }
};

struct Prop2Result {
  double lhs = 0.0;  // Q*(u_opt)
  double rhs = 0.0;  // Q*(a) + r·Delta − 2·epsilon
  bool holds = false;
  Vec2 u_opt = Vec2::Zero();
};

/// Solves the augmented program with b = r and evaluates both sides of the
/// bound on the synthetic functions. Throws when the r-ball around a_point is
/// not strictly inside the hard-feasible set.
Prop2Result prop2_check(const Prop2CheckSpec& spec, const Vec2& a_point, double lambda0);

/// The analytic equality case: Q^l constant, J = −delta_2·(d·u), c1 = c2 = 1,
/// Q* = c1·Q^l − c2·J exactly.
Prop2CheckSpec analytic_prop2_spec();

}  // namespace recode::theory
