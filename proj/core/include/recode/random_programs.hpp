#pragma once

#include "recode/qcqp.hpp"

#include <random>

namespace recode::qcqp {

struct RandomProgramOptions {
  double max_speed = 0.5;
  int max_linear = 5;
  int max_hard_balls = 2;
  bool with_slack_ball = true;
  // Reachable slack balls overlap the hard-feasible interior, so the optimal
  // slack is ~0 and grid-oracle comparisons stay resolution-limited rather
  // than penalty-scaled. Set false to place the ball anywhere.
  bool slack_ball_reachable = true;
  bool quadratic_objective_only = false;
};

/// Draws a valid program with a guaranteed strictly feasible anchor point:
/// mixed linear/quadratic objective, 0..max_linear half-planes, up to
/// max_hard_balls hard discs, optionally one slack-penalized disc, and the
/// norm bound. Constraints are placed around the anchor with real margins so
/// the hard intersection always has interior.
ConvexProgram random_valid_program(std::mt19937_64& rng,
                                   const RandomProgramOptions& opts = {});

}  // namespace recode::qcqp
