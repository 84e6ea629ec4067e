#pragma once

#include "recode/env.hpp"
#include "recode/qcqp.hpp"

#include <vector>

namespace recode::baselines {

/// Reciprocal avoidance half-plane: admissible velocities satisfy
/// (v − point)ᵀ normal ≥ 0.
struct OrcaHalfPlane {
  Vec2 point = Vec2::Zero();
  Vec2 normal = Vec2::UnitX();  // unit length
};

struct RvoConfig {
  double time_horizon = 2.0;  // s
  double dt = 0.1;            // fallback horizon once discs already touch
  double max_speed = 0.5;
  double tie_break = 1e-4;    // right-hand preferred-velocity perturbation (m/s)
};

struct RvoResult {
  Vec2 velocity = Vec2::Zero();
  std::vector<OrcaHalfPlane> planes;
  int dropped_planes = 0;  // farthest-neighbor planes removed to restore feasibility
};

/// One reciprocal half-plane per neighbor (each agent takes half of the
/// avoidance), then the closest admissible velocity to preferred_velocity
/// inside the intersection ∩ the speed disc, solved by the qcqp module.
RvoResult rvo_velocity(const env::AgentState& ego, const Vec2& ego_velocity,
                       const std::vector<std::pair<env::AgentState, Vec2>>& neighbors,
                       const Vec2& preferred_velocity, const RvoConfig& config);

/// Scenario-default preferred velocity: the unconstrained objective direction
/// scaled to the speed bound.
Vec2 preferred_velocity(const env::AgentState& agent, const env::EnvConfig& config);

struct DeadlockDetector {
  int window = 100;
  double displacement_threshold = 0.02;  // m over the window, mean per agent
};

struct RolloutResult {
  std::vector<std::vector<Vec2>> positions;  // [step][agent]
  double mean_reward_per_step = 0.0;         // per agent-step
  long long collision_events = 0;
  long long non_optimal_solves = 0;
  bool deadlock = false;
  int deadlock_step = -1;
  bool all_reached = false;
  int steps = 0;
};

/// Closed loop of build_default_program → solve → step; no learning.
RolloutResult handcrafted_rollout(const env::EnvConfig& config, std::uint64_t seed,
                                  const DeadlockDetector& detector = {});
RolloutResult handcrafted_rollout(const env::EnvConfig& config, env::WorldState state,
                                  const DeadlockDetector& detector = {});

/// Closed loop of rvo_velocity per agent (no learning); only meaningful on
/// scenarios without connectivity constraints.
RolloutResult rvo_rollout(const env::EnvConfig& config, std::uint64_t seed,
                          const DeadlockDetector& detector = {});

/// All agents at their goals (region membership or waypoint bonus).
bool all_goals_reached(const env::WorldState& state, const env::EnvConfig& config);

}  // namespace recode::baselines
