#include "recode/baselines.hpp"

#include "recode/controllers.hpp"

#include <algorithm>
#include <cmath>

namespace recode::baselines {

namespace {

double det2(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

// Standard ORCA line for one neighbor; direction convention: admissible
// velocities lie to the left of the line.
std::pair<Vec2, Vec2> orca_line(const env::AgentState& ego, const Vec2& ego_velocity,
                                const env::AgentState& other, const Vec2& other_velocity,
                                const RvoConfig& cfg) {
  const Vec2 rel_pos = other.position - ego.position;
  const Vec2 rel_vel = ego_velocity - other_velocity;
  const double dist_sq = rel_pos.squaredNorm();
  const double combined = ego.radius + other.radius;
  const double combined_sq = combined * combined;

  Vec2 direction;
  Vec2 u;
  if (dist_sq > combined_sq) {
    const Vec2 w = rel_vel - rel_pos / cfg.time_horizon;
    const double w_len_sq = w.squaredNorm();
    const double dot1 = w.dot(rel_pos);
    if (dot1 < 0.0 && dot1 * dot1 > combined_sq * w_len_sq) {
      // closest exit through the cutoff disc
      const double w_len = std::sqrt(w_len_sq);
      const Vec2 unit_w = w / w_len;
      direction = Vec2(unit_w.y(), -unit_w.x());
      u = (combined / cfg.time_horizon - w_len) * unit_w;
    } else {
      // closest exit along a cone leg
      const double leg = std::sqrt(dist_sq - combined_sq);
      if (det2(rel_pos, w) > 0.0) {
        direction = Vec2(rel_pos.x() * leg - rel_pos.y() * combined,
                         rel_pos.x() * combined + rel_pos.y() * leg) /
                    dist_sq;
      } else {
        direction = -Vec2(rel_pos.x() * leg + rel_pos.y() * combined,
                          -rel_pos.x() * combined + rel_pos.y() * leg) /
                    dist_sq;
      }
      u = (rel_vel.dot(direction)) * direction - rel_vel;
    }
  } else {
    // already touching: push apart over one step
    const Vec2 w = rel_vel - rel_pos / cfg.dt;
    const double w_len = std::max(w.norm(), 1e-12);
    const Vec2 unit_w = w / w_len;
    direction = Vec2(unit_w.y(), -unit_w.x());
    u = (combined / cfg.dt - w_len) * unit_w;
  }
  const Vec2 point = ego_velocity + 0.5 * u;  // reciprocity: split the correction
  return {point, direction};
}

qcqp::SolveResult solve_planes(const std::vector<OrcaHalfPlane>& planes, const Vec2& preferred,
                               double max_speed) {
  qcqp::ConvexProgram program;
  program.objective.quad_matrix = 2.0 * qcqp::Mat2::Identity();
  program.objective.lin_vector = -2.0 * preferred;
  program.norm_bound.max_speed = max_speed;
  for (const auto& plane : planes) {
    // (v − point)ᵀn ≥ 0  ⇔  (−n)ᵀv ≤ −nᵀpoint
    program.linear.push_back({-plane.normal, -plane.normal.dot(plane.point), true, 0.0});
  }
  return qcqp::solve(program);
}

}  // namespace

RvoResult rvo_velocity(const env::AgentState& ego, const Vec2& ego_velocity,
                       const std::vector<std::pair<env::AgentState, Vec2>>& neighbors,
                       const Vec2& preferred_velocity, const RvoConfig& cfg) {
  RvoResult result;
  Vec2 preferred = preferred_velocity;
  if (preferred.norm() > 1e-12) {
    const Vec2 right(preferred.y(), -preferred.x());
    preferred += cfg.tie_break * right / right.norm();
  }
  if (preferred.norm() > cfg.max_speed) preferred *= cfg.max_speed / preferred.norm();

  std::vector<double> neighbor_dist;
  for (const auto& [other, other_velocity] : neighbors) {
    const auto [point, direction] = orca_line(ego, ego_velocity, other, other_velocity, cfg);
    OrcaHalfPlane plane;
    plane.point = point;
    plane.normal = Vec2(-direction.y(), direction.x());  // left of the line is admissible
    result.planes.push_back(plane);
    neighbor_dist.push_back((other.position - ego.position).norm());
  }

  std::vector<OrcaHalfPlane> active = result.planes;
  std::vector<double> dist = neighbor_dist;
  while (true) {
    const auto res = solve_planes(active, preferred, cfg.max_speed);
    if (res.status == qcqp::SolveStatus::optimal) {
      result.velocity = res.control;
      return result;
    }
    if (active.empty()) {
      result.velocity = Vec2::Zero();
      return result;
    }
    // infeasible: concede the farthest neighbor's plane
    const auto far = std::max_element(dist.begin(), dist.end());
    const auto k = static_cast<size_t>(std::distance(dist.begin(), far));
    active.erase(active.begin() + static_cast<std::ptrdiff_t>(k));
    dist.erase(dist.begin() + static_cast<std::ptrdiff_t>(k));
    result.dropped_planes += 1;
  }
}

Vec2 preferred_velocity(const env::AgentState& agent, const env::EnvConfig& config) {
  const double M = config.max_speed.max_speed;
  if (config.scenario == Scenario::narrow_corridor || config.scenario == Scenario::connectivity) {
    const double d = agent.team == 0 ? 1.0 : -1.0;
    if (env::in_goal_region(agent, config)) return Vec2::Zero();
    return Vec2(0.0, d * M);
  }
  const Vec2 to_goal = agent.goal - agent.position;
  const double dist = to_goal.norm();
  if (dist < 1e-9) return Vec2::Zero();
  return to_goal / dist * std::min(M, dist / config.dt);
}

bool all_goals_reached(const env::WorldState& state, const env::EnvConfig& config) {
  if (config.scenario == Scenario::narrow_corridor || config.scenario == Scenario::connectivity) {
    for (const auto& agent : state.agents) {
      if (!env::in_goal_region(agent, config)) return false;
    }
    return true;
  }
  if (config.scenario == Scenario::waypoint) {
    for (size_t i = 0; i < state.agents.size(); ++i) {
      const bool close = (state.agents[i].position - state.agents[i].goal).norm() <=
                         config.extras.goal_tolerance;
      if (!close && !state.goal_bonus_taken[i]) return false;
    }
    return true;
  }
  return false;
}

namespace {

template <typename ControlFn>
RolloutResult run_rollout(const env::EnvConfig& config, env::WorldState state,
                          const DeadlockDetector& detector, ControlFn&& controls_for) {
  RolloutResult result;
  double reward_sum = 0.0;
  long long agent_steps = 0;
  std::vector<std::vector<Vec2>> window;
  std::vector<Vec2> prev_controls(config.n_agents, Vec2::Zero());

  bool done = false;
  while (!done) {
    result.positions.emplace_back();
    for (const auto& a : state.agents) result.positions.back().push_back(a.position);

    const std::vector<Vec2> controls = controls_for(state, prev_controls, result);
    auto [next, step_result] = env::step(state, controls, config);
    prev_controls = controls;
    state = std::move(next);
    for (double r : step_result.rewards) reward_sum += r;
    agent_steps += config.n_agents;
    for (const auto& e : step_result.events) {
      if (e.type == env::EventType::collision) result.collision_events += 1;
    }
    result.steps += 1;
    done = step_result.done;

    if (!result.deadlock && result.steps >= detector.window) {
      const auto& old = result.positions[result.positions.size() - detector.window];
      double displacement = 0.0;
      for (int a = 0; a < config.n_agents; ++a) {
        displacement += (state.agents[a].position - old[a]).norm();
      }
      displacement /= config.n_agents;
      if (displacement < detector.displacement_threshold && !all_goals_reached(state, config)) {
        result.deadlock = true;
        result.deadlock_step = result.steps;
      }
    }
  }
  result.all_reached = all_goals_reached(state, config);
  result.mean_reward_per_step = agent_steps > 0 ? reward_sum / agent_steps : 0.0;
  return result;
}

}  // namespace

RolloutResult handcrafted_rollout(const env::EnvConfig& config, env::WorldState state,
                                  const DeadlockDetector& detector) {
  const auto spec = config.scenario_spec();
  return run_rollout(config, std::move(state), detector,
                     [&](const env::WorldState& s, const std::vector<Vec2>&,
                         RolloutResult& r) {
                       const auto graphs = env::observe_all(s, config);
                       std::vector<Vec2> controls(config.n_agents, Vec2::Zero());
                       for (int a = 0; a < config.n_agents; ++a) {
                         const auto res =
                             qcqp::solve(controllers::build_default_program(graphs[a], spec));
                         if (res.status == qcqp::SolveStatus::optimal) {
                           controls[a] = res.control;
                         } else {
                           r.non_optimal_solves += 1;
                         }
                       }
                       return controls;
                     });
}

RolloutResult handcrafted_rollout(const env::EnvConfig& config, std::uint64_t seed,
                                  const DeadlockDetector& detector) {
  env::EnvConfig cfg = config;
  cfg.seed = seed;
  return handcrafted_rollout(cfg, env::reset(cfg), detector);
}

RolloutResult rvo_rollout(const env::EnvConfig& config, std::uint64_t seed,
                          const DeadlockDetector& detector) {
  env::EnvConfig cfg = config;
  cfg.seed = seed;
  RvoConfig rvo;
  rvo.dt = cfg.dt;
  rvo.max_speed = cfg.max_speed.max_speed;
  return run_rollout(cfg, env::reset(cfg), detector,
                     [&](const env::WorldState& s, const std::vector<Vec2>& prev,
                         RolloutResult&) {
                       std::vector<Vec2> controls(cfg.n_agents, Vec2::Zero());
                       for (int i = 0; i < cfg.n_agents; ++i) {
                         std::vector<std::pair<env::AgentState, Vec2>> neighbors;
                         for (int j = 0; j < cfg.n_agents; ++j) {
                           if (j == i) continue;
                           if ((s.agents[j].position - s.agents[i].position).norm() <
                               cfg.comm_range) {
                             neighbors.emplace_back(s.agents[j], prev[j]);
                           }
                         }
                         controls[i] = rvo_velocity(s.agents[i], prev[i], neighbors,
                                                    preferred_velocity(s.agents[i], cfg), rvo)
                                           .velocity;
                       }
                       return controls;
                     });
}

}  // namespace recode::baselines
