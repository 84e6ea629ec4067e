#pragma once

#include "recode/controllers.hpp"
#include "recode/observation.hpp"

#include <cstdint>
#include <random>
#include <vector>

namespace recode::env {

using controllers::CBFParams;
using controllers::ScenarioSpec;
using controllers::WorldBounds;

struct AgentState {
  Vec2 position = Vec2::Zero();
  Vec2 goal = Vec2::Zero();  // waypoint/sensor target; region center for corridor tasks
  int team = 0;
  double radius = 0.12;
};

struct Obstacle {
  Vec2 min_corner = Vec2::Zero();
  Vec2 max_corner = Vec2::Zero();
};

/// Scenario knobs that the paper leaves as configuration.
struct ScenarioExtras {
  double c_shape = 0.1;            // progress shaping coefficient
  double region_reward = 1.0;      // per step inside the correct region
  double region_length = 1.0;      // corridor goal-region length
  double goal_bonus = 5.0;         // waypoint arrival bonus (one-shot)
  double goal_tolerance = 0.1;     // waypoint arrival distance
  double lambda_prox = 1.0;        // sensor-coverage proximity decay
  double collision_penalty = -10.0;
  double out_of_bounds_penalty = -10.0;
  double link_break_penalty = -1.0;
  double placement_margin = 0.05;  // extra pairwise clearance at reset
  int obstacle_count_min = 1;
  int obstacle_count_max = 2;
};

struct EnvConfig {
  Scenario scenario = Scenario::narrow_corridor;
  int n_agents = 6;
  double dt = 0.1;
  int horizon = 256;
  WorldBounds bounds;
  double comm_range = 1.5;
  double agent_radius = 0.12;
  qcqp::NormBound max_speed{0.5};
  CBFParams cbf;
  std::uint64_t seed = 0;
  ScenarioExtras extras;

  void validate() const;
  ScenarioSpec scenario_spec() const;
  bool has_connectivity() const {
    return scenario == Scenario::connectivity || scenario == Scenario::sensor_coverage;
  }
  bool has_obstacles() const { return has_connectivity(); }
};

/// Per-scenario defaults (corridor dimensions, agent counts, speeds).
EnvConfig default_config(Scenario scenario);

struct WorldState {
  int time_index = 0;
  std::vector<AgentState> agents;
  std::vector<Obstacle> obstacles;
  std::vector<bool> goal_bonus_taken;  // waypoint one-shot flags
  std::mt19937_64 rng;
};

enum class EventType { collision, out_of_bounds, link_break_attempt, goal_reached };

/// collision and link_break_attempt are recorded for both ordered pairs;
/// penalties attach to agent_i. Unary events use agent_j = -1.
struct Event {
  EventType type;
  int agent_i = -1;
  int agent_j = -1;
};

struct RewardTerms {
  double shaping = 0.0;
  double region = 0.0;
  double prox = 0.0;
  double goal_bonus = 0.0;
  double collision = 0.0;
  double out_of_bounds = 0.0;
  double link_break = 0.0;

  double total() const {
    return shaping + region + prox + goal_bonus + collision + out_of_bounds + link_break;
  }
};

struct StepResult {
  std::vector<double> rewards;
  std::vector<RewardTerms> reward_terms;
  bool done = false;
  std::vector<Event> events;
};

/// Random non-overlapping placement respecting the scenario topology;
/// deterministic given config.seed. Throws after 10000 rejected samples.
WorldState reset(const EnvConfig& config);

/// Local graphs for every agent; the edge set is symmetric and contains
/// exactly the pairs strictly within comm_range.
std::vector<ObservationGraph> observe_all(const WorldState& state, const EnvConfig& config);

/// Integrates p' = p + u·dt, resolves contacts/links, records events and
/// computes per-scenario rewards. Controls must be finite with ‖u‖ ≤ M + 1e-6.
std::pair<WorldState, StepResult> step(const WorldState& state, const std::vector<Vec2>& controls,
                                       const EnvConfig& config);

/// Pairs whose next-step distance would exceed comm_range. Under solver-driven
/// controllers the hard connectivity discs prevent this; it fires only for raw
/// policy actions.
std::vector<Event> connectivity_violation_check(const WorldState& state,
                                                const std::vector<Vec2>& proposed_controls,
                                                const EnvConfig& config);

/// Reward decompositions; `events` are the step's recorded events.
std::vector<RewardTerms> reward_narrow_corridor(const WorldState& prev, const WorldState& next,
                                                const EnvConfig& config,
                                                const std::vector<Event>& events);
std::vector<RewardTerms> reward_waypoint(const WorldState& prev, const WorldState& next,
                                         const EnvConfig& config,
                                         const std::vector<Event>& events);
std::vector<RewardTerms> reward_sensor_coverage(const WorldState& state, const EnvConfig& config,
                                                const std::vector<Event>& events);

/// Corridor goal region of an agent: y-interval [lo, hi].
std::pair<double, double> goal_region(const AgentState& agent, const EnvConfig& config);
bool in_goal_region(const AgentState& agent, const EnvConfig& config);
/// Distance to the goal: region gap along y for corridor tasks, Euclidean
/// distance to the goal point otherwise.
double goal_distance(const AgentState& agent, const EnvConfig& config);

}  // namespace recode::env
