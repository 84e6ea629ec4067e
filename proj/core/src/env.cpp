#include "recode/env.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace recode::env {

namespace {

constexpr int kMaxPlacementRejections = 10000;
constexpr double kDistanceSlack = 1e-6;

double clamp(double v, double lo, double hi) { return std::min(hi, std::max(lo, v)); }

bool inside_obstacle(const Vec2& p, const Obstacle& o, double pad) {
  return p.x() > o.min_corner.x() - pad && p.x() < o.max_corner.x() + pad &&
         p.y() > o.min_corner.y() - pad && p.y() < o.max_corner.y() + pad;
}

// Signed distance from a point to the separating face of a rectangle, with
// the outward normal of that face. Positive outside.
std::pair<double, Vec2> separating_face(const Vec2& p, const Obstacle& o) {
  const double s_right = p.x() - o.max_corner.x();
  const double s_left = o.min_corner.x() - p.x();
  const double s_top = p.y() - o.max_corner.y();
  const double s_bottom = o.min_corner.y() - p.y();
  double best = s_right;
  Vec2 normal(1.0, 0.0);
  if (s_left > best) {
    best = s_left;
    normal = Vec2(-1.0, 0.0);
  }
  if (s_top > best) {
    best = s_top;
    normal = Vec2(0.0, 1.0);
  }
  if (s_bottom > best) {
    best = s_bottom;
    normal = Vec2(0.0, -1.0);
  }
  return {best, normal};
}

void add_event_pair(std::vector<Event>& events, EventType type, int i, int j) {
  events.push_back({type, i, j});
  events.push_back({type, j, i});
}

bool has_event(const std::vector<Event>& events, EventType type, int agent) {
  for (const auto& e : events) {
    if (e.type == type && e.agent_i == agent) return true;
  }
  return false;
}

int count_events(const std::vector<Event>& events, EventType type, int agent) {
  int n = 0;
  for (const auto& e : events) {
    if (e.type == type && e.agent_i == agent) ++n;
  }
  return n;
}

}  // namespace

void EnvConfig::validate() const {
  if (n_agents < 1) throw std::invalid_argument("EnvConfig: n_agents must be >= 1");
  if (!(dt > 0.0)) throw std::invalid_argument("EnvConfig: dt must be positive");
  if (horizon < 1) throw std::invalid_argument("EnvConfig: horizon must be >= 1");
  if (!(bounds.x_max > 0.0) || !(bounds.y_max > 0.0)) {
    throw std::invalid_argument("EnvConfig: bounds must be positive");
  }
  if (!(agent_radius > 0.0)) throw std::invalid_argument("EnvConfig: agent_radius must be positive");
  const double min_extent = 2.0 * std::min(bounds.x_max, bounds.y_max);
  if (!(dt * max_speed.max_speed < min_extent / 4.0)) {
    throw std::invalid_argument("EnvConfig: dt*max_speed must stay under min extent / 4");
  }
}

ScenarioSpec EnvConfig::scenario_spec() const {
  ScenarioSpec spec;
  spec.scenario = scenario;
  spec.dt = dt;
  spec.bounds = bounds;
  spec.max_speed = max_speed;
  spec.cbf = cbf;
  spec.comm_range = comm_range;
  spec.agent_radius = agent_radius;
  return spec;
}

EnvConfig default_config(Scenario scenario) {
  EnvConfig c;
  c.scenario = scenario;
  switch (scenario) {
    case Scenario::narrow_corridor:
      c.n_agents = 6;
      c.bounds = {0.45, 3.2};
      c.agent_radius = 0.12;
      c.horizon = 256;
      c.extras.c_shape = 0.1;
      break;
    case Scenario::connectivity:
      c.n_agents = 4;
      c.bounds = {0.45, 3.2};
      c.agent_radius = 0.10;
      c.horizon = 256;
      c.extras.c_shape = 0.1;
      break;
    case Scenario::waypoint:
      c.n_agents = 4;
      c.bounds = {1.0, 1.0};
      c.agent_radius = 0.16;
      c.horizon = 128;
      c.extras.c_shape = 1.0;
      break;
    case Scenario::sensor_coverage:
      c.n_agents = 4;
      c.bounds = {1.5, 1.5};
      c.agent_radius = 0.12;
      c.horizon = 128;
      c.extras.obstacle_count_min = 1;
      c.extras.obstacle_count_max = 1;
      break;
  }
  // contact distance plus a 1 cm buffer keeps solver-tolerance contacts from
  // registering as collisions
  c.cbf.min_distance = 2.0 * c.agent_radius + 0.01;
  c.cbf.gain = 1.0;
  return c;
}

std::pair<double, double> goal_region(const AgentState& agent, const EnvConfig& config) {
  const double L = config.extras.region_length;
  if (agent.team == 0) return {config.bounds.y_max - L, config.bounds.y_max};
  return {-config.bounds.y_max, -config.bounds.y_max + L};
}

bool in_goal_region(const AgentState& agent, const EnvConfig& config) {
  const auto [lo, hi] = goal_region(agent, config);
  return agent.position.y() >= lo && agent.position.y() <= hi;
}

double goal_distance(const AgentState& agent, const EnvConfig& config) {
  if (config.scenario == Scenario::narrow_corridor || config.scenario == Scenario::connectivity) {
    const auto [lo, hi] = goal_region(agent, config);
    if (agent.position.y() < lo) return lo - agent.position.y();
    if (agent.position.y() > hi) return agent.position.y() - hi;
    return 0.0;
  }
  return (agent.position - agent.goal).norm();
}

namespace {

std::vector<Obstacle> sample_obstacles(const EnvConfig& config, std::mt19937_64& rng) {
  if (!config.has_obstacles()) return {};
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<int> count_dist(config.extras.obstacle_count_min,
                                                config.extras.obstacle_count_max);
  const int count = count_dist(rng);
  std::vector<Obstacle> obstacles;

  if (config.scenario == Scenario::connectivity) {
    // wall-attached blocks leaving a passable gap, spread along the corridor
    const double width_total = 2.0 * config.bounds.x_max;
    double y_cursor = -0.5 * config.bounds.y_max;
    for (int i = 0; i < count; ++i) {
      const double gap = 0.28 + 0.22 * unit(rng);
      const double width = width_total - gap;
      const bool left = unit(rng) < 0.5;
      const double height = 0.3;
      const double y_center = y_cursor + unit(rng) * 0.6;
      y_cursor = y_center + 1.0;
      Obstacle o;
      o.min_corner.y() = y_center - height / 2.0;
      o.max_corner.y() = y_center + height / 2.0;
      if (left) {
        o.min_corner.x() = -config.bounds.x_max;
        o.max_corner.x() = -config.bounds.x_max + width;
      } else {
        o.max_corner.x() = config.bounds.x_max;
        o.min_corner.x() = config.bounds.x_max - width;
      }
      obstacles.push_back(o);
    }
  } else {
    // free-standing block away from the arena rim
    for (int i = 0; i < count; ++i) {
      const double size = 0.3;
      const double x = (unit(rng) - 0.5) * config.bounds.x_max;
      const double y = (unit(rng) - 0.5) * config.bounds.y_max;
      Obstacle o;
      o.min_corner = Vec2(x - size / 2.0, y - size / 2.0);
      o.max_corner = Vec2(x + size / 2.0, y + size / 2.0);
      obstacles.push_back(o);
    }
  }
  return obstacles;
}

bool placement_ok(const Vec2& candidate, const std::vector<Vec2>& placed,
                  const std::vector<Obstacle>& obstacles, const EnvConfig& config,
                  bool cluster_within_range) {
  const double min_dist = 2.0 * config.agent_radius + config.extras.placement_margin;
  const double cluster_range =
      config.comm_range - 2.0 * config.max_speed.max_speed * config.dt - 0.05;
  for (const Vec2& p : placed) {
    const double d = (candidate - p).norm();
    if (d < min_dist) return false;
    if (cluster_within_range && d > cluster_range) return false;
  }
  for (const auto& o : obstacles) {
    if (inside_obstacle(candidate, o, config.agent_radius + config.extras.placement_margin)) {
      return false;
    }
  }
  return true;
}

}  // namespace

WorldState reset(const EnvConfig& config) {
  config.validate();
  WorldState state;
  state.rng.seed(config.seed);
  state.obstacles = sample_obstacles(config, state.rng);
  state.goal_bonus_taken.assign(config.n_agents, false);

  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double rho = config.agent_radius;
  const double x_lo = -config.bounds.x_max + rho;
  const double x_hi = config.bounds.x_max - rho;

  double y_lo = -config.bounds.y_max + rho;
  double y_hi = config.bounds.y_max - rho;
  const bool cluster = config.has_connectivity();
  if (config.scenario == Scenario::connectivity) {
    // start below the obstacle field so agents must thread the gaps
    double min_obstacle_y = config.bounds.y_max;
    for (const auto& o : state.obstacles) min_obstacle_y = std::min(min_obstacle_y, o.min_corner.y());
    y_hi = std::min(y_hi, min_obstacle_y - 0.4);
    y_lo = std::max(y_lo, y_hi - 1.2);
  } else if (cluster) {
    // keep the spawn window small enough that an all-pairs clique is likely
    const double span = std::min(config.comm_range * 0.6, config.bounds.y_max);
    y_lo = -span / 2.0;
    y_hi = span / 2.0;
  }

  std::vector<Vec2> placed;
  int rejections = 0;
  while (static_cast<int>(placed.size()) < config.n_agents) {
    double lo = y_lo, hi = y_hi;
    if (config.scenario == Scenario::narrow_corridor) {
      // the teams swap ends, so each spawns at the end opposite its region
      const int team = static_cast<int>(placed.size()) % 2;
      const double depth = std::max(config.extras.region_length + 0.4,
                                    0.35 * config.n_agents * config.agent_radius * 4.0);
      if (team == 0) {
        hi = std::min(y_hi, y_lo + depth);
      } else {
        lo = std::max(y_lo, y_hi - depth);
      }
    }
    const Vec2 candidate(x_lo + (x_hi - x_lo) * unit(state.rng),
                         lo + (hi - lo) * unit(state.rng));
    if (placement_ok(candidate, placed, state.obstacles, config, cluster)) {
      placed.push_back(candidate);
    } else if (++rejections > kMaxPlacementRejections) {
      throw std::runtime_error("reset: placement failed, configuration too dense");
    }
  }

  state.agents.resize(config.n_agents);
  for (int i = 0; i < config.n_agents; ++i) {
    AgentState& a = state.agents[i];
    a.position = placed[i];
    a.radius = rho;
    a.team = (config.scenario == Scenario::narrow_corridor) ? i % 2 : 0;
    const auto [lo, hi] = goal_region(a, config);
    a.goal = Vec2(0.0, 0.5 * (lo + hi));
  }

  if (config.scenario == Scenario::waypoint || config.scenario == Scenario::sensor_coverage) {
    std::vector<Vec2> goals;
    rejections = 0;
    const double goal_sep = std::max(0.3, 2.0 * rho);
    while (static_cast<int>(goals.size()) < config.n_agents) {
      const Vec2 candidate((2.0 * unit(state.rng) - 1.0) * (config.bounds.x_max - rho),
                           (2.0 * unit(state.rng) - 1.0) * (config.bounds.y_max - rho));
      bool ok = true;
      for (const Vec2& g : goals) {
        if ((candidate - g).norm() < goal_sep) ok = false;
      }
      for (const auto& o : state.obstacles) {
        if (inside_obstacle(candidate, o, rho)) ok = false;
      }
      if (ok) {
        goals.push_back(candidate);
      } else if (++rejections > kMaxPlacementRejections) {
        throw std::runtime_error("reset: goal placement failed");
      }
    }
    for (int i = 0; i < config.n_agents; ++i) state.agents[i].goal = goals[i];
  }
  return state;
}

std::vector<ObservationGraph> observe_all(const WorldState& state, const EnvConfig& config) {
  const int n = static_cast<int>(state.agents.size());
  std::vector<ObservationGraph> graphs(n);
  for (int i = 0; i < n; ++i) {
    const AgentState& a = state.agents[i];
    ObservationGraph& g = graphs[i];
    g.agent_id = i;
    g.position = a.position;
    g.goal_displacement = a.goal - a.position;
    g.bounds_distances = Eigen::Vector4d(config.bounds.x_max - a.position.x(),
                                         config.bounds.x_max + a.position.x(),
                                         config.bounds.y_max - a.position.y(),
                                         config.bounds.y_max + a.position.y());
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      const AgentState& b = state.agents[j];
      if ((b.position - a.position).norm() >= config.comm_range) continue;
      EdgeFeature edge;
      edge.neighbor_id = j;
      edge.rel_position = b.position - a.position;
      edge.rel_goal = b.goal - b.position;
      edge.same_team = (a.team == b.team) ? 1.0 : -1.0;
      g.neighbor_edges.push_back(edge);
    }
    for (const auto& o : state.obstacles) {
      const auto [sd, normal] = separating_face(a.position, o);
      if (sd > config.comm_range) continue;
      ObstacleFace face;
      face.normal = normal;
      face.clearance = sd - a.radius;
      g.obstacle_faces.push_back(face);
    }
  }
  return graphs;
}

std::vector<Event> connectivity_violation_check(const WorldState& state,
                                                const std::vector<Vec2>& proposed_controls,
                                                const EnvConfig& config) {
  std::vector<Event> events;
  if (!config.has_connectivity()) return events;
  const int n = static_cast<int>(state.agents.size());
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const Vec2 pi = state.agents[i].position + proposed_controls[i] * config.dt;
      const Vec2 pj = state.agents[j].position + proposed_controls[j] * config.dt;
      if ((pi - pj).norm() > config.comm_range + kDistanceSlack) {
        add_event_pair(events, EventType::link_break_attempt, i, j);
      }
    }
  }
  return events;
}

namespace {

std::vector<RewardTerms> corridor_terms(const WorldState& prev, const WorldState& next,
                                        const EnvConfig& config,
                                        const std::vector<Event>& events) {
  const int n = static_cast<int>(next.agents.size());
  std::vector<RewardTerms> terms(n);
  for (int i = 0; i < n; ++i) {
    RewardTerms& t = terms[i];
    t.shaping = config.extras.c_shape *
                (goal_distance(prev.agents[i], config) - goal_distance(next.agents[i], config));
    if (in_goal_region(next.agents[i], config)) t.region = config.extras.region_reward;
    t.collision =
        config.extras.collision_penalty * count_events(events, EventType::collision, i);
    if (has_event(events, EventType::out_of_bounds, i)) {
      t.out_of_bounds = config.extras.out_of_bounds_penalty;
    }
    t.link_break = config.extras.link_break_penalty *
                   count_events(events, EventType::link_break_attempt, i);
  }
  return terms;
}

}  // namespace

std::vector<RewardTerms> reward_narrow_corridor(const WorldState& prev, const WorldState& next,
                                                const EnvConfig& config,
                                                const std::vector<Event>& events) {
  return corridor_terms(prev, next, config, events);
}

std::vector<RewardTerms> reward_waypoint(const WorldState& prev, const WorldState& next,
                                         const EnvConfig& config,
                                         const std::vector<Event>& events) {
  const int n = static_cast<int>(next.agents.size());
  std::vector<RewardTerms> terms(n);
  for (int i = 0; i < n; ++i) {
    RewardTerms& t = terms[i];
    const double d_prev = (prev.agents[i].position - prev.agents[i].goal).norm();
    const double d_next = (next.agents[i].position - next.agents[i].goal).norm();
    t.shaping = config.extras.c_shape * (d_prev - d_next);
    if (has_event(events, EventType::goal_reached, i)) t.goal_bonus = config.extras.goal_bonus;
    t.collision =
        config.extras.collision_penalty * count_events(events, EventType::collision, i);
  }
  return terms;
}

std::vector<RewardTerms> reward_sensor_coverage(const WorldState& state, const EnvConfig& config,
                                                const std::vector<Event>& events) {
  const int n = static_cast<int>(state.agents.size());
  std::vector<RewardTerms> terms(n);
  for (int i = 0; i < n; ++i) {
    RewardTerms& t = terms[i];
    const double d2 = (state.agents[i].position - state.agents[i].goal).squaredNorm();
    t.prox = std::exp(-config.extras.lambda_prox * d2);
    t.collision =
        config.extras.collision_penalty * count_events(events, EventType::collision, i);
    if (has_event(events, EventType::out_of_bounds, i)) {
      t.out_of_bounds = config.extras.out_of_bounds_penalty;
    }
    t.link_break = config.extras.link_break_penalty *
                   count_events(events, EventType::link_break_attempt, i);
  }
  return terms;
}

std::pair<WorldState, StepResult> step(const WorldState& state, const std::vector<Vec2>& controls,
                                       const EnvConfig& config) {
  const int n = static_cast<int>(state.agents.size());
  if (static_cast<int>(controls.size()) != n) {
    throw std::invalid_argument("step: one control per agent required");
  }
  for (const Vec2& u : controls) {
    if (!u.allFinite()) throw std::invalid_argument("step: non-finite control");
    if (u.norm() > config.max_speed.max_speed + 1e-6) {
      throw std::invalid_argument("step: control exceeds the speed bound");
    }
  }

  WorldState next = state;
  StepResult result;
  result.events = connectivity_violation_check(state, controls, config);

  for (int i = 0; i < n; ++i) next.agents[i].position += controls[i] * config.dt;

  // out-of-bounds: clamp and record
  for (int i = 0; i < n; ++i) {
    Vec2& p = next.agents[i].position;
    const Vec2 clamped(clamp(p.x(), -config.bounds.x_max, config.bounds.x_max),
                       clamp(p.y(), -config.bounds.y_max, config.bounds.y_max));
    if ((clamped - p).norm() > 1e-9) result.events.push_back({EventType::out_of_bounds, i, -1});
    p = clamped;
  }

  // obstacle penetration: push out to the surface and record
  for (int i = 0; i < n; ++i) {
    Vec2& p = next.agents[i].position;
    for (const auto& o : next.obstacles) {
      const auto [sd, normal] = separating_face(p, o);
      if (sd < next.agents[i].radius - kDistanceSlack) {
        p += normal * (next.agents[i].radius - sd);
        if (!has_event(result.events, EventType::out_of_bounds, i)) {
          result.events.push_back({EventType::out_of_bounds, i, -1});
        }
      }
    }
  }

  // contact resolution: collisions push apart, broken links pull together
  std::vector<std::pair<int, int>> collided;
  for (int pass = 0; pass < 4; ++pass) {
    for (int i = 0; i < n; ++i) {
      for (int j = i + 1; j < n; ++j) {
        Vec2& pi = next.agents[i].position;
        Vec2& pj = next.agents[j].position;
        const double contact = next.agents[i].radius + next.agents[j].radius;
        Vec2 diff = pj - pi;
        double dist = diff.norm();
        if (dist < contact - kDistanceSlack) {
          if (pass == 0) collided.emplace_back(i, j);
          const Vec2 dir = dist > 1e-12 ? Vec2(diff / dist) : Vec2(1.0, 0.0);
          const double push = 0.5 * (contact - dist);
          pi -= dir * push;
          pj += dir * push;
        } else if (config.has_connectivity() && dist > config.comm_range + kDistanceSlack) {
          const Vec2 dir = diff / dist;
          const double pull = 0.5 * (dist - config.comm_range);
          pi += dir * pull;
          pj -= dir * pull;
        }
      }
    }
    for (int i = 0; i < n; ++i) {
      Vec2& p = next.agents[i].position;
      p = Vec2(clamp(p.x(), -config.bounds.x_max, config.bounds.x_max),
               clamp(p.y(), -config.bounds.y_max, config.bounds.y_max));
    }
  }
  for (const auto& [i, j] : collided) add_event_pair(result.events, EventType::collision, i, j);

  // goal events
  if (config.scenario == Scenario::narrow_corridor || config.scenario == Scenario::connectivity) {
    for (int i = 0; i < n; ++i) {
      if (!in_goal_region(state.agents[i], config) && in_goal_region(next.agents[i], config)) {
        result.events.push_back({EventType::goal_reached, i, -1});
      }
    }
  } else if (config.scenario == Scenario::waypoint) {
    for (int i = 0; i < n; ++i) {
      const double d = (next.agents[i].position - next.agents[i].goal).norm();
      if (d <= config.extras.goal_tolerance && !next.goal_bonus_taken[i]) {
        next.goal_bonus_taken[i] = true;
        result.events.push_back({EventType::goal_reached, i, -1});
      }
    }
  }

  switch (config.scenario) {
    case Scenario::narrow_corridor:
    case Scenario::connectivity:
      result.reward_terms = reward_narrow_corridor(state, next, config, result.events);
      break;
    case Scenario::waypoint:
      result.reward_terms = reward_waypoint(state, next, config, result.events);
      break;
    case Scenario::sensor_coverage:
      result.reward_terms = reward_sensor_coverage(next, config, result.events);
      break;
  }
  result.rewards.resize(n);
  for (int i = 0; i < n; ++i) result.rewards[i] = result.reward_terms[i].total();

  next.time_index = state.time_index + 1;
  result.done = next.time_index >= config.horizon;
  return {std::move(next), std::move(result)};
}

}  // namespace recode::env
