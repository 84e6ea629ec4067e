#include "recode/baselines.hpp"

#include <doctest.h>

#include <cmath>

using namespace recode;
using namespace recode::baselines;

namespace {

env::AgentState agent_at(const Vec2& p, double radius = 0.12) {
  env::AgentState a;
  a.position = p;
  a.radius = radius;
  return a;
}

}  // namespace

TEST_CASE("rvo with no neighbors clamps the preferred velocity") {
  RvoConfig cfg;
  cfg.max_speed = 0.5;
  const auto res = rvo_velocity(agent_at({0, 0}), Vec2(0, 0), {}, Vec2(2.0, 0.0), cfg);
  CHECK(res.velocity.norm() <= cfg.max_speed + 1e-9);
  CHECK(res.velocity.x() == doctest::Approx(cfg.max_speed).epsilon(1e-3));
  CHECK(res.dropped_planes == 0);
}

TEST_CASE("non-binding planes leave the preferred velocity unchanged") {
  RvoConfig cfg;
  cfg.max_speed = 0.5;
  // neighbor behind, moving away: its half-plane cannot bind a forward move
  std::vector<std::pair<env::AgentState, Vec2>> neighbors{
      {agent_at({0.0, -1.2}), Vec2(0.0, -0.4)}};
  const Vec2 preferred(0.0, 0.4);
  const auto res = rvo_velocity(agent_at({0, 0}), Vec2(0.0, 0.3), neighbors, preferred, cfg);
  CHECK((res.velocity - preferred).norm() <= 2e-4);  // tie-break perturbation scale
}

TEST_CASE("symmetric head-on pair deflects in mirrored directions") {
  RvoConfig cfg;
  cfg.max_speed = 0.5;
  const auto a = agent_at({0.0, -0.5});
  const auto b = agent_at({0.0, 0.5});
  const Vec2 va(0.0, 0.4), vb(0.0, -0.4);
  const auto ra = rvo_velocity(a, va, {{b, vb}}, Vec2(0.0, 0.5), cfg);
  const auto rb = rvo_velocity(b, vb, {{a, va}}, Vec2(0.0, -0.5), cfg);
  // mirror through the origin: velocities are negatives of each other
  CHECK((ra.velocity + rb.velocity).norm() <= 1e-9);
  CHECK(std::abs(ra.velocity.x()) > 1e-5);  // the tie-break actually deflected
}

TEST_CASE("rvo closed loop resolves a head-on corridor meeting without collisions") {
  auto config = env::default_config(Scenario::narrow_corridor);
  config.n_agents = 2;
  config.horizon = 200;
  const auto result = rvo_rollout(config, 12345);
  CHECK(result.collision_events == 0);
  CHECK(result.steps == config.horizon);
}

TEST_CASE("far neighbors reduce rvo to the clamped preferred velocity") {
  RvoConfig cfg;
  cfg.max_speed = 0.5;
  cfg.time_horizon = 2.0;
  // beyond time_horizon*2M + 2*radius, the velocity obstacle cannot bind
  const double far = cfg.time_horizon * 2.0 * cfg.max_speed + 2 * 0.12 + 0.05;
  std::vector<std::pair<env::AgentState, Vec2>> neighbors{
      {agent_at({0.0, far}), Vec2(0.0, 0.0)}};
  const Vec2 preferred(0.0, 0.5);
  const auto res = rvo_velocity(agent_at({0, 0}), Vec2(0, 0.5), neighbors, preferred, cfg);
  CHECK((res.velocity - preferred).norm() <= 2e-4);
}

TEST_CASE("handcrafted rollout on a clear corridor makes monotone progress") {
  auto config = env::default_config(Scenario::narrow_corridor);
  config.n_agents = 1;
  config.horizon = 80;
  config.seed = 4;
  auto state = env::reset(config);
  const auto spec = config.scenario_spec();
  double prev_distance = env::goal_distance(state.agents[0], config);
  for (int t = 0; t < 40; ++t) {
    const auto graphs = env::observe_all(state, config);
    const auto res = qcqp::solve(controllers::build_default_program(graphs[0], spec));
    REQUIRE(res.status == qcqp::SolveStatus::optimal);
    auto [next, sr] = env::step(state, {res.control}, config);
    state = std::move(next);
    const double d = env::goal_distance(state.agents[0], config);
    CHECK(d <= prev_distance + 1e-9);
    prev_distance = d;
  }
}

TEST_CASE("opposing teams jammed mid-corridor trigger the deadlock detector") {
  auto config = env::default_config(Scenario::narrow_corridor);
  config.n_agents = 2;
  config.horizon = 160;
  // a keep-away distance wider than the corridor forces a standoff
  config.cbf.min_distance = 1.0;
  config.extras.placement_margin = 1.0 - 2 * config.agent_radius + 0.02;

  env::WorldState state;
  state.rng.seed(0);
  state.goal_bonus_taken.assign(2, false);
  auto a = env::AgentState{};
  a.radius = config.agent_radius;
  a.team = 0;
  a.position = Vec2(0.0, -0.8);
  a.goal = Vec2(0.0, 2.7);
  auto b = a;
  b.team = 1;
  b.position = Vec2(0.0, 0.8);
  b.goal = Vec2(0.0, -2.7);
  state.agents = {a, b};

  const auto result = handcrafted_rollout(config, std::move(state));
  CHECK(result.deadlock);
  CHECK_FALSE(result.all_reached);
  CHECK(result.collision_events == 0);
}
