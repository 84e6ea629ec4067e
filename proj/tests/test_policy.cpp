#include "recode/checkpoint.hpp"
#include "recode/env.hpp"
#include "recode/policy.hpp"

#include <doctest.h>

#include <algorithm>
#include <cstdio>
#include <random>

using namespace recode;
using namespace recode::policy;

namespace {

ArchitectureConfig tiny_config(PolicyHead head = PolicyHead::recode) {
  ArchitectureConfig cfg;
  cfg.embed_width = 6;
  cfg.attn_width = 5;
  cfg.decoder_hidden = 8;
  cfg.head = head;
  return cfg;
}

ObservationGraph random_obs(std::mt19937_64& rng, int n_edges) {
  std::uniform_real_distribution<double> sym(-1.0, 1.0);
  ObservationGraph obs;
  obs.position = Vec2(sym(rng) * 0.4, sym(rng) * 3.0);
  obs.goal_displacement = Vec2(sym(rng), sym(rng));
  obs.bounds_distances =
      Eigen::Vector4d(1.0 + sym(rng), 1.0 + sym(rng), 3.0 + sym(rng), 3.0 + sym(rng));
  for (int j = 0; j < n_edges; ++j) {
    EdgeFeature e;
    e.neighbor_id = j + 1;
    e.rel_position = Vec2(sym(rng), sym(rng));
    e.rel_goal = Vec2(sym(rng), sym(rng));
    e.same_team = sym(rng) > 0 ? 1.0 : -1.0;
    obs.neighbor_edges.push_back(e);
  }
  return obs;
}

}  // namespace

TEST_CASE("actor is permutation invariant over neighbors") {
  const auto cfg = tiny_config();
  const auto params = init_params(cfg, 7);
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    auto obs = random_obs(rng, 4);
    const auto base = actor_forward(obs, params, cfg, ForwardMode::deterministic);
    auto shuffled = obs;
    std::shuffle(shuffled.neighbor_edges.begin(), shuffled.neighbor_edges.end(), rng);
    const auto permuted = actor_forward(shuffled, params, cfg, ForwardMode::deterministic);
    CHECK((base.action - permuted.action).norm() <= 1e-6);
    CHECK((base.mean - permuted.mean).norm() <= 1e-6);
  }
}

TEST_CASE("empty neighborhood depends only on self features") {
  const auto cfg = tiny_config();
  const auto params = init_params(cfg, 7);
  std::mt19937_64 rng(5);
  auto obs = random_obs(rng, 0);
  const auto a = actor_forward(obs, params, cfg, ForwardMode::deterministic);
  auto obs2 = obs;  // same self features, still no edges
  const auto b = actor_forward(obs2, params, cfg, ForwardMode::deterministic);
  CHECK((a.action - b.action).norm() == 0.0);
}

TEST_CASE("sampling is reproducible under a fixed seed") {
  const auto cfg = tiny_config();
  const auto params = init_params(cfg, 7);
  std::mt19937_64 obs_rng(9);
  const auto obs = random_obs(obs_rng, 2);
  std::mt19937_64 rng1(123), rng2(123);
  const auto s1 = actor_forward(obs, params, cfg, ForwardMode::sample, &rng1);
  const auto s2 = actor_forward(obs, params, cfg, ForwardMode::sample, &rng2);
  CHECK((s1.action - s2.action).norm() == 0.0);
  CHECK(s1.log_prob == s2.log_prob);
  // the reported log-prob matches an independent recomputation
  CHECK(s1.log_prob ==
        doctest::Approx(actor_log_prob(obs, params, cfg, s1.pre_squash)).epsilon(1e-12));
}

TEST_CASE("actor outputs satisfy the squash ranges for any parameters") {
  std::mt19937_64 rng(11);
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto cfg = tiny_config();
    auto params = init_params(cfg, seed);
    // exaggerate the weights so the ranges are genuinely stressed
    for (auto& t : params.tensors) t.values *= 5.0;
    for (int trial = 0; trial < 20; ++trial) {
      const auto obs = random_obs(rng, trial % 4);
      const auto out = actor_forward(obs, params, cfg, ForwardMode::sample, &rng);
      const double a_norm = out.action.head<2>().norm();
      const double b = out.action(2);
      CHECK(a_norm <= cfg.max_speed + 1e-12);
      CHECK(b >= 0.0);
      CHECK(b <= 2.0 * cfg.max_speed + 1e-12);
    }
  }
}

TEST_CASE("critic pooling is permutation invariant") {
  const auto cfg = tiny_config();
  const auto params = init_params(cfg, 21);
  std::mt19937_64 rng(13);
  std::vector<ObservationGraph> all_obs;
  for (int i = 0; i < 4; ++i) all_obs.push_back(random_obs(rng, 2));
  const double v = critic_forward(all_obs, params, cfg).value;
  std::reverse(all_obs.begin(), all_obs.end());
  CHECK(critic_forward(all_obs, params, cfg).value == doctest::Approx(v).epsilon(1e-12));

  const std::vector<ObservationGraph> single{all_obs[0]};
  CHECK(std::isfinite(critic_forward(single, params, cfg).value));
}

TEST_CASE("critic value is unchanged under a mirror that permutes the world") {
  auto config = env::default_config(Scenario::narrow_corridor);
  config.n_agents = 2;
  env::WorldState state;
  state.rng.seed(0);
  state.goal_bonus_taken.assign(2, false);
  env::AgentState a;
  a.radius = config.agent_radius;
  a.team = 0;
  a.position = Vec2(0.25, -1.3);
  a.goal = Vec2(0.0, 2.7);
  env::AgentState b = a;
  b.position = Vec2(-0.25, -1.3);
  state.agents = {a, b};

  env::WorldState mirrored = state;
  for (auto& ag : mirrored.agents) {
    ag.position.x() = -ag.position.x();
    ag.goal.x() = -ag.goal.x();
  }

  const auto cfg = tiny_config();
  const auto params = init_params(cfg, 33);
  const double v1 = critic_forward(env::observe_all(state, config), params, cfg).value;
  const double v2 = critic_forward(env::observe_all(mirrored, config), params, cfg).value;
  CHECK(v1 == doctest::Approx(v2).epsilon(1e-9));
}

TEST_CASE("actor ignores agents beyond the communication range") {
  auto config = env::default_config(Scenario::narrow_corridor);
  config.n_agents = 2;
  env::WorldState near;
  near.rng.seed(0);
  near.goal_bonus_taken.assign(2, false);
  env::AgentState a;
  a.radius = config.agent_radius;
  a.team = 0;
  a.position = Vec2(0.0, -2.0);
  a.goal = Vec2(0.0, 2.7);
  env::AgentState b = a;
  b.team = 1;
  b.position = Vec2(0.1, -1.2);
  b.goal = Vec2(0.0, -2.7);
  near.agents = {a, b};

  env::WorldState with_far = near;
  env::AgentState far_agent = b;
  far_agent.position = Vec2(0.0, 2.9);  // far outside comm_range of both
  with_far.agents.push_back(far_agent);
  with_far.goal_bonus_taken.assign(3, false);

  auto config3 = config;
  config3.n_agents = 3;
  const auto cfg = tiny_config();
  const auto params = init_params(cfg, 17);
  const auto obs2 = env::observe_all(near, config);
  const auto obs3 = env::observe_all(with_far, config3);
  const auto o2 = actor_forward(obs2[0], params, cfg, ForwardMode::deterministic);
  const auto o3 = actor_forward(obs3[0], params, cfg, ForwardMode::deterministic);
  CHECK((o2.action - o3.action).norm() <= 1e-12);
}

TEST_CASE("init_params is deterministic in the seed") {
  const auto cfg = tiny_config();
  const auto p1 = init_params(cfg, 5);
  const auto p2 = init_params(cfg, 5);
  const auto p3 = init_params(cfg, 6);
  CHECK((p1.flatten() - p2.flatten()).norm() == 0.0);
  CHECK((p1.flatten() - p3.flatten()).norm() > 0.0);
  CHECK(p1.all_finite());
  for (const auto& t : p1.tensors) {
    int n = 1;
    for (int d : t.shape) n *= d;
    CHECK(n == t.values.size());
  }
}

TEST_CASE("probe gradients") {
  const auto cfg = tiny_config();
  const auto params = init_params(cfg, 2);

  SUBCASE("constant loss has zero gradient") {
    const auto g = grad(LossSpec::constant, {}, params, cfg);
    CHECK(g.flatten().norm() == 0.0);
  }
  SUBCASE("quadratic probe gradient equals the parameters") {
    const auto g = grad(LossSpec::quadratic_probe, {}, params, cfg);
    CHECK((g.flatten() - params.flatten()).norm() == 0.0);
  }
}

TEST_CASE("actor-critic gradient matches central finite differences") {
  const auto cfg = tiny_config();
  auto params = init_params(cfg, 4);
  std::mt19937_64 rng(19);
  std::uniform_real_distribution<double> sym(-1.0, 1.0);

  std::vector<GradSample> batch;
  for (int s = 0; s < 3; ++s) {
    GradSample sample;
    const int n_agents = 2 + s % 2;
    for (int i = 0; i < n_agents; ++i) {
      sample.all_obs.push_back(random_obs(rng, i % 3));
      Eigen::VectorXd v(cfg.action_dim());
      for (int k = 0; k < v.size(); ++k) v(k) = 0.5 * sym(rng);
      sample.pre_squash.push_back(v);
      sample.advantage.push_back(sym(rng));
    }
    sample.value_target = sym(rng);
    batch.push_back(std::move(sample));
  }

  const auto analytic = grad(LossSpec::actor_critic, batch, params, cfg).flatten();
  Eigen::VectorXd flat = params.flatten();
  Eigen::VectorXd fd(flat.size());
  const double h = 1e-6;
  for (int i = 0; i < flat.size(); ++i) {
    Eigen::VectorXd up = flat, down = flat;
    up(i) += h;
    down(i) -= h;
    PolicyParams pu = params, pd = params;
    pu.unflatten(up);
    pd.unflatten(down);
    fd(i) = (loss_value(LossSpec::actor_critic, batch, pu, cfg) -
             loss_value(LossSpec::actor_critic, batch, pd, cfg)) /
            (2.0 * h);
  }
  const double rel = (analytic - fd).norm() / std::max(analytic.norm(), fd.norm());
  CHECK(rel <= 1e-4);
}

TEST_CASE("checkpoint round-trip is bit-exact") {
  const auto cfg = tiny_config();
  const auto params = init_params(cfg, 77);
  const std::string path = "/tmp/recode_test_checkpoint.rcd";
  checkpoint::save(path, params, cfg.digest());
  const auto loaded = checkpoint::load(path, cfg.digest());
  CHECK(loaded.digest == cfg.digest());
  REQUIRE(loaded.params.tensors.size() == params.tensors.size());
  for (size_t i = 0; i < params.tensors.size(); ++i) {
    CHECK(loaded.params.tensors[i].name == params.tensors[i].name);
    CHECK(loaded.params.tensors[i].shape == params.tensors[i].shape);
    REQUIRE(loaded.params.tensors[i].values.size() == params.tensors[i].values.size());
    for (Eigen::Index k = 0; k < params.tensors[i].values.size(); ++k) {
      CHECK(loaded.params.tensors[i].values(k) == params.tensors[i].values(k));
    }
  }
  CHECK_THROWS_AS(checkpoint::load(path, cfg.digest() + 1), std::runtime_error);
  std::remove(path.c_str());
}
