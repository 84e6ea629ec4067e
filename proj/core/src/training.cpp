#include "recode/training.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace recode::training {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t episode_seed(std::uint64_t base, int instance, long long episode) {
  return splitmix64(base ^ splitmix64(static_cast<std::uint64_t>(instance) * 0x9E37ULL + 1) ^
                    splitmix64(static_cast<std::uint64_t>(episode) + 0x51ULL));
}

}  // namespace

std::string to_string(Mode mode) {
  switch (mode) {
    case Mode::recode: return "recode";
    case Mode::recode_linear: return "recode_linear";
    case Mode::pure_marl: return "pure_marl";
    case Mode::shielding: return "shielding";
    case Mode::online_cbf: return "online_cbf";
    case Mode::ablation_objective: return "ablation_objective";
    case Mode::ablation_both: return "ablation_both";
  }
  return "?";
}

std::optional<Mode> mode_from_string(const std::string& name) {
  for (Mode m : {Mode::recode, Mode::recode_linear, Mode::pure_marl, Mode::shielding,
                 Mode::online_cbf, Mode::ablation_objective, Mode::ablation_both}) {
    if (to_string(m) == name) return m;
  }
  return std::nullopt;
}

bool mode_uses_solver(Mode mode) { return mode != Mode::pure_marl; }

policy::PolicyHead head_for_mode(Mode mode) {
  switch (mode) {
    case Mode::recode: return policy::PolicyHead::recode;
    case Mode::recode_linear: return policy::PolicyHead::recode_linear;
    case Mode::pure_marl: return policy::PolicyHead::raw_action;
    case Mode::shielding: return policy::PolicyHead::raw_action;
    case Mode::online_cbf: return policy::PolicyHead::cbf_gain;
    case Mode::ablation_objective: return policy::PolicyHead::objective_offset;
    case Mode::ablation_both: return policy::PolicyHead::recode_and_offset;
  }
  return policy::PolicyHead::recode;
}

void TrainConfig::validate() const {
  if (!(discount > 0.0) || discount > 1.0) {
    throw std::invalid_argument("TrainConfig: discount must lie in (0, 1]");
  }
  if (!(clip_epsilon > 0.0)) throw std::invalid_argument("TrainConfig: clip_epsilon must be > 0");
  if (n_env_instances < 1 || rollout_length < 1 || minibatch_count < 1 ||
      epochs_per_update < 1) {
    throw std::invalid_argument("TrainConfig: counts must be positive");
  }
  if (!(lambda0 > 0.0)) throw std::invalid_argument("TrainConfig: lambda0 must be positive");
}

controllers::ThetaParams theta_from_action(const Eigen::VectorXd& action) {
  controllers::ThetaParams theta;
  theta.reference_action = Vec2(action(0), action(1));
  theta.uncertainty_radius = action(2);
  return theta;
}

std::optional<qcqp::ConvexProgram> build_mode_program(Mode mode, const ObservationGraph& obs,
                                                      const controllers::ScenarioSpec& spec,
                                                      const Eigen::VectorXd& action,
                                                      double lambda0) {
  using controllers::build_default_program;
  switch (mode) {
    case Mode::pure_marl:
      return std::nullopt;
    case Mode::recode:
      return controllers::augment_recode(build_default_program(obs, spec),
                                         theta_from_action(action), lambda0);
    case Mode::recode_linear: {
      controllers::LinearTheta theta;
      theta.normal = Vec2(std::cos(action(0)), std::sin(action(0)));
      theta.offset = action(1);
      theta.slack_penalty = lambda0;
      return controllers::augment_linear(build_default_program(obs, spec), theta);
    }
    case Mode::shielding: {
      qcqp::ConvexProgram program = build_default_program(obs, spec);
      program.objective.quad_matrix = 2.0 * qcqp::Mat2::Identity();
      program.objective.lin_vector = -2.0 * Vec2(action(0), action(1));
      program.objective.regularization = 0.0;
      return program;
    }
    case Mode::online_cbf:
      return controllers::online_cbf_program(obs, action(0), spec);
    case Mode::ablation_objective:
    case Mode::ablation_both: {
      qcqp::ConvexProgram program = build_default_program(obs, spec);
      const int base = (mode == Mode::ablation_both) ? 3 : 0;
      const Vec2 offset(action(base), action(base + 1));
      const Vec2 target = obs.goal_displacement + offset;
      program.objective.quad_matrix = 2.0 * spec.dt * spec.dt * qcqp::Mat2::Identity();
      program.objective.lin_vector = -2.0 * spec.dt * target;
      program.objective.regularization = 0.0;
      controllers::ThetaParams theta;
      if (mode == Mode::ablation_both) {
        theta = theta_from_action(action);
      } else {
        theta.reference_action = Vec2::Zero();
        theta.uncertainty_radius = 2.0 * spec.max_speed.max_speed;  // non-binding
      }
      return controllers::augment_recode(program, theta, lambda0);
    }
  }
  return std::nullopt;
}

policy::ArchitectureConfig make_arch(const env::EnvConfig& env_config, Mode mode) {
  policy::ArchitectureConfig arch;
  arch.head = head_for_mode(mode);
  arch.max_speed = env_config.max_speed.max_speed;
  arch.feature_scale = std::max(env_config.bounds.x_max, env_config.bounds.y_max);
  arch.goal_offset_max = 0.5;
  arch.gain_min = controllers::kOnlineCbfGainMin;
  arch.gain_max = controllers::kOnlineCbfGainMax;
  return arch;
}

std::vector<EnvInstance> make_instances(const env::EnvConfig& base, int n_instances,
                                        std::uint64_t seed) {
  std::vector<EnvInstance> instances;
  instances.reserve(n_instances);
  for (int i = 0; i < n_instances; ++i) {
    EnvInstance inst;
    inst.config = base;
    inst.config.seed = episode_seed(seed, i, 0);
    inst.state = env::reset(inst.config);
    inst.episode_counter = 0;
    instances.push_back(std::move(inst));
  }
  return instances;
}

namespace {

double agent_value(const std::vector<ObservationGraph>& graphs, int agent,
                   const policy::PolicyParams& params, const policy::ArchitectureConfig& arch,
                   CriticKind kind) {
  if (kind == CriticKind::centralized) {
    return policy::critic_forward(graphs, params, arch).value;
  }
  return policy::critic_forward({graphs[agent]}, params, arch).value;
}

}  // namespace

RolloutBatch collect_rollouts(std::vector<EnvInstance>& instances,
                              const policy::PolicyParams& params,
                              const policy::ArchitectureConfig& arch, const TrainConfig& config,
                              std::mt19937_64& rng) {
  const int n_inst = static_cast<int>(instances.size());
  if (n_inst == 0) throw std::invalid_argument("collect_rollouts: no instances");
  const int n_agents = instances[0].config.n_agents;
  const int n_steps = config.rollout_length;

  RolloutBatch batch;
  batch.n_instances = n_inst;
  batch.n_steps = n_steps;
  batch.n_agents = n_agents;
  const int total = n_inst * n_steps * n_agents;
  batch.obs.resize(total);
  batch.pre_squash.resize(total);
  batch.action.resize(total);
  batch.log_prob.assign(total, 0.0);
  batch.control.assign(total, Vec2::Zero());
  batch.slack_values.resize(total);
  batch.reward.assign(total, 0.0);
  batch.value.assign(total, 0.0);
  batch.done.assign(n_inst * n_steps, 0);
  batch.truncation_value.assign(total, std::numeric_limits<double>::quiet_NaN());

  for (int t = 0; t < n_steps; ++t) {
    std::vector<std::vector<ObservationGraph>> graphs(n_inst);
    std::vector<double> centralized_value(n_inst, 0.0);
    for (int i = 0; i < n_inst; ++i) {
      graphs[i] = env::observe_all(instances[i].state, instances[i].config);
      if (config.critic == CriticKind::centralized) {
        centralized_value[i] = policy::critic_forward(graphs[i], params, arch).value;
      }
    }

    std::vector<qcqp::ConvexProgram> programs;
    std::vector<int> program_slot;
    programs.reserve(static_cast<size_t>(n_inst) * n_agents);
    for (int i = 0; i < n_inst; ++i) {
      const auto spec = instances[i].config.scenario_spec();
      for (int a = 0; a < n_agents; ++a) {
        const int idx = batch.index(i, t, a);
        batch.obs[idx] = graphs[i][a];
        const auto out =
            policy::actor_forward(graphs[i][a], params, arch, policy::ForwardMode::sample, &rng);
        batch.pre_squash[idx] = out.pre_squash;
        batch.action[idx] = out.action;
        batch.log_prob[idx] = out.log_prob;
        batch.value[idx] = (config.critic == CriticKind::centralized)
                               ? centralized_value[i]
                               : agent_value(graphs[i], a, params, arch, config.critic);
        if (auto program =
                build_mode_program(config.mode, graphs[i][a], spec, out.action, config.lambda0)) {
          programs.push_back(std::move(*program));
          program_slot.push_back(idx);
        } else {
          batch.control[idx] = Vec2(out.action(0), out.action(1));
        }
      }
    }

    // one batched program across every instance and agent
    std::vector<std::uint8_t> step_all_optimal(n_inst, 1);
    if (!programs.empty()) {
      const auto results = qcqp::batch_solve(programs);
      batch.solver_calls += static_cast<long long>(results.size());
      for (size_t k = 0; k < results.size(); ++k) {
        const int idx = program_slot[k];
        if (results[k].status == qcqp::SolveStatus::optimal) {
          batch.control[idx] = results[k].control;
          batch.slack_values[idx] = results[k].slack_values;
        } else {
          batch.control[idx] = Vec2::Zero();  // hard-feasible by construction
          batch.solver_fallbacks += 1;
          step_all_optimal[idx / (n_steps * n_agents)] = 0;
        }
      }
    }

    for (int i = 0; i < n_inst; ++i) {
      std::vector<Vec2> controls(n_agents);
      for (int a = 0; a < n_agents; ++a) controls[a] = batch.control[batch.index(i, t, a)];
      auto [next, result] = env::step(instances[i].state, controls, instances[i].config);
      instances[i].state = std::move(next);

      long long collisions_here = 0;
      for (const auto& e : result.events) {
        if (e.type == env::EventType::collision) ++collisions_here;
      }
      batch.collision_events += collisions_here;
      if (mode_uses_solver(config.mode) && step_all_optimal[i] && collisions_here > 0) {
        batch.collision_events_solver_optimal += collisions_here;
      }
      for (int a = 0; a < n_agents; ++a) {
        const int idx = batch.index(i, t, a);
        batch.reward[idx] = result.rewards[a];
        batch.collision_penalty_sum += result.reward_terms[a].collision;
      }
      batch.env_steps += 1;
      batch.agent_steps += n_agents;

      const bool episode_end = result.done;
      if (episode_end || t == n_steps - 1) {
        const auto post_graphs = env::observe_all(instances[i].state, instances[i].config);
        double central = 0.0;
        if (config.critic == CriticKind::centralized) {
          central = policy::critic_forward(post_graphs, params, arch).value;
        }
        for (int a = 0; a < n_agents; ++a) {
          batch.truncation_value[batch.index(i, t, a)] =
              (config.critic == CriticKind::centralized)
                  ? central
                  : agent_value(post_graphs, a, params, arch, config.critic);
        }
      }
      if (episode_end) {
        batch.done[batch.step_index(i, t)] = 1;
        instances[i].episode_counter += 1;
        instances[i].config.seed = episode_seed(config.seed, i, instances[i].episode_counter);
        instances[i].state = env::reset(instances[i].config);
      }
    }
  }
  return batch;
}

InfeasibilityReport flag_infeasible(const RolloutBatch& batch, double slack_threshold) {
  InfeasibilityReport report;
  for (int i = 0; i < batch.n_instances; ++i) {
    for (int t = 0; t < batch.n_steps; ++t) {
      for (int a = 0; a < batch.n_agents; ++a) {
        const int idx = batch.index(i, t, a);
        const auto& slacks = batch.slack_values[idx];
        for (size_t k = 0; k < slacks.size(); ++k) {
          if (slacks[k] > slack_threshold) {
            report.push_back({i, t, a, static_cast<int>(k), slacks[k]});
          }
        }
      }
    }
  }
  return report;
}

AdvantageResult compute_advantages(const RolloutBatch& batch, double discount,
                                   double gae_lambda) {
  AdvantageResult out;
  const int total = batch.n_instances * batch.n_steps * batch.n_agents;
  out.advantage.assign(total, 0.0);
  out.value_target.assign(total, 0.0);
  for (int i = 0; i < batch.n_instances; ++i) {
    for (int a = 0; a < batch.n_agents; ++a) {
      double carry = 0.0;
      for (int t = batch.n_steps - 1; t >= 0; --t) {
        const int idx = batch.index(i, t, a);
        const bool boundary = batch.done[batch.step_index(i, t)] || t == batch.n_steps - 1;
        const double next_value =
            boundary ? batch.truncation_value[idx] : batch.value[batch.index(i, t + 1, a)];
        const double delta = batch.reward[idx] + discount * next_value - batch.value[idx];
        const double continuation = batch.done[batch.step_index(i, t)] ? 0.0 : carry;
        carry = delta + discount * gae_lambda * continuation;
        out.advantage[idx] = carry;
        out.value_target[idx] = carry + batch.value[idx];
      }
    }
  }
  return out;
}

namespace {

void adam_step(Eigen::VectorXd& params, const Eigen::VectorXd& grad, AdamState& state,
               double lr) {
  constexpr double beta1 = 0.9;
  constexpr double beta2 = 0.999;
  constexpr double eps = 1e-8;
  if (state.m.size() != grad.size()) {
    state.m = Eigen::VectorXd::Zero(grad.size());
    state.v = Eigen::VectorXd::Zero(grad.size());
    state.step = 0;
  }
  state.step += 1;
  state.m = beta1 * state.m + (1.0 - beta1) * grad;
  state.v = beta2 * state.v + (1.0 - beta2) * grad.cwiseProduct(grad);
  const double bias1 = 1.0 - std::pow(beta1, static_cast<double>(state.step));
  const double bias2 = 1.0 - std::pow(beta2, static_cast<double>(state.step));
  params -=
      (lr / bias1) * state.m.cwiseQuotient(((state.v / bias2).cwiseSqrt().array() + eps).matrix());
}

}  // namespace

UpdateStats update_policy(const RolloutBatch& batch, policy::PolicyParams& params,
                          AdamState& adam, const policy::ArchitectureConfig& arch,
                          const TrainConfig& config, std::mt19937_64& rng) {
  UpdateStats stats;
  const auto snapshot = params;

  auto gae = compute_advantages(batch, config.discount, config.gae_lambda);
  {
    const double total = static_cast<double>(gae.advantage.size());
    double mean = std::accumulate(gae.advantage.begin(), gae.advantage.end(), 0.0) / total;
    double var = 0.0;
    for (double a : gae.advantage) var += (a - mean) * (a - mean);
    const double std_dev = std::sqrt(var / total);
    const double scale = std_dev > 1e-8 ? 1.0 / std_dev : 1.0;
    for (double& a : gae.advantage) a = (a - mean) * scale;
  }

  const int n_env_steps = batch.n_instances * batch.n_steps;
  std::vector<int> order(n_env_steps);
  std::iota(order.begin(), order.end(), 0);

  double kl_sum = 0.0, clip_sum = 0.0, pg_sum = 0.0, v_sum = 0.0;
  long long actor_samples = 0, critic_samples = 0;

  for (int epoch = 0; epoch < config.epochs_per_update; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    const int chunk = std::max(1, n_env_steps / config.minibatch_count);
    for (int start = 0; start < n_env_steps; start += chunk) {
      const int end = std::min(n_env_steps, start + chunk);
      auto grads = policy::GradientBuffer::zeros_like(params);
      const int mb_steps = end - start;
      const double actor_norm = 1.0 / static_cast<double>(mb_steps * batch.n_agents);
      const double critic_norm = 1.0 / static_cast<double>(mb_steps);
      double mb_loss = 0.0;

      for (int pos = start; pos < end; ++pos) {
        const int flat = order[pos];
        const int inst = flat / batch.n_steps;
        const int t = flat % batch.n_steps;

        if (config.critic == CriticKind::centralized) {
          std::vector<ObservationGraph> step_obs;
          step_obs.reserve(batch.n_agents);
          double target = 0.0;
          for (int a = 0; a < batch.n_agents; ++a) {
            step_obs.push_back(batch.obs[batch.index(inst, t, a)]);
            target += gae.value_target[batch.index(inst, t, a)];
          }
          target /= batch.n_agents;
          const double v = policy::critic_forward(step_obs, params, arch).value;
          mb_loss += 0.5 * config.value_coef * (v - target) * (v - target) * critic_norm;
          policy::critic_backward(step_obs, params, arch,
                                  config.value_coef * (v - target) * critic_norm, grads);
          v_sum += 0.5 * (v - target) * (v - target);
          critic_samples += 1;
        } else {
          for (int a = 0; a < batch.n_agents; ++a) {
            const int idx = batch.index(inst, t, a);
            const std::vector<ObservationGraph> solo{batch.obs[idx]};
            const double v = policy::critic_forward(solo, params, arch).value;
            const double target = gae.value_target[idx];
            mb_loss += 0.5 * config.value_coef * (v - target) * (v - target) * actor_norm;
            policy::critic_backward(solo, params, arch,
                                    config.value_coef * (v - target) * actor_norm, grads);
            v_sum += 0.5 * (v - target) * (v - target);
            critic_samples += 1;
          }
        }

        for (int a = 0; a < batch.n_agents; ++a) {
          const int idx = batch.index(inst, t, a);
          const auto fwd = policy::actor_forward(batch.obs[idx], params, arch,
                                                 policy::ForwardMode::deterministic);
          double lp_new = 0.0;
          {
            const Eigen::VectorXd& log_std = params.at("actor.log_std").values;
            for (int k = 0; k < batch.pre_squash[idx].size(); ++k) {
              const double z =
                  (batch.pre_squash[idx](k) - fwd.mean(k)) / std::exp(log_std(k));
              lp_new += -log_std(k) - 0.5 * 1.8378770664093453 - 0.5 * z * z;
            }
            lp_new -= policy::squash_log_det(batch.pre_squash[idx], arch);
          }
          const double log_ratio = lp_new - batch.log_prob[idx];
          const double ratio = std::exp(log_ratio);
          const double adv = gae.advantage[idx];
          const double unclipped = -ratio * adv;
          const double clipped =
              -std::clamp(ratio, 1.0 - config.clip_epsilon, 1.0 + config.clip_epsilon) * adv;
          const double pg = std::max(unclipped, clipped);
          mb_loss += pg * actor_norm;
          pg_sum += pg;
          kl_sum += (ratio - 1.0) - log_ratio;
          if (std::abs(ratio - 1.0) > config.clip_epsilon) clip_sum += 1.0;
          actor_samples += 1;

          // gradient flows only through the unclipped branch
          const double d_lp = (unclipped >= clipped) ? -adv * ratio : 0.0;
          Eigen::VectorXd d_mean, d_log_std;
          policy::log_prob_param_grads(batch.pre_squash[idx], fwd.mean,
                                       params.at("actor.log_std").values, d_lp * actor_norm,
                                       d_mean, d_log_std);
          d_log_std.array() -= config.entropy_coef * actor_norm;
          policy::actor_backward(batch.obs[idx], params, arch, d_mean, d_log_std, grads);
        }
      }

      Eigen::VectorXd flat_grad = grads.flatten();
      if (!std::isfinite(mb_loss) || !flat_grad.allFinite()) {
        params = snapshot;
        stats.aborted_non_finite = true;
        return stats;
      }
      const double norm = flat_grad.norm();
      stats.grad_norm = norm;
      if (norm > config.max_grad_norm && norm > 0.0) {
        flat_grad *= config.max_grad_norm / norm;
      }
      Eigen::VectorXd flat_params = params.flatten();
      adam_step(flat_params, flat_grad, adam, config.learning_rate);
      params.unflatten(flat_params);
      if (!params.all_finite()) {
        params = snapshot;
        stats.aborted_non_finite = true;
        return stats;
      }
    }
  }

  if (actor_samples > 0) {
    stats.policy_loss = pg_sum / static_cast<double>(actor_samples);
    stats.mean_kl = kl_sum / static_cast<double>(actor_samples);
    stats.clip_fraction = clip_sum / static_cast<double>(actor_samples);
  }
  if (critic_samples > 0) stats.value_loss = v_sum / static_cast<double>(critic_samples);
  stats.entropy = policy::policy_entropy(params);
  return stats;
}

namespace {

// Deterministic-actor rollouts for periodic progress tracking.
double quick_eval(const env::EnvConfig& env_config, const policy::PolicyParams& params,
                  const policy::ArchitectureConfig& arch, const TrainConfig& config,
                  int episodes, std::uint64_t seed) {
  double total_reward = 0.0;
  long long steps = 0;
  for (int ep = 0; ep < episodes; ++ep) {
    env::EnvConfig cfg = env_config;
    cfg.seed = splitmix64(seed + 0xE7A1 + static_cast<std::uint64_t>(ep));
    env::WorldState state = env::reset(cfg);
    const auto spec = cfg.scenario_spec();
    bool done = false;
    while (!done) {
      const auto graphs = env::observe_all(state, cfg);
      std::vector<qcqp::ConvexProgram> programs;
      std::vector<int> slots;
      std::vector<Vec2> controls(cfg.n_agents, Vec2::Zero());
      for (int a = 0; a < cfg.n_agents; ++a) {
        const auto out =
            policy::actor_forward(graphs[a], params, arch, policy::ForwardMode::deterministic);
        if (auto program =
                build_mode_program(config.mode, graphs[a], spec, out.action, config.lambda0)) {
          programs.push_back(std::move(*program));
          slots.push_back(a);
        } else {
          controls[a] = Vec2(out.action(0), out.action(1));
        }
      }
      if (!programs.empty()) {
        const auto results = qcqp::batch_solve(programs);
        for (size_t k = 0; k < results.size(); ++k) {
          controls[slots[k]] = results[k].status == qcqp::SolveStatus::optimal
                                   ? results[k].control
                                   : Vec2::Zero();
        }
      }
      auto [next, result] = env::step(state, controls, cfg);
      state = std::move(next);
      for (double r : result.rewards) total_reward += r;
      steps += cfg.n_agents;
      done = result.done;
    }
  }
  return steps > 0 ? total_reward / static_cast<double>(steps) : 0.0;
}

}  // namespace

TrainResult train(const env::EnvConfig& env_config, const TrainConfig& config,
                  const TrainCallback& callback) {
  config.validate();
  env_config.validate();

  TrainResult result;
  result.arch = make_arch(env_config, config.mode);
  result.params = policy::init_params(result.arch, splitmix64(config.seed ^ 0xA5A5A5A5ULL));

  std::mt19937_64 rng(splitmix64(config.seed));
  auto instances = make_instances(env_config, config.n_env_instances, config.seed);
  AdamState adam;

  long long env_steps = 0;
  int update_index = 0;
  while (env_steps < config.total_env_steps) {
    auto batch = collect_rollouts(instances, result.params, result.arch, config, rng);
    env_steps += batch.env_steps;
    result.collision_events_solver_optimal += batch.collision_events_solver_optimal;

    const auto stats = update_policy(batch, result.params, adam, result.arch, config, rng);
    update_index += 1;

    TrainEvent event;
    event.env_steps = env_steps;
    event.update_index = update_index;
    event.stats = stats;
    event.solver_fallbacks = batch.solver_fallbacks;
    event.collision_events = batch.collision_events;
    event.collision_events_solver_optimal = batch.collision_events_solver_optimal;
    {
      double sum = 0.0;
      for (double r : batch.reward) sum += r;
      event.mean_reward = sum / static_cast<double>(batch.reward.size());
      event.mean_collision_penalty =
          batch.collision_penalty_sum / static_cast<double>(batch.agent_steps);
    }
    if (config.mode == Mode::recode || config.mode == Mode::ablation_both) {
      double b_sum = 0.0;
      for (const auto& a : batch.action) b_sum += a(2);
      event.mean_b = b_sum / static_cast<double>(batch.action.size());
    } else {
      event.mean_b = std::numeric_limits<double>::quiet_NaN();
    }
    if (config.eval_every_updates > 0 && update_index % config.eval_every_updates == 0) {
      event.eval_mean_reward = quick_eval(env_config, result.params, result.arch, config,
                                          config.eval_episodes, config.seed + update_index);
    }
    result.events.push_back(event);
    if (callback) callback(event);
  }
  result.total_env_steps = env_steps;
  return result;
}

}  // namespace recode::training
