#pragma once

#include "recode/controllers.hpp"
#include "recode/env.hpp"
#include "recode/policy.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace recode::training {

enum class Mode {
  recode,
  recode_linear,
  pure_marl,
  shielding,
  online_cbf,
  ablation_objective,
  ablation_both
};

std::string to_string(Mode mode);
std::optional<Mode> mode_from_string(const std::string& name);
bool mode_uses_solver(Mode mode);
policy::PolicyHead head_for_mode(Mode mode);

enum class CriticKind { centralized, local };

struct TrainConfig {
  int n_env_instances = 8;  // parallel environment copies per collect
  int rollout_length = 128;
  long long total_env_steps = 200000;
  double discount = 0.99;
  double gae_lambda = 0.95;
  double clip_epsilon = 0.2;
  double learning_rate = 3e-4;
  int minibatch_count = 4;
  int epochs_per_update = 4;
  double lambda0 = 1e3;
  double value_coef = 0.5;
  double entropy_coef = 0.003;
  double max_grad_norm = 0.5;
  Mode mode = Mode::recode;
  CriticKind critic = CriticKind::centralized;
  std::uint64_t seed = 0;
  int eval_every_updates = 0;  // 0 disables periodic evaluation
  int eval_episodes = 8;

  void validate() const;
};

/// The per-agent program for a controller mode given the policy action.
/// pure_marl returns nothing (the action is the control).
std::optional<qcqp::ConvexProgram> build_mode_program(Mode mode, const ObservationGraph& obs,
                                                      const controllers::ScenarioSpec& spec,
                                                      const Eigen::VectorXd& action,
                                                      double lambda0);

controllers::ThetaParams theta_from_action(const Eigen::VectorXd& action);

/// Flattened (instance, step, agent) rollout storage.
struct RolloutBatch {
  int n_instances = 0;
  int n_steps = 0;
  int n_agents = 0;

  std::vector<ObservationGraph> obs;
  std::vector<Eigen::VectorXd> pre_squash;
  std::vector<Eigen::VectorXd> action;
  std::vector<double> log_prob;
  std::vector<Vec2> control;
  std::vector<std::vector<double>> slack_values;
  std::vector<double> reward;
  std::vector<double> value;       // per (instance, step, agent)
  std::vector<std::uint8_t> done;  // per (instance, step)
  // bootstrap value V(s_next) per agent-step; set at episode truncations and
  // at the final collected step, NaN elsewhere
  std::vector<double> truncation_value;

  long long solver_calls = 0;
  long long solver_fallbacks = 0;  // u = 0 substitutions
  long long collision_events = 0;
  long long collision_events_solver_optimal = 0;  // collisions on all-optimal steps
  double collision_penalty_sum = 0.0;
  long long env_steps = 0;        // instances × steps
  long long agent_steps = 0;

  int index(int instance, int t, int agent) const {
    return (instance * n_steps + t) * n_agents + agent;
  }
  int step_index(int instance, int t) const { return instance * n_steps + t; }
};

struct EnvInstance {
  env::EnvConfig config;
  env::WorldState state;
  long long episode_counter = 0;
};

std::vector<EnvInstance> make_instances(const env::EnvConfig& base, int n_instances,
                                        std::uint64_t seed);

/// One synchronized rollout across all instances: observe, act, assemble one
/// batched program over every (instance, agent), solve, step. A solver
/// numerical failure substitutes the always-feasible u = 0 and is recorded.
RolloutBatch collect_rollouts(std::vector<EnvInstance>& instances,
                              const policy::PolicyParams& params,
                              const policy::ArchitectureConfig& arch, const TrainConfig& config,
                              std::mt19937_64& rng);

struct InfeasibilityEntry {
  int instance = 0;
  int step = 0;
  int agent = 0;
  int constraint_index = 0;
  double slack = 0.0;
};
using InfeasibilityReport = std::vector<InfeasibilityEntry>;

/// Entries exactly where a learned-constraint slack exceeds 1e-6. Hard
/// infeasibility is a solver status, never a slack, so it cannot appear here.
InfeasibilityReport flag_infeasible(const RolloutBatch& batch, double slack_threshold = 1e-6);

struct AdvantageResult {
  std::vector<double> advantage;  // aligned with batch agent-steps
  std::vector<double> value_target;
};

/// Generalized advantage estimation with bootstrap at non-terminal truncation.
AdvantageResult compute_advantages(const RolloutBatch& batch, double discount,
                                   double gae_lambda);

struct AdamState {
  Eigen::VectorXd m;
  Eigen::VectorXd v;
  long long step = 0;
};

struct UpdateStats {
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  double mean_kl = 0.0;
  double clip_fraction = 0.0;
  double grad_norm = 0.0;
  bool aborted_non_finite = false;
};

/// Clipped-surrogate actor update + value regression + entropy bonus over
/// shuffled env-step minibatches. A non-finite loss aborts the update and
/// keeps the previous parameters.
UpdateStats update_policy(const RolloutBatch& batch, policy::PolicyParams& params,
                          AdamState& adam, const policy::ArchitectureConfig& arch,
                          const TrainConfig& config, std::mt19937_64& rng);

struct TrainEvent {
  long long env_steps = 0;
  int update_index = 0;
  UpdateStats stats;
  double mean_reward = 0.0;                  // batch mean per agent-step
  double mean_b = 0.0;                       // mean learned radius (NaN when n/a)
  long long solver_fallbacks = 0;
  long long collision_events = 0;
  long long collision_events_solver_optimal = 0;
  double mean_collision_penalty = 0.0;       // per agent-step
  double eval_mean_reward = std::numeric_limits<double>::quiet_NaN();
};

struct TrainResult {
  policy::PolicyParams params;
  policy::ArchitectureConfig arch;
  std::vector<TrainEvent> events;
  long long total_env_steps = 0;
  long long collision_events_solver_optimal = 0;
};

using TrainCallback = std::function<void(const TrainEvent&)>;

/// Alternates collect/update until total_env_steps; periodic deterministic
/// evaluation is reported through the events. Deterministic given
/// (env_config, train_config) seeds.
TrainResult train(const env::EnvConfig& env_config, const TrainConfig& config,
                  const TrainCallback& callback = nullptr);

policy::ArchitectureConfig make_arch(const env::EnvConfig& env_config, Mode mode);

}  // namespace recode::training
