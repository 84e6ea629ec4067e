#pragma once

#include "recode/baselines.hpp"
#include "recode/diagnostics.hpp"
#include "recode/env.hpp"
#include "recode/metrics.hpp"
#include "recode/policy.hpp"
#include "recode/training.hpp"

#include <optional>
#include <string>

namespace recode::eval {

/// Everything the evaluation campaigns can drive: the trained modes plus the
/// two non-learning controllers.
enum class Controller {
  handcrafted,
  rvo,
  recode,
  recode_linear,
  pure_marl,
  shielding,
  online_cbf,
  ablation_objective,
  ablation_both
};

std::string to_string(Controller controller);
std::optional<Controller> controller_from_string(const std::string& name);
std::optional<training::Mode> mode_of(Controller controller);  // empty for non-learning
bool needs_checkpoint(Controller controller);

struct EpisodeRecord {
  int episode = 0;
  double mean_reward_per_step = 0.0;  // mean over agent-steps
  long long collisions = 0;
  long long out_of_bounds = 0;
  long long link_breaks = 0;
  bool success = false;
  double mean_b = std::numeric_limits<double>::quiet_NaN();
  int steps = 0;
};

struct EvalSummary {
  int n_episodes = 0;
  double mean_reward = 0.0;  // mean of per-episode means
  double std_reward = 0.0;
  long long collisions = 0;
  long long out_of_bounds = 0;
  long long link_breaks = 0;
  double success_rate = 0.0;
  double mean_b = std::numeric_limits<double>::quiet_NaN();
};

struct EvalOutput {
  EvalSummary summary;
  std::vector<EpisodeRecord> episodes;
  std::vector<diagnostics::BSample> b_samples;  // populated for ball-augmented modes
};

struct EvalOptions {
  int n_episodes = 75;
  std::uint64_t seed = 0;
  double lambda0 = 1e3;
  std::string run_id = "eval";
  metrics::JsonlWriter* writer = nullptr;      // per-episode records
  metrics::JsonlWriter* step_writer = nullptr; // per-agent-step diagnostics records
};

/// Deterministic-actor evaluation; aggregates per-episode means. Throws when
/// n_episodes < 1 or a trained controller is missing its parameters.
EvalOutput run_eval(Controller controller, const policy::PolicyParams* params,
                    const policy::ArchitectureConfig* arch, const env::EnvConfig& config,
                    const EvalOptions& options);

EvalSummary summarize(const std::vector<EpisodeRecord>& episodes);

/// Re-aggregates a persisted per-episode stream; equals the live summary.
EvalSummary summary_from_stream(const std::string& jsonl_path);

}  // namespace recode::eval
