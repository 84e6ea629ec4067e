#pragma once

#include "recode/observation.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace recode::policy {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Which quantity the actor head emits.
enum class PolicyHead {
  recode,            // theta = (a, b): 3 outputs
  recode_linear,     // half-plane (angle, offset): 2 outputs
  raw_action,        // velocity in the M-ball: 2 outputs (pure MARL, shielding)
  cbf_gain,          // scalar gain in [k_min, k_max]
  objective_offset,  // learned goal offset: 2 outputs
  recode_and_offset  // theta + goal offset: 5 outputs
};

struct ArchitectureConfig {
  int self_dim = 14;
  int edge_dim = 5;
  int embed_width = 64;
  int attn_width = 64;
  int decoder_hidden = 128;
  PolicyHead head = PolicyHead::recode;
  double max_speed = 0.5;       // a_max = M, b_max = 2M
  double goal_offset_max = 0.5;
  double feature_scale = 3.2;   // positions are divided by this before encoding
  double gain_min = 0.1;
  double gain_max = 10.0;

  int action_dim() const;
  std::string digest_string() const;
  std::uint64_t digest() const;  // FNV-1a over digest_string()
};

struct NamedTensor {
  std::string name;
  std::vector<int> shape;
  VectorXd values;

  int rows() const { return shape.empty() ? 0 : shape[0]; }
  int cols() const { return shape.size() > 1 ? shape[1] : 1; }
  Eigen::Map<MatrixXd> matrix() { return {values.data(), rows(), cols()}; }
  Eigen::Map<const MatrixXd> matrix() const { return {values.data(), rows(), cols()}; }
};

/// Flat trainable parameter store: named tensors concatenable to one vector.
struct PolicyParams {
  std::vector<NamedTensor> tensors;
  std::string version = "1";

  NamedTensor& at(const std::string& name);
  const NamedTensor& at(const std::string& name) const;
  int flat_size() const;
  VectorXd flatten() const;
  void unflatten(const VectorXd& flat);
  bool all_finite() const;
};

/// Same tensor layout as the params it mirrors; accumulates gradients.
struct GradientBuffer {
  std::vector<NamedTensor> tensors;

  static GradientBuffer zeros_like(const PolicyParams& params);
  NamedTensor& at(const std::string& name);
  VectorXd flatten() const;
  void scale(double s);
};

enum class ForwardMode { deterministic, sample, with_logprob };

struct ActorOutput {
  VectorXd mean;        // pre-squash decoder output
  VectorXd log_std;     // state-independent, learned
  VectorXd pre_squash;  // the (possibly sampled) pre-squash action
  VectorXd action;      // squashed into the head's range
  double log_prob = 0.0;
};

struct CriticOutput {
  double value = 0.0;
};

/// Deterministic scaled fan-in initialization; log_std starts at log(0.3) and
/// the b head is biased so the initial radius sits near b_max/4.
PolicyParams init_params(const ArchitectureConfig& config, std::uint64_t seed);

/// One attention-weighted message-passing layer over the ego's neighbor
/// edges, then the decoder MLP. sample mode draws pre-squash noise from rng.
ActorOutput actor_forward(const ObservationGraph& obs, const PolicyParams& params,
                          const ArchitectureConfig& config, ForwardMode mode,
                          std::mt19937_64* rng = nullptr);

/// Log-prob of a stored pre-squash action under the current parameters,
/// including the squash correction.
double actor_log_prob(const ObservationGraph& obs, const PolicyParams& params,
                      const ArchitectureConfig& config, const VectorXd& pre_squash);

/// Centralized value: shared trunk over the full graph, mean-pooled, decoded.
CriticOutput critic_forward(const std::vector<ObservationGraph>& all_obs,
                            const PolicyParams& params, const ArchitectureConfig& config);

/// Squash maps (shared with the training loop).
VectorXd squash_action(const VectorXd& pre_squash, const ArchitectureConfig& config);
double squash_log_det(const VectorXd& pre_squash, const ArchitectureConfig& config);
/// Base-Gaussian entropy (the usual surrogate for squashed policies).
double policy_entropy(const PolicyParams& params);

// ---------------------------------------------------------------------------
// Reverse-mode gradients. The building blocks below backpropagate through the
// actor/critic computation; `grad` wires them into the spec'd probe losses.
// ---------------------------------------------------------------------------

/// d/dparams of actor outputs: callers provide dL/dmean and dL/dlog_std.
void actor_backward(const ObservationGraph& obs, const PolicyParams& params,
                    const ArchitectureConfig& config, const VectorXd& d_mean,
                    const VectorXd& d_log_std, GradientBuffer& grads);

/// d/dparams of the critic value: callers provide dL/dvalue.
void critic_backward(const std::vector<ObservationGraph>& all_obs, const PolicyParams& params,
                     const ArchitectureConfig& config, double d_value, GradientBuffer& grads);

/// One rollout sample for the actor-critic probe loss.
struct GradSample {
  std::vector<ObservationGraph> all_obs;     // one environment instance
  std::vector<VectorXd> pre_squash;          // stored per-agent pre-squash actions
  std::vector<double> advantage;             // per agent
  double value_target = 0.0;
};

enum class LossSpec { constant, quadratic_probe, actor_critic };

/// Loss value for a spec; actor_critic is
///   sum_s [ -sum_i adv_i·logprob_i + 0.5·(V - target)^2 - 0.01·entropy ].
double loss_value(LossSpec spec, const std::vector<GradSample>& batch,
                  const PolicyParams& params, const ArchitectureConfig& config);

/// Reverse-mode gradient of loss_value; matches central finite differences.
GradientBuffer grad(LossSpec spec, const std::vector<GradSample>& batch,
                    const PolicyParams& params, const ArchitectureConfig& config);

/// dL/dmean and dL/dlog_std of a Gaussian log-prob at a stored pre-squash
/// point (the squash correction is constant in the parameters).
void log_prob_param_grads(const VectorXd& pre_squash, const VectorXd& mean,
                          const VectorXd& log_std, double upstream, VectorXd& d_mean,
                          VectorXd& d_log_std);

}  // namespace recode::policy
