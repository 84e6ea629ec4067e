#include "recode/policy.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace recode::policy {

namespace {

constexpr double kLogTwoPi = 1.8378770664093453;

int head_dim(PolicyHead head) {
  switch (head) {
    case PolicyHead::recode: return 3;
    case PolicyHead::recode_linear: return 2;
    case PolicyHead::raw_action: return 2;
    case PolicyHead::cbf_gain: return 1;
    case PolicyHead::objective_offset: return 2;
    case PolicyHead::recode_and_offset: return 5;
  }
  return 0;
}

const char* head_name(PolicyHead head) {
  switch (head) {
    case PolicyHead::recode: return "recode";
    case PolicyHead::recode_linear: return "recode_linear";
    case PolicyHead::raw_action: return "raw_action";
    case PolicyHead::cbf_gain: return "cbf_gain";
    case PolicyHead::objective_offset: return "objective_offset";
    case PolicyHead::recode_and_offset: return "recode_and_offset";
  }
  return "?";
}

}  // namespace

int ArchitectureConfig::action_dim() const { return head_dim(head); }

std::string ArchitectureConfig::digest_string() const {
  std::ostringstream os;
  os << "self_dim=" << self_dim << ";edge_dim=" << edge_dim << ";embed=" << embed_width
     << ";attn=" << attn_width << ";decoder=" << decoder_hidden << ";head=" << head_name(head)
     << ";max_speed=" << max_speed << ";goal_offset_max=" << goal_offset_max
     << ";feature_scale=" << feature_scale << ";gain=[" << gain_min << "," << gain_max << "]";
  return os.str();
}

std::uint64_t ArchitectureConfig::digest() const {
  const std::string s = digest_string();
  std::uint64_t hash = 1469598103934665603ULL;
  for (unsigned char c : s) {
    hash ^= c;
    hash *= 1099511628211ULL;
  }
  return hash;
}

NamedTensor& PolicyParams::at(const std::string& name) {
  for (auto& t : tensors) {
    if (t.name == name) return t;
  }
  throw std::invalid_argument("PolicyParams: unknown tensor " + name);
}

const NamedTensor& PolicyParams::at(const std::string& name) const {
  for (const auto& t : tensors) {
    if (t.name == name) return t;
  }
  throw std::invalid_argument("PolicyParams: unknown tensor " + name);
}

int PolicyParams::flat_size() const {
  int n = 0;
  for (const auto& t : tensors) n += static_cast<int>(t.values.size());
  return n;
}

VectorXd PolicyParams::flatten() const {
  VectorXd flat(flat_size());
  int offset = 0;
  for (const auto& t : tensors) {
    flat.segment(offset, t.values.size()) = t.values;
    offset += static_cast<int>(t.values.size());
  }
  return flat;
}

void PolicyParams::unflatten(const VectorXd& flat) {
  if (flat.size() != flat_size()) throw std::invalid_argument("unflatten: size mismatch");
  int offset = 0;
  for (auto& t : tensors) {
    t.values = flat.segment(offset, t.values.size());
    offset += static_cast<int>(t.values.size());
  }
}

bool PolicyParams::all_finite() const {
  for (const auto& t : tensors) {
    if (!t.values.allFinite()) return false;
  }
  return true;
}

GradientBuffer GradientBuffer::zeros_like(const PolicyParams& params) {
  GradientBuffer g;
  g.tensors.reserve(params.tensors.size());
  for (const auto& t : params.tensors) {
    NamedTensor z;
    z.name = t.name;
    z.shape = t.shape;
    z.values = VectorXd::Zero(t.values.size());
    g.tensors.push_back(std::move(z));
  }
  return g;
}

NamedTensor& GradientBuffer::at(const std::string& name) {
  for (auto& t : tensors) {
    if (t.name == name) return t;
  }
  throw std::invalid_argument("GradientBuffer: unknown tensor " + name);
}

VectorXd GradientBuffer::flatten() const {
  int n = 0;
  for (const auto& t : tensors) n += static_cast<int>(t.values.size());
  VectorXd flat(n);
  int offset = 0;
  for (const auto& t : tensors) {
    flat.segment(offset, t.values.size()) = t.values;
    offset += static_cast<int>(t.values.size());
  }
  return flat;
}

void GradientBuffer::scale(double s) {
  for (auto& t : tensors) t.values *= s;
}

// ---------------------------------------------------------------------------
// featurization
// ---------------------------------------------------------------------------

namespace {

VectorXd self_features(const ObservationGraph& obs, const ArchitectureConfig& cfg) {
  const double L = cfg.feature_scale;
  VectorXd x = VectorXd::Zero(cfg.self_dim);
  x(0) = obs.position.x() / L;
  x(1) = obs.position.y() / L;
  x(2) = obs.goal_displacement.x() / L;
  x(3) = obs.goal_displacement.y() / L;
  x.segment<4>(4) = obs.bounds_distances / L;
  std::vector<ObstacleFace> faces = obs.obstacle_faces;
  std::stable_sort(
      faces.begin(), faces.end(),
      [](const ObstacleFace& a, const ObstacleFace& b) { return a.clearance < b.clearance; });
  for (size_t k = 0; k < faces.size() && k < 2; ++k) {
    const int base = 8 + 3 * static_cast<int>(k);
    x(base) = faces[k].normal.x();
    x(base + 1) = faces[k].normal.y();
    x(base + 2) = faces[k].clearance / L;
  }
  return x;
}

VectorXd edge_features(const EdgeFeature& edge, const ArchitectureConfig& cfg) {
  const double L = cfg.feature_scale;
  VectorXd x = VectorXd::Zero(cfg.edge_dim);
  x(0) = edge.rel_position.x() / L;
  x(1) = edge.rel_position.y() / L;
  x(2) = edge.rel_goal.x() / L;
  x(3) = edge.rel_goal.y() / L;
  x(4) = edge.same_team;
  return x;
}

// ---------------------------------------------------------------------------
// message-passing trunk
// ---------------------------------------------------------------------------

struct EdgeCache {
  VectorXd x;   // features
  VectorXd m;   // encoded message
  VectorXd q;   // attention hidden
  double score = 0.0;
};

struct TrunkCache {
  VectorXd xs;  // self features
  VectorXd e;   // self embedding
  std::vector<EdgeCache> edges;
  VectorXd alpha;
  VectorXd agg;
  VectorXd h;
};

TrunkCache trunk_forward(const std::string& prefix, const ObservationGraph& obs,
                         const PolicyParams& params, const ArchitectureConfig& cfg) {
  TrunkCache c;
  c.xs = self_features(obs, cfg);
  c.e = (params.at(prefix + "enc_self.W").matrix() * c.xs +
         params.at(prefix + "enc_self.b").values)
            .array()
            .tanh();

  const auto& enc_edge_W = params.at(prefix + "enc_edge.W");
  const auto& enc_edge_b = params.at(prefix + "enc_edge.b");
  const auto& att_edge_W = params.at(prefix + "att_edge.W");
  const auto& att_v = params.at(prefix + "att.v");

  const int n_edges = static_cast<int>(obs.neighbor_edges.size());
  c.edges.resize(n_edges);
  VectorXd scores(n_edges);
  const VectorXd att_self_term =
      params.at(prefix + "att_self.W").matrix() * c.e + params.at(prefix + "att.b").values;
  for (int j = 0; j < n_edges; ++j) {
    EdgeCache& ec = c.edges[j];
    ec.x = edge_features(obs.neighbor_edges[j], cfg);
    ec.m = (enc_edge_W.matrix() * ec.x + enc_edge_b.values).array().tanh();
    ec.q = (att_self_term + att_edge_W.matrix() * ec.m).array().tanh();
    ec.score = att_v.values.dot(ec.q);
    scores(j) = ec.score;
  }

  c.agg = VectorXd::Zero(cfg.embed_width);
  if (n_edges > 0) {
    const double max_score = scores.maxCoeff();
    c.alpha = (scores.array() - max_score).exp();
    c.alpha /= c.alpha.sum();
    for (int j = 0; j < n_edges; ++j) c.agg += c.alpha(j) * c.edges[j].m;
  }

  c.h = (params.at(prefix + "comb_self.W").matrix() * c.e +
         params.at(prefix + "comb_agg.W").matrix() * c.agg + params.at(prefix + "comb.b").values)
            .array()
            .tanh();
  return c;
}

void trunk_backward(const std::string& prefix, const TrunkCache& c, const PolicyParams& params,
                    const VectorXd& dh, GradientBuffer& grads) {
  const VectorXd dzc = dh.array() * (1.0 - c.h.array().square());
  grads.at(prefix + "comb_self.W").matrix() += dzc * c.e.transpose();
  grads.at(prefix + "comb_agg.W").matrix() += dzc * c.agg.transpose();
  grads.at(prefix + "comb.b").values += dzc;
  VectorXd de = params.at(prefix + "comb_self.W").matrix().transpose() * dzc;
  const VectorXd dagg = params.at(prefix + "comb_agg.W").matrix().transpose() * dzc;

  const int n_edges = static_cast<int>(c.edges.size());
  if (n_edges > 0) {
    const auto& att_self_W = params.at(prefix + "att_self.W");
    const auto& att_edge_W = params.at(prefix + "att_edge.W");
    const auto& att_v = params.at(prefix + "att.v");

    VectorXd dalpha(n_edges);
    std::vector<VectorXd> dm(n_edges);
    for (int j = 0; j < n_edges; ++j) {
      dalpha(j) = c.edges[j].m.dot(dagg);
      dm[j] = c.alpha(j) * dagg;
    }
    const double mix = c.alpha.dot(dalpha);
    const VectorXd dscore = c.alpha.array() * (dalpha.array() - mix);

    for (int j = 0; j < n_edges; ++j) {
      const EdgeCache& ec = c.edges[j];
      grads.at(prefix + "att.v").values += dscore(j) * ec.q;
      const VectorXd dq = dscore(j) * att_v.values;
      const VectorXd dzq = dq.array() * (1.0 - ec.q.array().square());
      grads.at(prefix + "att_self.W").matrix() += dzq * c.e.transpose();
      grads.at(prefix + "att_edge.W").matrix() += dzq * ec.m.transpose();
      grads.at(prefix + "att.b").values += dzq;
      de += att_self_W.matrix().transpose() * dzq;
      dm[j] += att_edge_W.matrix().transpose() * dzq;

      const VectorXd dzm = dm[j].array() * (1.0 - ec.m.array().square());
      grads.at(prefix + "enc_edge.W").matrix() += dzm * ec.x.transpose();
      grads.at(prefix + "enc_edge.b").values += dzm;
    }
  }

  const VectorXd dzs = de.array() * (1.0 - c.e.array().square());
  grads.at(prefix + "enc_self.W").matrix() += dzs * c.xs.transpose();
  grads.at(prefix + "enc_self.b").values += dzs;
}

struct DecoderCache {
  VectorXd h;
  VectorXd d1;
  VectorXd out;
};

DecoderCache decoder_forward(const std::string& prefix, const VectorXd& h,
                             const PolicyParams& params) {
  DecoderCache c;
  c.h = h;
  c.d1 = (params.at(prefix + "dec1.W").matrix() * h + params.at(prefix + "dec1.b").values)
             .array()
             .tanh();
  c.out = params.at(prefix + "dec2.W").matrix() * c.d1 + params.at(prefix + "dec2.b").values;
  return c;
}

// returns dL/dh
VectorXd decoder_backward(const std::string& prefix, const DecoderCache& c,
                          const PolicyParams& params, const VectorXd& dout,
                          GradientBuffer& grads) {
  grads.at(prefix + "dec2.W").matrix() += dout * c.d1.transpose();
  grads.at(prefix + "dec2.b").values += dout;
  const VectorXd dd1 = params.at(prefix + "dec2.W").matrix().transpose() * dout;
  const VectorXd dz1 = dd1.array() * (1.0 - c.d1.array().square());
  grads.at(prefix + "dec1.W").matrix() += dz1 * c.h.transpose();
  grads.at(prefix + "dec1.b").values += dz1;
  return params.at(prefix + "dec1.W").matrix().transpose() * dz1;
}

// ---------------------------------------------------------------------------
// squashing
// ---------------------------------------------------------------------------

// radial map scale·tanh(r)/r · v, a bijection of R² onto the open scale-ball
Eigen::Vector2d radial_squash(const Eigen::Vector2d& v, double scale) {
  const double r = v.norm();
  if (r < 1e-12) return scale * v;
  return (scale * std::tanh(r) / r) * v;
}

double radial_log_det(const Eigen::Vector2d& v, double scale) {
  const double r = v.norm();
  const double th = std::tanh(r);
  const double log_ratio = r < 1e-4 ? std::log1p(-r * r / 3.0) : std::log(th / r);
  return 2.0 * std::log(scale) + std::log1p(-th * th) + log_ratio;
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

VectorXd squash_action(const VectorXd& v, const ArchitectureConfig& cfg) {
  VectorXd a(v.size());
  switch (cfg.head) {
    case PolicyHead::recode: {
      a.head<2>() = radial_squash(v.head<2>(), cfg.max_speed);
      a(2) = 2.0 * cfg.max_speed * sigmoid(v(2));
      break;
    }
    case PolicyHead::recode_linear: {
      a(0) = M_PI * std::tanh(v(0));
      a(1) = cfg.max_speed * std::tanh(v(1));
      break;
    }
    case PolicyHead::raw_action: {
      a = radial_squash(v.head<2>(), cfg.max_speed);
      break;
    }
    case PolicyHead::cbf_gain: {
      a(0) = cfg.gain_min + (cfg.gain_max - cfg.gain_min) * sigmoid(v(0));
      break;
    }
    case PolicyHead::objective_offset: {
      a = radial_squash(v.head<2>(), cfg.goal_offset_max);
      break;
    }
    case PolicyHead::recode_and_offset: {
      a.head<2>() = radial_squash(v.head<2>(), cfg.max_speed);
      a(2) = 2.0 * cfg.max_speed * sigmoid(v(2));
      a.tail<2>() = radial_squash(Eigen::Vector2d(v(3), v(4)), cfg.goal_offset_max);
      break;
    }
  }
  return a;
}

double squash_log_det(const VectorXd& v, const ArchitectureConfig& cfg) {
  auto sigmoid_log_det = [](double x, double scale) {
    const double s = sigmoid(x);
    return std::log(scale) + std::log(s) + std::log1p(-s);
  };
  auto tanh_log_det = [](double x, double scale) {
    const double t = std::tanh(x);
    return std::log(scale) + std::log1p(-t * t);
  };
  switch (cfg.head) {
    case PolicyHead::recode:
      return radial_log_det(v.head<2>(), cfg.max_speed) +
             sigmoid_log_det(v(2), 2.0 * cfg.max_speed);
    case PolicyHead::recode_linear:
      return tanh_log_det(v(0), M_PI) + tanh_log_det(v(1), cfg.max_speed);
    case PolicyHead::raw_action:
      return radial_log_det(v.head<2>(), cfg.max_speed);
    case PolicyHead::cbf_gain:
      return sigmoid_log_det(v(0), cfg.gain_max - cfg.gain_min);
    case PolicyHead::objective_offset:
      return radial_log_det(v.head<2>(), cfg.goal_offset_max);
    case PolicyHead::recode_and_offset:
      return radial_log_det(v.head<2>(), cfg.max_speed) +
             sigmoid_log_det(v(2), 2.0 * cfg.max_speed) +
             radial_log_det(Eigen::Vector2d(v(3), v(4)), cfg.goal_offset_max);
  }
  return 0.0;
}

double policy_entropy(const PolicyParams& params) {
  const auto& log_std = params.at("actor.log_std");
  return log_std.values.sum() +
         0.5 * static_cast<double>(log_std.values.size()) * (kLogTwoPi + 1.0);
}

// ---------------------------------------------------------------------------
// forward passes
// ---------------------------------------------------------------------------

ActorOutput actor_forward(const ObservationGraph& obs, const PolicyParams& params,
                          const ArchitectureConfig& cfg, ForwardMode mode, std::mt19937_64* rng) {
  const TrunkCache trunk = trunk_forward("actor.", obs, params, cfg);
  const DecoderCache dec = decoder_forward("actor.", trunk.h, params);

  ActorOutput out;
  out.mean = dec.out;
  out.log_std = params.at("actor.log_std").values;
  if (mode == ForwardMode::deterministic) {
    out.pre_squash = out.mean;
  } else {
    if (rng == nullptr) throw std::invalid_argument("actor_forward: sampling needs an rng");
    std::normal_distribution<double> gauss(0.0, 1.0);
    out.pre_squash = out.mean;
    for (int i = 0; i < out.pre_squash.size(); ++i) {
      out.pre_squash(i) += std::exp(out.log_std(i)) * gauss(*rng);
    }
  }
  out.action = squash_action(out.pre_squash, cfg);
  if (mode != ForwardMode::deterministic) {
    double lp = 0.0;
    for (int i = 0; i < out.pre_squash.size(); ++i) {
      const double z = (out.pre_squash(i) - out.mean(i)) / std::exp(out.log_std(i));
      lp += -out.log_std(i) - 0.5 * kLogTwoPi - 0.5 * z * z;
    }
    out.log_prob = lp - squash_log_det(out.pre_squash, cfg);
  }
  return out;
}

double actor_log_prob(const ObservationGraph& obs, const PolicyParams& params,
                      const ArchitectureConfig& cfg, const VectorXd& pre_squash) {
  const TrunkCache trunk = trunk_forward("actor.", obs, params, cfg);
  const DecoderCache dec = decoder_forward("actor.", trunk.h, params);
  const VectorXd& log_std = params.at("actor.log_std").values;
  double lp = 0.0;
  for (int i = 0; i < pre_squash.size(); ++i) {
    const double z = (pre_squash(i) - dec.out(i)) / std::exp(log_std(i));
    lp += -log_std(i) - 0.5 * kLogTwoPi - 0.5 * z * z;
  }
  return lp - squash_log_det(pre_squash, cfg);
}

CriticOutput critic_forward(const std::vector<ObservationGraph>& all_obs,
                            const PolicyParams& params, const ArchitectureConfig& cfg) {
  if (all_obs.empty()) throw std::invalid_argument("critic_forward: empty observation set");
  VectorXd pooled = VectorXd::Zero(cfg.embed_width);
  for (const auto& obs : all_obs) {
    pooled += trunk_forward("critic.", obs, params, cfg).h;
  }
  pooled /= static_cast<double>(all_obs.size());
  const DecoderCache dec = decoder_forward("critic.", pooled, params);
  return CriticOutput{dec.out(0)};
}

// ---------------------------------------------------------------------------
// initialization
// ---------------------------------------------------------------------------

namespace {

void add_tensor(PolicyParams& p, const std::string& name, std::vector<int> shape,
                std::mt19937_64& rng, double scale_override = -1.0) {
  NamedTensor t;
  t.name = name;
  t.shape = std::move(shape);
  int n = 1;
  for (int d : t.shape) n *= d;
  t.values.resize(n);
  const int fan_in = t.shape.size() > 1 ? t.shape[1] : t.shape[0];
  const double s =
      scale_override >= 0.0 ? scale_override : 1.0 / std::sqrt(static_cast<double>(fan_in));
  std::uniform_real_distribution<double> dist(-s, s);
  for (int i = 0; i < n; ++i) t.values(i) = scale_override == 0.0 ? 0.0 : dist(rng);
  p.tensors.push_back(std::move(t));
}

void add_trunk(PolicyParams& p, const std::string& prefix, const ArchitectureConfig& cfg,
               std::mt19937_64& rng) {
  const int E = cfg.embed_width;
  const int A = cfg.attn_width;
  add_tensor(p, prefix + "enc_self.W", {E, cfg.self_dim}, rng);
  add_tensor(p, prefix + "enc_self.b", {E}, rng, 0.0);
  add_tensor(p, prefix + "enc_edge.W", {E, cfg.edge_dim}, rng);
  add_tensor(p, prefix + "enc_edge.b", {E}, rng, 0.0);
  add_tensor(p, prefix + "att_self.W", {A, E}, rng);
  add_tensor(p, prefix + "att_edge.W", {A, E}, rng);
  add_tensor(p, prefix + "att.b", {A}, rng, 0.0);
  add_tensor(p, prefix + "att.v", {A}, rng);
  add_tensor(p, prefix + "comb_self.W", {E, E}, rng);
  add_tensor(p, prefix + "comb_agg.W", {E, E}, rng);
  add_tensor(p, prefix + "comb.b", {E}, rng, 0.0);
}

}  // namespace

PolicyParams init_params(const ArchitectureConfig& cfg, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  PolicyParams p;
  const int out = cfg.action_dim();
  add_trunk(p, "actor.", cfg, rng);
  add_tensor(p, "actor.dec1.W", {cfg.decoder_hidden, cfg.embed_width}, rng);
  add_tensor(p, "actor.dec1.b", {cfg.decoder_hidden}, rng, 0.0);
  add_tensor(p, "actor.dec2.W", {out, cfg.decoder_hidden}, rng);
  add_tensor(p, "actor.dec2.b", {out}, rng, 0.0);
  add_tensor(p, "actor.log_std", {out}, rng, 0.0);
  p.at("actor.log_std").values.setConstant(std::log(0.3));
  if (cfg.head == PolicyHead::recode || cfg.head == PolicyHead::recode_and_offset) {
    // start the uncertainty radius near b_max/4
    p.at("actor.dec2.b").values(2) = -std::log(3.0);
  }

  add_trunk(p, "critic.", cfg, rng);
  add_tensor(p, "critic.dec1.W", {cfg.decoder_hidden, cfg.embed_width}, rng);
  add_tensor(p, "critic.dec1.b", {cfg.decoder_hidden}, rng, 0.0);
  add_tensor(p, "critic.dec2.W", {1, cfg.decoder_hidden}, rng);
  add_tensor(p, "critic.dec2.b", {1}, rng, 0.0);
  return p;
}

// ---------------------------------------------------------------------------
// backward passes
// ---------------------------------------------------------------------------

void actor_backward(const ObservationGraph& obs, const PolicyParams& params,
                    const ArchitectureConfig& cfg, const VectorXd& d_mean,
                    const VectorXd& d_log_std, GradientBuffer& grads) {
  const TrunkCache trunk = trunk_forward("actor.", obs, params, cfg);
  const DecoderCache dec = decoder_forward("actor.", trunk.h, params);
  const VectorXd dh = decoder_backward("actor.", dec, params, d_mean, grads);
  trunk_backward("actor.", trunk, params, dh, grads);
  grads.at("actor.log_std").values += d_log_std;
}

void critic_backward(const std::vector<ObservationGraph>& all_obs, const PolicyParams& params,
                     const ArchitectureConfig& cfg, double d_value, GradientBuffer& grads) {
  std::vector<TrunkCache> trunks;
  trunks.reserve(all_obs.size());
  VectorXd pooled = VectorXd::Zero(cfg.embed_width);
  for (const auto& obs : all_obs) {
    trunks.push_back(trunk_forward("critic.", obs, params, cfg));
    pooled += trunks.back().h;
  }
  pooled /= static_cast<double>(all_obs.size());
  const DecoderCache dec = decoder_forward("critic.", pooled, params);
  VectorXd dout(1);
  dout(0) = d_value;
  const VectorXd dpool = decoder_backward("critic.", dec, params, dout, grads);
  const VectorXd dh = dpool / static_cast<double>(all_obs.size());
  for (const auto& trunk : trunks) trunk_backward("critic.", trunk, params, dh, grads);
}

void log_prob_param_grads(const VectorXd& pre_squash, const VectorXd& mean,
                          const VectorXd& log_std, double upstream, VectorXd& d_mean,
                          VectorXd& d_log_std) {
  d_mean.resize(mean.size());
  d_log_std.resize(mean.size());
  for (int i = 0; i < mean.size(); ++i) {
    const double inv_var = std::exp(-2.0 * log_std(i));
    const double diff = pre_squash(i) - mean(i);
    d_mean(i) = upstream * diff * inv_var;
    d_log_std(i) = upstream * (diff * diff * inv_var - 1.0);
  }
}

// ---------------------------------------------------------------------------
// probe losses
// ---------------------------------------------------------------------------

double loss_value(LossSpec spec, const std::vector<GradSample>& batch, const PolicyParams& params,
                  const ArchitectureConfig& cfg) {
  switch (spec) {
    case LossSpec::constant: return 1.0;
    case LossSpec::quadratic_probe: return 0.5 * params.flatten().squaredNorm();
    case LossSpec::actor_critic: break;
  }
  double loss = 0.0;
  for (const auto& sample : batch) {
    for (size_t i = 0; i < sample.all_obs.size(); ++i) {
      loss -= sample.advantage[i] *
              actor_log_prob(sample.all_obs[i], params, cfg, sample.pre_squash[i]);
    }
    const double v = critic_forward(sample.all_obs, params, cfg).value;
    loss += 0.5 * (v - sample.value_target) * (v - sample.value_target);
    loss -= 0.01 * policy_entropy(params);
  }
  return loss;
}

GradientBuffer grad(LossSpec spec, const std::vector<GradSample>& batch,
                    const PolicyParams& params, const ArchitectureConfig& cfg) {
  GradientBuffer grads = GradientBuffer::zeros_like(params);
  switch (spec) {
    case LossSpec::constant: return grads;
    case LossSpec::quadratic_probe: {
      for (size_t t = 0; t < params.tensors.size(); ++t) {
        grads.tensors[t].values = params.tensors[t].values;
      }
      return grads;
    }
    case LossSpec::actor_critic: break;
  }
  for (const auto& sample : batch) {
    for (size_t i = 0; i < sample.all_obs.size(); ++i) {
      const TrunkCache trunk = trunk_forward("actor.", sample.all_obs[i], params, cfg);
      const DecoderCache dec = decoder_forward("actor.", trunk.h, params);
      VectorXd d_mean, d_log_std;
      log_prob_param_grads(sample.pre_squash[i], dec.out, params.at("actor.log_std").values,
                           -sample.advantage[i], d_mean, d_log_std);
      actor_backward(sample.all_obs[i], params, cfg, d_mean, d_log_std, grads);
    }
    const double v = critic_forward(sample.all_obs, params, cfg).value;
    critic_backward(sample.all_obs, params, cfg, v - sample.value_target, grads);
    grads.at("actor.log_std").values.array() -= 0.01;
  }
  return grads;
}

}  // namespace recode::policy
