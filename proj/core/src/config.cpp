#include "recode/config.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace recode::config {

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

double to_double(const std::string& key, const std::string& value) {
  try {
    size_t pos = 0;
    const double d = std::stod(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return d;
  } catch (...) {
    throw std::invalid_argument("config: bad numeric value for " + key + ": " + value);
  }
}

long long to_int(const std::string& key, const std::string& value) {
  try {
    size_t pos = 0;
    const long long i = std::stoll(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return i;
  } catch (...) {
    throw std::invalid_argument("config: bad integer value for " + key + ": " + value);
  }
}

}  // namespace

KeyValues parse_string(const std::string& text) {
  KeyValues kv;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("config: missing '=' on line " + std::to_string(lineno));
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty()) {
      throw std::invalid_argument("config: empty key or value on line " + std::to_string(lineno));
    }
    kv[key] = value;
  }
  return kv;
}

KeyValues parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("config: cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_string(ss.str());
}

Scenario scenario_from_string(const std::string& name) {
  if (name == "narrow_corridor") return Scenario::narrow_corridor;
  if (name == "connectivity") return Scenario::connectivity;
  if (name == "waypoint") return Scenario::waypoint;
  if (name == "sensor_coverage") return Scenario::sensor_coverage;
  throw std::invalid_argument("config: unknown scenario " + name);
}

std::string to_string(Scenario scenario) {
  switch (scenario) {
    case Scenario::narrow_corridor: return "narrow_corridor";
    case Scenario::connectivity: return "connectivity";
    case Scenario::waypoint: return "waypoint";
    case Scenario::sensor_coverage: return "sensor_coverage";
  }
  return "?";
}

void AppConfig::apply(const KeyValues& kv) {
  if (auto it = kv.find("env.scenario"); it != kv.end()) {
    env = env::default_config(scenario_from_string(it->second));
  }
  for (const auto& [key, value] : kv) {
    if (key == "env.scenario") {
      continue;  // handled above
    } else if (key == "env.n_agents") {
      env.n_agents = static_cast<int>(to_int(key, value));
    } else if (key == "env.dt") {
      env.dt = to_double(key, value);
    } else if (key == "env.horizon") {
      env.horizon = static_cast<int>(to_int(key, value));
    } else if (key == "env.x_max") {
      env.bounds.x_max = to_double(key, value);
    } else if (key == "env.y_max") {
      env.bounds.y_max = to_double(key, value);
    } else if (key == "env.comm_range") {
      env.comm_range = to_double(key, value);
    } else if (key == "env.agent_radius") {
      env.agent_radius = to_double(key, value);
    } else if (key == "env.max_speed") {
      env.max_speed.max_speed = to_double(key, value);
    } else if (key == "env.cbf_gain") {
      env.cbf.gain = to_double(key, value);
    } else if (key == "env.cbf_min_distance") {
      env.cbf.min_distance = to_double(key, value);
    } else if (key == "env.seed") {
      env.seed = static_cast<std::uint64_t>(to_int(key, value));
    } else if (key == "env.c_shape") {
      env.extras.c_shape = to_double(key, value);
    } else if (key == "env.region_reward") {
      env.extras.region_reward = to_double(key, value);
    } else if (key == "env.region_length") {
      env.extras.region_length = to_double(key, value);
    } else if (key == "env.goal_bonus") {
      env.extras.goal_bonus = to_double(key, value);
    } else if (key == "env.goal_tolerance") {
      env.extras.goal_tolerance = to_double(key, value);
    } else if (key == "env.lambda_prox") {
      env.extras.lambda_prox = to_double(key, value);
    } else if (key == "env.collision_penalty") {
      env.extras.collision_penalty = to_double(key, value);
    } else if (key == "env.out_of_bounds_penalty") {
      env.extras.out_of_bounds_penalty = to_double(key, value);
    } else if (key == "env.link_break_penalty") {
      env.extras.link_break_penalty = to_double(key, value);
    } else if (key == "env.placement_margin") {
      env.extras.placement_margin = to_double(key, value);
    } else if (key == "env.obstacle_count_min") {
      env.extras.obstacle_count_min = static_cast<int>(to_int(key, value));
    } else if (key == "env.obstacle_count_max") {
      env.extras.obstacle_count_max = static_cast<int>(to_int(key, value));
    } else if (key == "train.instances") {
      train.n_env_instances = static_cast<int>(to_int(key, value));
    } else if (key == "train.rollout_length") {
      train.rollout_length = static_cast<int>(to_int(key, value));
    } else if (key == "train.total_env_steps") {
      train.total_env_steps = to_int(key, value);
    } else if (key == "train.discount") {
      train.discount = to_double(key, value);
    } else if (key == "train.gae_lambda") {
      train.gae_lambda = to_double(key, value);
    } else if (key == "train.clip_epsilon") {
      train.clip_epsilon = to_double(key, value);
    } else if (key == "train.learning_rate") {
      train.learning_rate = to_double(key, value);
    } else if (key == "train.minibatches") {
      train.minibatch_count = static_cast<int>(to_int(key, value));
    } else if (key == "train.epochs") {
      train.epochs_per_update = static_cast<int>(to_int(key, value));
    } else if (key == "train.lambda0") {
      train.lambda0 = to_double(key, value);
    } else if (key == "train.value_coef") {
      train.value_coef = to_double(key, value);
    } else if (key == "train.entropy_coef") {
      train.entropy_coef = to_double(key, value);
    } else if (key == "train.max_grad_norm") {
      train.max_grad_norm = to_double(key, value);
    } else if (key == "train.mode") {
      const auto mode = training::mode_from_string(value);
      if (!mode) throw std::invalid_argument("config: unknown mode " + value);
      train.mode = *mode;
    } else if (key == "train.critic") {
      if (value == "centralized") {
        train.critic = training::CriticKind::centralized;
      } else if (value == "local") {
        train.critic = training::CriticKind::local;
      } else {
        throw std::invalid_argument("config: train.critic must be centralized|local");
      }
    } else if (key == "train.seed") {
      train.seed = static_cast<std::uint64_t>(to_int(key, value));
    } else if (key == "train.eval_every") {
      train.eval_every_updates = static_cast<int>(to_int(key, value));
    } else if (key == "train.eval_episodes") {
      train.eval_episodes = static_cast<int>(to_int(key, value));
    } else if (key == "eval.episodes") {
      eval_episodes = static_cast<int>(to_int(key, value));
    } else if (key == "eval.best_window") {
      best_window = static_cast<int>(to_int(key, value));
    } else if (key == "out.dir") {
      out_dir = value;
    } else {
      throw std::invalid_argument("config: unknown key " + key);
    }
  }
}

}  // namespace recode::config
