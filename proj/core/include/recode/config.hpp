#pragma once

#include "recode/env.hpp"
#include "recode/training.hpp"

#include <map>
#include <string>

namespace recode::config {

using KeyValues = std::map<std::string, std::string>;

/// Flat `key = value` lines with dotted section keys; `#` starts a comment.
KeyValues parse_string(const std::string& text);
KeyValues parse_file(const std::string& path);

struct AppConfig {
  env::EnvConfig env = env::default_config(Scenario::narrow_corridor);
  training::TrainConfig train;
  int eval_episodes = 75;
  int best_window = 6;  // consecutive evals aggregated for the summary table
  std::string out_dir = ".";

  /// Applies the key-values on top of the current settings. `env.scenario`
  /// resets the env block to that scenario's defaults first. Unknown keys
  /// are errors.
  void apply(const KeyValues& kv);
};

Scenario scenario_from_string(const std::string& name);
std::string to_string(Scenario scenario);

}  // namespace recode::config
