#include "recode/eval.hpp"

#include "recode/config.hpp"
#include "recode/controllers.hpp"

#include <chrono>
#include <cmath>
#include <stdexcept>

namespace recode::eval {

std::string to_string(Controller controller) {
  switch (controller) {
    case Controller::handcrafted: return "handcrafted";
    case Controller::rvo: return "rvo";
    case Controller::recode: return "recode";
    case Controller::recode_linear: return "recode_linear";
    case Controller::pure_marl: return "pure_marl";
    case Controller::shielding: return "shielding";
    case Controller::online_cbf: return "online_cbf";
    case Controller::ablation_objective: return "ablation_objective";
    case Controller::ablation_both: return "ablation_both";
  }
  return "?";
}

std::optional<Controller> controller_from_string(const std::string& name) {
  for (Controller c :
       {Controller::handcrafted, Controller::rvo, Controller::recode, Controller::recode_linear,
        Controller::pure_marl, Controller::shielding, Controller::online_cbf,
        Controller::ablation_objective, Controller::ablation_both}) {
    if (to_string(c) == name) return c;
  }
  return std::nullopt;
}

std::optional<training::Mode> mode_of(Controller controller) {
  switch (controller) {
    case Controller::handcrafted:
    case Controller::rvo: return std::nullopt;
    case Controller::recode: return training::Mode::recode;
    case Controller::recode_linear: return training::Mode::recode_linear;
    case Controller::pure_marl: return training::Mode::pure_marl;
    case Controller::shielding: return training::Mode::shielding;
    case Controller::online_cbf: return training::Mode::online_cbf;
    case Controller::ablation_objective: return training::Mode::ablation_objective;
    case Controller::ablation_both: return training::Mode::ablation_both;
  }
  return std::nullopt;
}

bool needs_checkpoint(Controller controller) { return mode_of(controller).has_value(); }

namespace {

std::uint64_t mix_seed(std::uint64_t seed, int episode) {
  std::uint64_t x = seed ^ (0x9E3779B97F4A7C15ULL + static_cast<std::uint64_t>(episode));
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

bool ball_augmented(Controller controller) {
  return controller == Controller::recode || controller == Controller::ablation_both;
}

}  // namespace

EvalOutput run_eval(Controller controller, const policy::PolicyParams* params,
                    const policy::ArchitectureConfig* arch, const env::EnvConfig& base_config,
                    const EvalOptions& options) {
  if (options.n_episodes < 1) throw std::invalid_argument("run_eval: n_episodes must be >= 1");
  const auto mode = mode_of(controller);
  if (mode && (params == nullptr || arch == nullptr)) {
    throw std::invalid_argument("run_eval: trained controller requires a checkpoint");
  }

  EvalOutput output;
  const auto wall_start = std::chrono::steady_clock::now();
  for (int episode = 0; episode < options.n_episodes; ++episode) {
    env::EnvConfig config = base_config;
    config.seed = mix_seed(options.seed, episode);

    EpisodeRecord record;
    record.episode = episode;

    if (controller == Controller::handcrafted || controller == Controller::rvo) {
      const auto rollout = controller == Controller::handcrafted
                               ? baselines::handcrafted_rollout(config, config.seed)
                               : baselines::rvo_rollout(config, config.seed);
      record.mean_reward_per_step = rollout.mean_reward_per_step;
      record.collisions = rollout.collision_events;
      record.success = rollout.all_reached;
      record.steps = rollout.steps;
    } else {
      env::WorldState state = env::reset(config);
      const auto spec = config.scenario_spec();
      double reward_sum = 0.0;
      double b_sum = 0.0;
      long long b_count = 0;
      long long agent_steps = 0;
      bool done = false;
      int step_index = 0;
      while (!done) {
        const auto graphs = env::observe_all(state, config);
        std::vector<qcqp::ConvexProgram> programs;
        std::vector<int> slots;
        std::vector<Vec2> controls(config.n_agents, Vec2::Zero());
        std::vector<double> b_values(config.n_agents,
                                     std::numeric_limits<double>::quiet_NaN());
        std::vector<qcqp::SolveStatus> statuses(config.n_agents, qcqp::SolveStatus::optimal);
        for (int a = 0; a < config.n_agents; ++a) {
          const auto out = policy::actor_forward(graphs[a], *params, *arch,
                                                 policy::ForwardMode::deterministic);
          if (ball_augmented(controller)) {
            b_values[a] = out.action(2);
            b_sum += out.action(2);
            b_count += 1;
            output.b_samples.push_back(
                {out.action(2), static_cast<double>(graphs[a].neighbor_edges.size()),
                 -env::goal_distance(state.agents[a], config)});
          }
          if (auto program = training::build_mode_program(*mode, graphs[a], spec, out.action,
                                                          options.lambda0)) {
            programs.push_back(std::move(*program));
            slots.push_back(a);
          } else {
            controls[a] = Vec2(out.action(0), out.action(1));
          }
        }
        if (!programs.empty()) {
          const auto results = qcqp::batch_solve(programs);
          for (size_t k = 0; k < results.size(); ++k) {
            statuses[slots[k]] = results[k].status;
            controls[slots[k]] = results[k].status == qcqp::SolveStatus::optimal
                                     ? results[k].control
                                     : Vec2::Zero();
          }
        }
        auto [next, result] = env::step(state, controls, config);
        for (int a = 0; a < config.n_agents; ++a) reward_sum += result.rewards[a];
        agent_steps += config.n_agents;
        for (const auto& e : result.events) {
          if (e.type == env::EventType::collision) record.collisions += 1;
          if (e.type == env::EventType::out_of_bounds) record.out_of_bounds += 1;
          if (e.type == env::EventType::link_break_attempt) record.link_breaks += 1;
        }
        if (options.step_writer != nullptr) {
          const double wall_ms = std::chrono::duration<double, std::milli>(
                                     std::chrono::steady_clock::now() - wall_start)
                                     .count();
          for (int a = 0; a < config.n_agents; ++a) {
            metrics::Json rec;
            rec["kind"] = "agent_step";
            rec["run"] = options.run_id;
            rec["mode"] = to_string(controller);
            rec["scenario"] = config::to_string(config.scenario);
            rec["env_step"] = step_index;
            rec["episode"] = episode;
            rec["agent"] = a;
            rec["reward"] = result.rewards[a];
            rec["reward_terms"] = {{"shaping", result.reward_terms[a].shaping},
                                   {"region", result.reward_terms[a].region},
                                   {"prox", result.reward_terms[a].prox},
                                   {"goal_bonus", result.reward_terms[a].goal_bonus},
                                   {"collision", result.reward_terms[a].collision},
                                   {"out_of_bounds", result.reward_terms[a].out_of_bounds},
                                   {"link_break", result.reward_terms[a].link_break}};
            if (!std::isnan(b_values[a])) rec["b"] = b_values[a];
            rec["neighbors"] = graphs[a].neighbor_edges.size();
            rec["goal_proximity"] = -env::goal_distance(state.agents[a], config);
            rec["pos"] = {state.agents[a].position.x(), state.agents[a].position.y()};
            rec["status"] = qcqp::to_string(statuses[a]);
            rec["events"] = result.events.size();
            rec["wall_ms"] = wall_ms;
            options.step_writer->write(std::move(rec));
          }
        }
        state = std::move(next);
        done = result.done;
        step_index += 1;
      }
      record.mean_reward_per_step =
          agent_steps > 0 ? reward_sum / static_cast<double>(agent_steps) : 0.0;
      record.steps = step_index;
      record.success = baselines::all_goals_reached(state, config);
      if (b_count > 0) record.mean_b = b_sum / static_cast<double>(b_count);
    }

    if (options.writer != nullptr) {
      metrics::Json rec;
      rec["kind"] = "episode";
      rec["run"] = options.run_id;
      rec["mode"] = to_string(controller);
      rec["scenario"] = config::to_string(base_config.scenario);
      rec["episode"] = record.episode;
      rec["mean_reward_per_step"] = record.mean_reward_per_step;
      rec["collisions"] = record.collisions;
      rec["out_of_bounds"] = record.out_of_bounds;
      rec["link_breaks"] = record.link_breaks;
      rec["success"] = record.success;
      rec["steps"] = record.steps;
      if (!std::isnan(record.mean_b)) rec["mean_b"] = record.mean_b;
      options.writer->write(std::move(rec));
    }
    output.episodes.push_back(record);
  }
  output.summary = summarize(output.episodes);
  return output;
}

EvalSummary summarize(const std::vector<EpisodeRecord>& episodes) {
  EvalSummary summary;
  summary.n_episodes = static_cast<int>(episodes.size());
  if (episodes.empty()) return summary;
  double sum = 0.0;
  double b_sum = 0.0;
  long long b_count = 0;
  long long successes = 0;
  for (const auto& e : episodes) {
    sum += e.mean_reward_per_step;
    summary.collisions += e.collisions;
    summary.out_of_bounds += e.out_of_bounds;
    summary.link_breaks += e.link_breaks;
    if (e.success) ++successes;
    if (!std::isnan(e.mean_b)) {
      b_sum += e.mean_b;
      b_count += 1;
    }
  }
  summary.mean_reward = sum / summary.n_episodes;
  double var = 0.0;
  for (const auto& e : episodes) {
    var += (e.mean_reward_per_step - summary.mean_reward) *
           (e.mean_reward_per_step - summary.mean_reward);
  }
  summary.std_reward = std::sqrt(var / summary.n_episodes);
  summary.success_rate = static_cast<double>(successes) / summary.n_episodes;
  if (b_count > 0) summary.mean_b = b_sum / static_cast<double>(b_count);
  return summary;
}

EvalSummary summary_from_stream(const std::string& jsonl_path) {
  std::vector<EpisodeRecord> episodes;
  for (const auto& rec : metrics::read_jsonl(jsonl_path)) {
    if (rec.value("kind", "") != "episode") continue;
    EpisodeRecord e;
    e.episode = rec.at("episode").get<int>();
    e.mean_reward_per_step = rec.at("mean_reward_per_step").get<double>();
    e.collisions = rec.at("collisions").get<long long>();
    e.out_of_bounds = rec.at("out_of_bounds").get<long long>();
    e.link_breaks = rec.at("link_breaks").get<long long>();
    e.success = rec.at("success").get<bool>();
    e.steps = rec.at("steps").get<int>();
    if (rec.contains("mean_b")) e.mean_b = rec.at("mean_b").get<double>();
    episodes.push_back(e);
  }
  return summarize(episodes);
}

}  // namespace recode::eval
