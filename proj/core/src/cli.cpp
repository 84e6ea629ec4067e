#include "recode/cli.hpp"

#include "recode/baselines.hpp"
#include "recode/checkpoint.hpp"
#include "recode/config.hpp"
#include "recode/diagnostics.hpp"
#include "recode/eval.hpp"
#include "recode/metrics.hpp"
#include "recode/random_programs.hpp"
#include "recode/theory.hpp"
#include "recode/training.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>

namespace recode::cli {

namespace {

namespace fs = std::filesystem;

struct CommonFlags {
  std::string scenario;
  int agents = 0;
  long long steps = 0;
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::string mode;
  std::string config_path;
  std::string out_dir = ".";
};

void add_common(CLI::App* cmd, CommonFlags& flags) {
  cmd->add_option("--scenario", flags.scenario,
                  "narrow_corridor|connectivity|waypoint|sensor_coverage");
  cmd->add_option("--agents", flags.agents, "number of agents");
  cmd->add_option("--steps", flags.steps, "total environment steps (train) / horizon override");
  cmd->add_option("--seed", flags.seed, "random seed")->each([&](const std::string&) {
    flags.seed_set = true;
  });
  cmd->add_option("--mode", flags.mode, "controller mode");
  cmd->add_option("--config", flags.config_path, "flat key=value config file");
  cmd->add_option("--out", flags.out_dir, "output directory");
}

config::AppConfig resolve_config(const CommonFlags& flags, long long default_steps = 0) {
  config::AppConfig app;
  if (!flags.config_path.empty()) app.apply(config::parse_file(flags.config_path));
  if (!flags.scenario.empty()) {
    config::KeyValues kv{{"env.scenario", flags.scenario}};
    app.apply(kv);
  }
  if (flags.agents > 0) app.env.n_agents = flags.agents;
  if (flags.seed_set) {
    app.env.seed = flags.seed;
    app.train.seed = flags.seed;
  }
  if (!flags.mode.empty()) {
    const auto mode = training::mode_from_string(flags.mode);
    if (mode) app.train.mode = *mode;
  }
  if (flags.steps > 0) app.train.total_env_steps = flags.steps;
  if (default_steps > 0 && flags.steps == 0) app.train.total_env_steps = default_steps;
  app.out_dir = flags.out_dir;
  return app;
}

void write_resolved_config(const config::AppConfig& app, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  out << "env.scenario = " << config::to_string(app.env.scenario) << "\n"
      << "env.n_agents = " << app.env.n_agents << "\n"
      << "env.dt = " << app.env.dt << "\n"
      << "env.horizon = " << app.env.horizon << "\n"
      << "env.x_max = " << app.env.bounds.x_max << "\n"
      << "env.y_max = " << app.env.bounds.y_max << "\n"
      << "env.comm_range = " << app.env.comm_range << "\n"
      << "env.agent_radius = " << app.env.agent_radius << "\n"
      << "env.max_speed = " << app.env.max_speed.max_speed << "\n"
      << "env.cbf_gain = " << app.env.cbf.gain << "\n"
      << "env.cbf_min_distance = " << app.env.cbf.min_distance << "\n"
      << "env.seed = " << app.env.seed << "\n"
      << "train.mode = " << training::to_string(app.train.mode) << "\n"
      << "train.total_env_steps = " << app.train.total_env_steps << "\n"
      << "train.instances = " << app.train.n_env_instances << "\n"
      << "train.rollout_length = " << app.train.rollout_length << "\n"
      << "train.learning_rate = " << app.train.learning_rate << "\n"
      << "train.lambda0 = " << app.train.lambda0 << "\n"
      << "train.seed = " << app.train.seed << "\n"
      << "eval.episodes = " << app.eval_episodes << "\n"
      << "eval.best_window = " << app.best_window << "\n";
}

int cmd_train(const CommonFlags& flags) {
  auto app = resolve_config(flags);
  fs::create_directories(app.out_dir);
  write_resolved_config(app, app.out_dir + "/resolved.cfg");

  metrics::JsonlWriter writer(app.out_dir + "/train_metrics.jsonl");
  const auto wall_start = std::chrono::steady_clock::now();
  if (app.train.eval_every_updates == 0) app.train.eval_every_updates = 10;

  const auto result = training::train(app.env, app.train, [&](const training::TrainEvent& ev) {
    metrics::Json rec;
    rec["kind"] = "update";
    rec["run"] = "train";
    rec["mode"] = training::to_string(app.train.mode);
    rec["scenario"] = config::to_string(app.env.scenario);
    rec["env_steps"] = ev.env_steps;
    rec["update"] = ev.update_index;
    rec["mean_reward"] = ev.mean_reward;
    if (!std::isnan(ev.mean_b)) rec["mean_b"] = ev.mean_b;
    rec["mean_kl"] = ev.stats.mean_kl;
    rec["clip_fraction"] = ev.stats.clip_fraction;
    rec["policy_loss"] = ev.stats.policy_loss;
    rec["value_loss"] = ev.stats.value_loss;
    rec["entropy"] = ev.stats.entropy;
    rec["solver_fallbacks"] = ev.solver_fallbacks;
    rec["collision_events"] = ev.collision_events;
    rec["collision_events_solver_optimal"] = ev.collision_events_solver_optimal;
    rec["mean_collision_penalty"] = ev.mean_collision_penalty;
    if (!std::isnan(ev.eval_mean_reward)) rec["eval_mean_reward"] = ev.eval_mean_reward;
    rec["wall_ms"] = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() -
                                                               wall_start)
                         .count();
    writer.write(std::move(rec));
    std::cout << "update " << ev.update_index << " env_steps " << ev.env_steps
              << " mean_reward " << ev.mean_reward;
    if (!std::isnan(ev.eval_mean_reward)) std::cout << " eval " << ev.eval_mean_reward;
    std::cout << "\n";
  });

  checkpoint::save(app.out_dir + "/checkpoint.rcd", result.params, result.arch.digest());

  // best `best_window` consecutive periodic evals, reported with the window
  double best_window_mean = std::numeric_limits<double>::quiet_NaN();
  {
    std::vector<double> evals;
    for (const auto& ev : result.events) {
      if (!std::isnan(ev.eval_mean_reward)) evals.push_back(ev.eval_mean_reward);
    }
    const int w = std::min<int>(app.best_window, static_cast<int>(evals.size()));
    for (size_t i = 0; w > 0 && i + w <= evals.size(); ++i) {
      double sum = 0.0;
      for (int k = 0; k < w; ++k) sum += evals[i + k];
      const double mean = sum / w;
      if (std::isnan(best_window_mean) || mean > best_window_mean) best_window_mean = mean;
    }
  }
  std::cout << "trained " << result.total_env_steps << " env steps; checkpoint at "
            << app.out_dir << "/checkpoint.rcd\n";
  if (!std::isnan(best_window_mean)) {
    std::cout << "best " << app.best_window << "-eval window mean reward: " << best_window_mean
              << "\n";
  }
  std::cout << "solver-optimal collision events: " << result.collision_events_solver_optimal
            << "\n";
  return 0;
}

int cmd_eval(const CommonFlags& flags, const std::string& checkpoint_path, int episodes) {
  auto app = resolve_config(flags);
  fs::create_directories(app.out_dir);
  if (episodes > 0) app.eval_episodes = episodes;

  const auto controller = eval::controller_from_string(
      flags.mode.empty() ? "handcrafted" : flags.mode);
  if (!controller) {
    std::cerr << "unknown mode: " << flags.mode << "\n";
    return 2;
  }
  policy::PolicyParams params;
  policy::ArchitectureConfig arch;
  const policy::PolicyParams* params_ptr = nullptr;
  const policy::ArchitectureConfig* arch_ptr = nullptr;
  if (eval::needs_checkpoint(*controller)) {
    if (checkpoint_path.empty()) {
      std::cerr << "eval: --checkpoint is required for mode "
                << eval::to_string(*controller) << "\n";
      return 2;
    }
    arch = training::make_arch(app.env, *eval::mode_of(*controller));
    params = checkpoint::load(checkpoint_path, arch.digest()).params;
    params_ptr = &params;
    arch_ptr = &arch;
  }

  metrics::JsonlWriter writer(app.out_dir + "/eval_metrics.jsonl");
  metrics::JsonlWriter step_writer(app.out_dir + "/eval_steps.jsonl");
  eval::EvalOptions options;
  options.n_episodes = app.eval_episodes;
  options.seed = app.env.seed;
  options.lambda0 = app.train.lambda0;
  options.writer = &writer;
  options.step_writer = &step_writer;
  const auto output = eval::run_eval(*controller, params_ptr, arch_ptr, app.env, options);

  std::ofstream csv(app.out_dir + "/summary.csv", std::ios::trunc);
  csv << "mode,scenario,episodes,mean_reward_per_step,std,success_rate,collisions,out_of_"
         "bounds,link_breaks\n";
  csv << eval::to_string(*controller) << "," << config::to_string(app.env.scenario) << ","
      << output.summary.n_episodes << "," << output.summary.mean_reward << ","
      << output.summary.std_reward << "," << output.summary.success_rate << ","
      << output.summary.collisions << "," << output.summary.out_of_bounds << ","
      << output.summary.link_breaks << "\n";

  std::cout << eval::to_string(*controller) << " on " << config::to_string(app.env.scenario)
            << ": mean reward/step " << output.summary.mean_reward << " +/- "
            << output.summary.std_reward << " over " << output.summary.n_episodes
            << " episodes, success rate " << output.summary.success_rate << ", collisions "
            << output.summary.collisions << "\n";
  return 0;
}

int check_solver_oracle(std::uint64_t seed) {
  std::mt19937_64 rng(seed == 0 ? 20240501 : seed);
  const int n_programs = 500;
  double max_obj_err = 0.0;
  double max_residual = -1e9;
  const auto start = std::chrono::steady_clock::now();
  for (int i = 0; i < n_programs; ++i) {
    const auto program = qcqp::random_valid_program(rng);
    const auto exact = qcqp::solve(program);
    const auto grid =
        qcqp::oracle_solve(program, 0.005 * program.norm_bound.max_speed);
    if (exact.status != qcqp::SolveStatus::optimal ||
        grid.status != qcqp::SolveStatus::optimal) {
      std::cout << "[FAIL] solver-oracle: non-optimal status on program " << i << "\n";
      return 1;
    }
    max_obj_err =
        std::max(max_obj_err, std::abs(exact.objective_value - grid.objective_value));
    max_residual = std::max(max_residual, qcqp::max_hard_residual(program, exact.control));
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const bool pass = max_obj_err <= 1e-2 && max_residual <= 1e-6;
  std::cout << (pass ? "[PASS]" : "[FAIL]") << " solver-oracle: " << n_programs
            << " programs, max |obj diff| " << max_obj_err << " (tol 1e-2), max residual "
            << max_residual << " (tol 1e-6), " << secs << " s\n";
  return pass ? 0 : 1;
}

int check_prop1() {
  auto config = env::default_config(Scenario::narrow_corridor);
  const auto trajectory = theory::straight_corridor_trajectory(
      config, Vec2(0.0, -2.0), Vec2(0.0, 0.3 * config.max_speed.max_speed), 50);
  const auto result = theory::construct_tracking_params(trajectory, config, {}, 0.01, 1e4);
  const bool pass = result.max_control_error <= 0.01 && result.final_state_deviation <= 0.05;
  std::cout << (pass ? "[PASS]" : "[FAIL]") << " prop1: max control error "
            << result.max_control_error << " (tol 0.01), final deviation "
            << result.final_state_deviation << " (tol 0.05)\n";
  return pass ? 0 : 1;
}

int check_prop2() {
  auto spec = theory::analytic_prop2_spec();
  const Vec2 a(0.0, 0.0);
  const auto exact = theory::prop2_check(spec, a, 1e6);
  const double equality_err = std::abs(exact.lhs - (spec.q_true(a) + 0.2));
  bool pass = equality_err <= 1e-6 && exact.holds;

  auto perturbed = spec;
  perturbed.approx_error = 0.05;
  perturbed.q_true = [](const Vec2& u) { return u.y() + 0.05 * std::cos(5.0 * u.x() + u.y()); };
  const auto noisy = theory::prop2_check(perturbed, a, 1e6);
  pass = pass && noisy.holds;

  auto degenerate = spec;
  degenerate.radius = 0.0;
  const auto zero_r = theory::prop2_check(degenerate, a, 1e6);
  pass = pass && zero_r.holds;

  std::cout << (pass ? "[PASS]" : "[FAIL]") << " prop2: equality error " << equality_err
            << " (tol 1e-6), perturbed bound " << (noisy.holds ? "holds" : "violated")
            << ", r=0 bound " << (zero_r.holds ? "holds" : "violated") << "\n";
  return pass ? 0 : 1;
}

int check_safety(std::uint64_t seed) {
  long long collisions = 0;
  long long non_optimal = 0;
  for (Scenario scenario : {Scenario::narrow_corridor, Scenario::waypoint,
                            Scenario::connectivity, Scenario::sensor_coverage}) {
    auto config = env::default_config(scenario);
    config.horizon = 120;
    for (int ep = 0; ep < 5; ++ep) {
      const auto rollout = baselines::handcrafted_rollout(config, seed + 17 * ep + 1);
      collisions += rollout.collision_events;
      non_optimal += rollout.non_optimal_solves;
    }
  }
  const bool pass = collisions == 0;
  std::cout << (pass ? "[PASS]" : "[FAIL]") << " safety: " << collisions
            << " collision events across handcrafted rollouts (expect 0), " << non_optimal
            << " non-optimal solves\n";
  return pass ? 0 : 1;
}

int cmd_diag_b(const std::string& metrics_path) {
  std::vector<diagnostics::BSample> samples;
  for (const auto& rec : metrics::read_jsonl(metrics_path)) {
    if (rec.value("kind", "") != "agent_step" || !rec.contains("b")) continue;
    diagnostics::BSample s;
    s.b = rec.at("b").get<double>();
    s.neighbor_count = rec.at("neighbors").get<double>();
    s.goal_proximity = rec.at("goal_proximity").get<double>();
    samples.push_back(s);
  }
  if (samples.size() < 3) {
    std::cerr << "diag b: not enough ball-augmented samples in " << metrics_path << "\n";
    return 2;
  }
  const auto diag = diagnostics::b_diagnostics(samples);
  std::cout << "b vs neighbor_count: r " << diag.b_vs_neighbors.r << " p "
            << diag.b_vs_neighbors.p_value << (diag.b_vs_neighbors.degenerate ? " (degenerate)" : "")
            << "\n";
  std::cout << "b vs goal_proximity: r " << diag.b_vs_goal_proximity.r << " p "
            << diag.b_vs_goal_proximity.p_value
            << (diag.b_vs_goal_proximity.degenerate ? " (degenerate)" : "") << "\n";
  std::cout << "samples: " << diag.samples << "\n";
  return 0;
}

int cmd_sweep_radius(const CommonFlags& flags, const std::string& radii_arg, int episodes) {
  auto app = resolve_config(flags);
  if (app.env.scenario != Scenario::waypoint) app = config::AppConfig{};
  fs::create_directories(app.out_dir = flags.out_dir);

  std::vector<double> radii;
  {
    std::stringstream ss(radii_arg.empty() ? "0.08,0.12,0.16" : radii_arg);
    std::string token;
    while (std::getline(ss, token, ',')) radii.push_back(std::stod(token));
  }
  std::ofstream csv(app.out_dir + "/radius_sweep.csv", std::ios::trunc);
  csv << "radius,controller,mean_reward_per_step,std,success_rate,collisions\n";
  for (double radius : radii) {
    auto config = env::default_config(Scenario::waypoint);
    config.n_agents = app.env.n_agents;
    config.agent_radius = radius;
    config.cbf.min_distance = 2.0 * radius + 0.01;
    config.seed = app.env.seed;
    for (eval::Controller controller : {eval::Controller::handcrafted, eval::Controller::rvo}) {
      eval::EvalOptions options;
      options.n_episodes = episodes > 0 ? episodes : 20;
      options.seed = app.env.seed;
      const auto out = eval::run_eval(controller, nullptr, nullptr, config, options);
      csv << radius << "," << eval::to_string(controller) << "," << out.summary.mean_reward
          << "," << out.summary.std_reward << "," << out.summary.success_rate << ","
          << out.summary.collisions << "\n";
      std::cout << "radius " << radius << " " << eval::to_string(controller) << ": "
                << out.summary.mean_reward << " +/- " << out.summary.std_reward << "\n";
    }
  }
  std::cout << "wrote " << app.out_dir << "/radius_sweep.csv\n";
  return 0;
}

int cmd_ablate(const CommonFlags& flags) {
  auto app = resolve_config(flags, 30000);
  fs::create_directories(app.out_dir);
  std::ofstream csv(app.out_dir + "/ablation.csv", std::ios::trunc);
  csv << "mode,final_eval_mean_reward,env_steps\n";
  for (training::Mode mode : {training::Mode::recode, training::Mode::ablation_objective,
                              training::Mode::ablation_both}) {
    auto train_cfg = app.train;
    train_cfg.mode = mode;
    train_cfg.eval_every_updates = 0;
    const auto result = training::train(app.env, train_cfg);
    policy::ArchitectureConfig arch = result.arch;
    eval::EvalOptions options;
    options.n_episodes = std::min(app.eval_episodes, 20);
    options.seed = app.env.seed + 99;
    options.lambda0 = train_cfg.lambda0;
    const auto controller = mode == training::Mode::recode ? eval::Controller::recode
                            : mode == training::Mode::ablation_objective
                                ? eval::Controller::ablation_objective
                                : eval::Controller::ablation_both;
    const auto out = eval::run_eval(controller, &result.params, &arch, app.env, options);
    csv << training::to_string(mode) << "," << out.summary.mean_reward << ","
        << result.total_env_steps << "\n";
    std::cout << training::to_string(mode) << ": eval mean reward " << out.summary.mean_reward
              << " after " << result.total_env_steps << " env steps\n";
  }
  std::cout << "wrote " << app.out_dir << "/ablation.csv\n";
  return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args) {
  CLI::App app{"decentralized constraint-learning control laboratory"};
  app.require_subcommand(1);

  CommonFlags train_flags, eval_flags, check_flags, diag_flags, sweep_flags, ablate_flags;

  auto* train_cmd = app.add_subcommand("train", "train a controller mode");
  add_common(train_cmd, train_flags);

  auto* eval_cmd = app.add_subcommand("eval", "evaluate a controller");
  add_common(eval_cmd, eval_flags);
  std::string eval_checkpoint;
  int eval_episodes = 0;
  eval_cmd->add_option("--checkpoint", eval_checkpoint, "trained checkpoint path");
  eval_cmd->add_option("--episodes", eval_episodes, "evaluation episodes");

  auto* check_cmd = app.add_subcommand("check", "executable verification checks");
  add_common(check_cmd, check_flags);
  std::string check_name;
  check_cmd->add_option("target", check_name, "solver-oracle|prop1|prop2|safety")->required();

  auto* diag_cmd = app.add_subcommand("diag", "diagnostics");
  add_common(diag_cmd, diag_flags);
  std::string diag_name, diag_metrics;
  diag_cmd->add_option("target", diag_name, "b")->required();
  diag_cmd->add_option("--metrics", diag_metrics, "agent-step metrics stream (jsonl)");

  auto* sweep_cmd = app.add_subcommand("sweep", "parameter sweeps");
  add_common(sweep_cmd, sweep_flags);
  std::string sweep_name, sweep_radii;
  int sweep_episodes = 0;
  sweep_cmd->add_option("target", sweep_name, "radius")->required();
  sweep_cmd->add_option("--radii", sweep_radii, "comma-separated agent radii");
  sweep_cmd->add_option("--episodes", sweep_episodes, "episodes per point");

  auto* ablate_cmd = app.add_subcommand("ablate", "constraint/objective ablation");
  add_common(ablate_cmd, ablate_flags);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {  // --help
      std::cout << app.help() << "\n";
      return 0;
    }
    std::cerr << e.what() << "\n" << app.help() << "\n";
    return 2;
  }

  try {
    if (train_cmd->parsed()) return cmd_train(train_flags);
    if (eval_cmd->parsed()) return cmd_eval(eval_flags, eval_checkpoint, eval_episodes);
    if (check_cmd->parsed()) {
      if (check_name == "solver-oracle") return check_solver_oracle(check_flags.seed);
      if (check_name == "prop1") return check_prop1();
      if (check_name == "prop2") return check_prop2();
      if (check_name == "safety") return check_safety(check_flags.seed + 1);
      std::cerr << "unknown check target: " << check_name << "\n";
      return 2;
    }
    if (diag_cmd->parsed()) {
      if (diag_name != "b") {
        std::cerr << "unknown diag target: " << diag_name << "\n";
        return 2;
      }
      if (diag_metrics.empty()) {
        std::cerr << "diag b: --metrics <file> is required\n";
        return 2;
      }
      return cmd_diag_b(diag_metrics);
    }
    if (sweep_cmd->parsed()) {
      if (sweep_name != "radius") {
        std::cerr << "unknown sweep target: " << sweep_name << "\n";
        return 2;
      }
      return cmd_sweep_radius(sweep_flags, sweep_radii, sweep_episodes);
    }
    if (ablate_cmd->parsed()) return cmd_ablate(ablate_flags);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}

}  // namespace recode::cli
