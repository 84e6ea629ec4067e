#include "recode/cli.hpp"
#include "recode/config.hpp"
#include "recode/diagnostics.hpp"
#include "recode/eval.hpp"
#include "recode/metrics.hpp"
#include "recode/theory.hpp"

#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>

using namespace recode;

TEST_CASE("config parsing") {
  SUBCASE("dotted keys with comments") {
    const auto kv = config::parse_string("# comment\nenv.dt = 0.05\n\ntrain.mode = recode # tail\n");
    CHECK(kv.at("env.dt") == "0.05");
    CHECK(kv.at("train.mode") == "recode");
  }
  SUBCASE("missing equals is an error") {
    CHECK_THROWS_AS(config::parse_string("env.dt 0.05\n"), std::invalid_argument);
  }
  SUBCASE("unknown keys are errors") {
    config::AppConfig app;
    CHECK_THROWS_AS(app.apply(config::parse_string("env.unknown = 3\n")),
                    std::invalid_argument);
  }
  SUBCASE("scenario key resets defaults before overrides") {
    config::AppConfig app;
    app.apply(config::parse_string("env.scenario = waypoint\nenv.n_agents = 7\n"));
    CHECK(app.env.scenario == Scenario::waypoint);
    CHECK(app.env.n_agents == 7);
    CHECK(app.env.bounds.x_max == doctest::Approx(1.0));
  }
  SUBCASE("bad numeric values are errors") {
    config::AppConfig app;
    CHECK_THROWS_AS(app.apply(config::parse_string("env.dt = fast\n")), std::invalid_argument);
  }
}

TEST_CASE("pearson correlation") {
  SUBCASE("perfectly linear data") {
    std::vector<double> x{1, 2, 3, 4, 5};
    std::vector<double> y{2, 4, 6, 8, 10};
    const auto res = diagnostics::pearson(x, y);
    CHECK(res.r == doctest::Approx(1.0).epsilon(1e-12));
    CHECK_FALSE(res.degenerate);
  }
  SUBCASE("constant series is degenerate with r = 0") {
    std::vector<double> x{1, 1, 1, 1};
    std::vector<double> y{2, 4, 6, 8};
    const auto res = diagnostics::pearson(x, y);
    CHECK(res.degenerate);
    CHECK(res.r == 0.0);
  }
  SUBCASE("hand-computed five-point dataset") {
    const std::vector<double> x{1.0, 2.0, 3.0, 4.0, 5.0};
    const std::vector<double> y{2.0, 1.0, 4.0, 3.0, 5.0};
    // means 3 and 3; sxy = 7, sxx = 10, syy = 10
    const auto res = diagnostics::pearson(x, y);
    CHECK(res.r == doctest::Approx(0.7).epsilon(1e-12));
    CHECK(res.p_value > 0.05);  // n = 5 is far from significant
  }
  SUBCASE("p-value matches the known two-sided t-tail") {
    // r = 0.7, n = 5 -> t = 0.7*sqrt(3/0.51) = 1.6977, p ~= 0.1882
    const std::vector<double> x{1.0, 2.0, 3.0, 4.0, 5.0};
    const std::vector<double> y{2.0, 1.0, 4.0, 3.0, 5.0};
    const auto res = diagnostics::pearson(x, y);
    CHECK(res.p_value == doctest::Approx(0.18816).epsilon(1e-3));
  }
}

TEST_CASE("metrics stream reload reproduces the live summary exactly") {
  const std::string dir = "/tmp/recode_test_metrics";
  std::filesystem::create_directories(dir);
  const std::string path = dir + "/episodes.jsonl";
  auto config = env::default_config(Scenario::waypoint);
  config.n_agents = 2;
  config.horizon = 40;
  eval::EvalOptions options;
  options.n_episodes = 5;
  options.seed = 3;
  metrics::JsonlWriter writer(path);
  options.writer = &writer;
  const auto live = eval::run_eval(eval::Controller::handcrafted, nullptr, nullptr, config,
                                   options);
  writer.flush();
  const auto reloaded = eval::summary_from_stream(path);
  CHECK(reloaded.n_episodes == live.summary.n_episodes);
  CHECK(reloaded.mean_reward == live.summary.mean_reward);
  CHECK(reloaded.std_reward == live.summary.std_reward);
  CHECK(reloaded.collisions == live.summary.collisions);
  CHECK(reloaded.success_rate == live.summary.success_rate);
  std::filesystem::remove_all(dir);
}

TEST_CASE("run_eval rejects an empty campaign") {
  auto config = env::default_config(Scenario::waypoint);
  eval::EvalOptions options;
  options.n_episodes = 0;
  CHECK_THROWS_AS(eval::run_eval(eval::Controller::handcrafted, nullptr, nullptr, config,
                                 options),
                  std::invalid_argument);
}

TEST_CASE("tracking construction") {
  auto config = env::default_config(Scenario::narrow_corridor);
  SUBCASE("straight feasible run tracks within epsilon") {
    const auto traj = theory::straight_corridor_trajectory(config, Vec2(0.0, -2.0),
                                                           Vec2(0.0, 0.15), 50);
    const auto res = theory::construct_tracking_params(traj, config, {}, 0.01, 1e4);
    CHECK(res.max_control_error <= 0.01);
    CHECK(res.final_state_deviation <= 0.05);
    REQUIRE(res.thetas.size() == 50);
    for (const auto& theta : res.thetas) CHECK(theta.uncertainty_radius == 0.01);
  }
  SUBCASE("margin violation reports the offending step") {
    // desired speed too close to the bound: no 0.1*M margin
    const auto traj = theory::straight_corridor_trajectory(config, Vec2(0.0, -2.0),
                                                           Vec2(0.0, 0.47), 5);
    CHECK_THROWS_WITH_AS(theory::construct_tracking_params(traj, config, {}, 0.01, 1e4),
                         doctest::Contains("step 0"), std::runtime_error);
  }
  SUBCASE("epsilon larger than needed still tracks") {
    const auto traj = theory::straight_corridor_trajectory(config, Vec2(0.0, -2.0),
                                                           Vec2(0.0, 0.2), 20);
    const auto res = theory::construct_tracking_params(traj, config, {}, 0.2, 1e4);
    CHECK(res.final_state_deviation <= 0.2);
  }
}

TEST_CASE("uncertainty-mitigation bound checks") {
  SUBCASE("analytic equality case") {
    const auto spec = theory::analytic_prop2_spec();
    const auto res = theory::prop2_check(spec, Vec2(0.0, 0.0), 1e6);
    CHECK(res.holds);
    CHECK(res.lhs - spec.q_true(Vec2(0.0, 0.0)) == doctest::Approx(0.2).epsilon(1e-6));
    CHECK((res.u_opt - Vec2(0.0, 0.2)).norm() <= 1e-5);
  }
  SUBCASE("r = 0 reduces to -2eps <= 0") {
    auto spec = theory::analytic_prop2_spec();
    spec.radius = 0.0;
    const auto res = theory::prop2_check(spec, Vec2(0.1, 0.0), 1e6);
    CHECK(res.holds);
    CHECK(res.lhs == doctest::Approx(res.rhs).epsilon(1e-6));
  }
  SUBCASE("perturbed Q* keeps the bound with the 2eps slack") {
    auto spec = theory::analytic_prop2_spec();
    spec.approx_error = 0.05;
    spec.q_true = [](const Vec2& u) { return u.y() + 0.05 * std::sin(7.0 * u.x() - u.y()); };
    const auto res = theory::prop2_check(spec, Vec2(0.0, 0.0), 1e6);
    CHECK(res.holds);
  }
  SUBCASE("ball outside the feasible set is rejected") {
    const auto spec = theory::analytic_prop2_spec();
    CHECK_THROWS_AS(theory::prop2_check(spec, Vec2(0.95, 0.0), 1e6), std::invalid_argument);
  }
  SUBCASE("invariants are validated") {
    auto spec = theory::analytic_prop2_spec();
    spec.flatness_bound = 2.0;  // delta_1 >= delta_2
    CHECK_THROWS_AS(theory::prop2_check(spec, Vec2(0.0, 0.0), 1e6), std::invalid_argument);
  }
}

TEST_CASE("cli exit codes") {
  SUBCASE("unknown flag exits 2") { CHECK(cli::run_cli({"train", "--bogus"}) == 2); }
  SUBCASE("unknown subcommand exits 2") { CHECK(cli::run_cli({"dance"}) == 2); }
  SUBCASE("eval without checkpoint for a trained mode exits 2") {
    CHECK(cli::run_cli({"eval", "--mode", "recode"}) == 2);
  }
  SUBCASE("check prop2 passes and exits 0") { CHECK(cli::run_cli({"check", "prop2"}) == 0); }
  SUBCASE("check with unknown target exits 2") {
    CHECK(cli::run_cli({"check", "prop9"}) == 2);
  }
  SUBCASE("diag b without metrics exits 2") { CHECK(cli::run_cli({"diag", "b"}) == 2); }
}
