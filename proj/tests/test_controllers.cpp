#include "recode/controllers.hpp"
#include "recode/env.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace recode;
using namespace recode::controllers;

namespace {

// residual of normalᵀu ≤ offset at u
double row_residual(const LinearConstraint& row, const Vec2& u) {
  return row.normal.dot(u) - row.offset;
}

ObservationGraph corridor_obs(const Vec2& position, double dir_y,
                              const std::vector<Vec2>& neighbors, const ScenarioSpec& spec) {
  ObservationGraph obs;
  obs.position = position;
  obs.goal_displacement = Vec2(0.0, dir_y);
  obs.bounds_distances =
      Eigen::Vector4d(spec.bounds.x_max - position.x(), spec.bounds.x_max + position.x(),
                      spec.bounds.y_max - position.y(), spec.bounds.y_max + position.y());
  int id = 1;
  for (const Vec2& p : neighbors) {
    EdgeFeature e;
    e.neighbor_id = id++;
    e.rel_position = p - position;
    obs.neighbor_edges.push_back(e);
  }
  return obs;
}

ScenarioSpec corridor_spec() {
  ScenarioSpec spec;
  spec.scenario = Scenario::narrow_corridor;
  spec.bounds = {0.45, 3.2};
  spec.max_speed.max_speed = 0.5;
  spec.cbf = {1.0, 0.25};
  return spec;
}

}  // namespace

TEST_CASE("cbf rows encode the barrier condition") {
  CBFParams params{1.0, 1.0};
  SUBCASE("neighbor ahead on x") {
    auto rows = build_cbf_constraints(Vec2(0, 0), {Vec2(2, 0)}, params);
    REQUIRE(rows.size() == 1);
    // -4 u_x + 3 >= 0, i.e. u_x <= 0.75
    CHECK(row_residual(rows[0], Vec2(0.75, 0.0)) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(row_residual(rows[0], Vec2(0.76, 0.0)) > 0.0);
    CHECK(row_residual(rows[0], Vec2(0.74, 5.0)) < 0.0);
    CHECK(rows[0].hard);
  }
  SUBCASE("no neighbors") { CHECK(build_cbf_constraints(Vec2(0, 0), {}, params).empty()); }
  SUBCASE("neighbor ahead on y mirrors the x case") {
    auto rows = build_cbf_constraints(Vec2(0, 0), {Vec2(0, 2)}, params);
    REQUIRE(rows.size() == 1);
    CHECK(row_residual(rows[0], Vec2(0.0, 0.75)) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(row_residual(rows[0], Vec2(-3.0, 0.74)) < 0.0);
  }
  SUBCASE("coincident positions rejected") {
    CHECK_THROWS_AS(build_cbf_constraints(Vec2(0, 0), {Vec2(0, 0)}, params),
                    std::invalid_argument);
  }
}

TEST_CASE("boundary rows keep the next-step position inside the box") {
  WorldBounds bounds{1.0, 1.0};
  SUBCASE("centered ego") {
    auto rows = build_boundary_constraints(Vec2(0, 0), 0.1, bounds);
    REQUIRE(rows.size() == 4);
    for (const auto& row : rows) CHECK(row.offset == doctest::Approx(10.0));
  }
  SUBCASE("wall contact binds") {
    auto rows = build_boundary_constraints(Vec2(1.0, 0.0), 0.1, bounds);
    CHECK(rows[0].offset == doctest::Approx(0.0));  // u_x <= 0
    CHECK(rows[1].offset == doctest::Approx(20.0));
  }
  SUBCASE("mirror symmetry") {
    auto left = build_boundary_constraints(Vec2(-0.3, 0.2), 0.1, bounds);
    auto right = build_boundary_constraints(Vec2(0.3, 0.2), 0.1, bounds);
    CHECK(left[0].offset == doctest::Approx(right[1].offset));
    CHECK(left[1].offset == doctest::Approx(right[0].offset));
    CHECK(left[2].offset == doctest::Approx(right[2].offset));
  }
  SUBCASE("outside the box rejected") {
    CHECK_THROWS_AS(build_boundary_constraints(Vec2(1.5, 0.0), 0.1, bounds),
                    std::invalid_argument);
  }
}

TEST_CASE("connectivity discs rewritten onto the control") {
  SUBCASE("textbook numbers") {
    auto balls = build_connectivity_constraints(Vec2(0, 0), {Vec2(1, 0)}, 0.1, 1.5);
    REQUIRE(balls.size() == 1);
    CHECK(balls[0].center.x() == doctest::Approx(10.0));
    CHECK(balls[0].center.y() == doctest::Approx(0.0));
    CHECK(balls[0].radius == doctest::Approx(15.0));
    CHECK_FALSE(balls[0].soft());
  }
  SUBCASE("coincident neighbor keeps u = 0 feasible") {
    auto balls = build_connectivity_constraints(Vec2(0.3, 0.2), {Vec2(0.3, 0.2)}, 0.1, 1.5);
    REQUIRE(balls.size() == 1);
    CHECK(balls[0].center.norm() == doctest::Approx(0.0));
    CHECK(balls[0].radius == doctest::Approx(15.0));
  }
  SUBCASE("vacuous") { CHECK(build_connectivity_constraints(Vec2(0, 0), {}, 0.1, 1.5).empty()); }
  SUBCASE("over-range link rejected") {
    CHECK_THROWS_AS(build_connectivity_constraints(Vec2(0, 0), {Vec2(2.0, 0)}, 0.1, 1.5),
                    std::invalid_argument);
  }
}

TEST_CASE("default program objectives") {
  SUBCASE("corridor direction becomes a linear objective") {
    auto spec = corridor_spec();
    auto program = build_default_program(corridor_obs(Vec2(0, 0), 1.0, {}, spec), spec);
    CHECK(program.objective.lin_vector.x() == 0.0);
    CHECK(program.objective.lin_vector.y() == -1.0);
    CHECK(program.objective.quad_matrix.isZero());
    CHECK(program.objective.regularization == doctest::Approx(1e-6));

    auto down = build_default_program(corridor_obs(Vec2(0, 0), -1.0, {}, spec), spec);
    CHECK(down.objective.lin_vector.y() == 1.0);
  }
  SUBCASE("waypoint agent at goal stays put") {
    ScenarioSpec spec;
    spec.scenario = Scenario::waypoint;
    spec.bounds = {1.0, 1.0};
    ObservationGraph obs;
    obs.position = Vec2(0.2, -0.1);
    obs.goal_displacement = Vec2::Zero();
    auto program = build_default_program(obs, spec);
    const auto res = qcqp::solve(program);
    REQUIRE(res.status == qcqp::SolveStatus::optimal);
    CHECK(res.control.norm() <= 1e-6);
  }
  SUBCASE("sensor coverage carries one connectivity disc per edge") {
    ScenarioSpec spec;
    spec.scenario = Scenario::sensor_coverage;
    spec.bounds = {1.5, 1.5};
    auto obs = corridor_obs(Vec2(0, 0), 0.0, {Vec2(0.5, 0.0), Vec2(0.0, -0.6)}, spec);
    obs.goal_displacement = Vec2(0.3, 0.3);
    auto program = build_default_program(obs, spec);
    CHECK(program.balls.size() == 2);
    for (const auto& ball : program.balls) CHECK_FALSE(ball.soft());
  }
}

TEST_CASE("recode augmentation") {
  auto spec = corridor_spec();
  auto obs = corridor_obs(Vec2(0.1, -1.0), 1.0, {Vec2(0.1, -0.5)}, spec);
  const auto base = build_default_program(obs, spec);
  const auto base_solution = qcqp::solve(base);
  REQUIRE(base_solution.status == qcqp::SolveStatus::optimal);

  SUBCASE("wide ball is non-binding") {
    ThetaParams theta{Vec2(0.2, 0.0), 2.0 * spec.max_speed.max_speed};
    const auto res = qcqp::solve(augment_recode(base, theta, 1e3));
    CHECK((res.control - base_solution.control).norm() <= 1e-6);
  }
  SUBCASE("zero radius with a dominant penalty pins the control") {
    const Vec2 a(0.05, -0.2);  // strictly feasible here
    ThetaParams theta{a, 0.0};
    const auto res = qcqp::solve(augment_recode(base, theta, 1e6));
    REQUIRE(res.status == qcqp::SolveStatus::optimal);
    CHECK((res.control - a).norm() <= 1e-4);
    const auto oracle = qcqp::oracle_solve(augment_recode(base, theta, 1e6),
                                           0.005 * spec.max_speed.max_speed);
    CHECK((oracle.control - a).norm() <= 0.005);
  }
  SUBCASE("double augmentation rejected") {
    ThetaParams theta{Vec2(0.0, 0.0), 0.1};
    const auto once = augment_recode(base, theta, 1e3);
    CHECK_THROWS_AS(augment_recode(once, theta, 1e3), std::invalid_argument);
  }
  SUBCASE("hard constraint set is untouched") {
    ThetaParams theta{Vec2(0.3, 0.3), 0.05};
    const auto augmented = augment_recode(base, theta, 1e3);
    REQUIRE(augmented.linear.size() == base.linear.size());
    for (size_t i = 0; i < base.linear.size(); ++i) {
      CHECK(augmented.linear[i].hard == base.linear[i].hard);
      CHECK((augmented.linear[i].normal - base.linear[i].normal).norm() == 0.0);
      CHECK(augmented.linear[i].offset == base.linear[i].offset);
    }
    REQUIRE(augmented.balls.size() == base.balls.size() + 1);
    CHECK(augmented.norm_bound.max_speed == base.norm_bound.max_speed);
  }
  SUBCASE("monotone deference: wide radii recover the default controller") {
    ThetaParams theta{Vec2(-0.3, -0.1), 0.0};
    double prev_err = std::numeric_limits<double>::infinity();
    for (double b : {0.1, 0.4, 1.0}) {
      theta.uncertainty_radius = b;
      const auto res = qcqp::solve(augment_recode(base, theta, 1e4));
      const double err = (res.control - base_solution.control).norm();
      CHECK(err <= prev_err + 1e-6);
      prev_err = err;
    }
    theta.uncertainty_radius = 2.0 * spec.max_speed.max_speed;
    const auto res = qcqp::solve(augment_recode(base, theta, 1e4));
    CHECK((res.control - base_solution.control).norm() <= 1e-6);
  }
}

TEST_CASE("linear augmentation") {
  auto spec = corridor_spec();
  auto obs = corridor_obs(Vec2(0.0, -1.0), 1.0, {}, spec);
  const auto base = build_default_program(obs, spec);
  const auto base_solution = qcqp::solve(base);

  SUBCASE("non-binding when the offset clears the speed bound") {
    LinearTheta theta{Vec2(0.0, 1.0), spec.max_speed.max_speed + 0.1, 1e3};
    const auto res = qcqp::solve(augment_linear(base, theta));
    CHECK((res.control - base_solution.control).norm() <= 1e-6);
  }
  SUBCASE("half-plane semantics") {
    LinearTheta theta{Vec2(0.0, 1.0), 0.0, 1e3};
    const auto res = qcqp::solve(augment_linear(base, theta));
    REQUIRE(res.status == qcqp::SolveStatus::optimal);
    const bool respected = res.control.y() <= 1e-6;
    const bool paid = res.slack_values.size() == 1 && res.slack_values[0] > 0.0;
    CHECK((respected || paid));
  }
  SUBCASE("penalty matches the oracle") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> sym(-1.0, 1.0);
    for (int i = 0; i < 10; ++i) {
      LinearTheta theta{Vec2(sym(rng), sym(rng)).normalized(), 0.1 * sym(rng), 1e2};
      const auto augmented = augment_linear(base, theta);
      const auto res = qcqp::solve(augmented);
      const auto oracle = qcqp::oracle_solve(augmented, 0.005 * spec.max_speed.max_speed);
      CHECK(std::abs(res.objective_value - oracle.objective_value) <= 1e-2);
    }
  }
  SUBCASE("double augmentation rejected") {
    LinearTheta theta{Vec2(1.0, 0.0), 0.0, 1e3};
    CHECK_THROWS_AS(augment_linear(augment_linear(base, theta), theta), std::invalid_argument);
  }
}

TEST_CASE("shielding projects onto the hard-feasible set") {
  auto spec = corridor_spec();
  SUBCASE("feasible action passes through") {
    auto obs = corridor_obs(Vec2(0.0, 0.0), 1.0, {Vec2(0.0, 0.6)}, spec);
    const Vec2 action(0.1, -0.2);
    const auto res = shield(action, obs, spec);
    REQUIRE(res.status == qcqp::SolveStatus::optimal);
    CHECK((res.control - action).norm() <= 1e-6);
  }
  SUBCASE("boundary violation becomes a Euclidean projection") {
    auto obs = corridor_obs(Vec2(0.4, 0.0), 1.0, {}, spec);
    const Vec2 action(0.5, 0.0);  // would cross the +x wall within one step
    const auto res = shield(action, obs, spec);
    REQUIRE(res.status == qcqp::SolveStatus::optimal);
    auto program = build_default_program(obs, spec);
    program.objective.quad_matrix = 2.0 * qcqp::Mat2::Identity();
    program.objective.lin_vector = -2.0 * action;
    program.objective.regularization = 0.0;
    const auto oracle = qcqp::oracle_solve(program, 0.005 * spec.max_speed.max_speed);
    CHECK((res.control - oracle.control).norm() <= 0.01);
    CHECK(res.control.x() == doctest::Approx((spec.bounds.x_max - 0.4) / spec.dt).epsilon(1e-4));
  }
  SUBCASE("no neighbors, in-bound action unchanged") {
    auto obs = corridor_obs(Vec2(0.0, 0.0), 1.0, {}, spec);
    const Vec2 action(0.3, 0.3);
    CHECK((shield(action, obs, spec).control - action).norm() <= 1e-6);
  }
}

TEST_CASE("online-cbf program rebuilds with the learned gain") {
  auto spec = corridor_spec();
  auto obs = corridor_obs(Vec2(0.0, 0.0), 1.0, {Vec2(0.0, 0.4)}, spec);

  SUBCASE("default gain reproduces the default program") {
    const auto program = online_cbf_program(obs, spec.cbf.gain, spec);
    const auto reference = build_default_program(obs, spec);
    REQUIRE(program.linear.size() == reference.linear.size());
    for (size_t i = 0; i < reference.linear.size(); ++i) {
      CHECK(program.linear[i].offset == reference.linear[i].offset);
    }
  }
  SUBCASE("offsets scale linearly in the gain") {
    const auto k1 = online_cbf_program(obs, 1.0, spec);
    const auto k3 = online_cbf_program(obs, 3.0, spec);
    CHECK(k3.linear[0].offset == doctest::Approx(3.0 * k1.linear[0].offset));
  }
  SUBCASE("gain clamp and the tightest admissible approach") {
    const auto program = online_cbf_program(obs, 0.01, spec);  // clamped to 0.1
    const double dist2 = 0.4 * 0.4;
    const double expected = 0.1 * (dist2 - spec.cbf.min_distance * spec.cbf.min_distance);
    CHECK(program.linear[0].offset == doctest::Approx(expected));
  }
}

TEST_CASE("cbf keeps a head-on pair apart in closed loop") {
  auto config = env::default_config(Scenario::narrow_corridor);
  config.n_agents = 2;
  env::WorldState state;
  state.rng.seed(1);
  state.goal_bonus_taken.assign(2, false);
  env::AgentState a;
  a.radius = config.agent_radius;
  a.team = 0;  // heads up
  a.position = Vec2(0.0, -1.0);
  a.goal = Vec2(0.0, 2.7);
  env::AgentState b = a;
  b.team = 1;  // heads down
  b.position = Vec2(0.0, 1.0);
  b.goal = Vec2(0.0, -2.7);
  state.agents = {a, b};

  const auto spec = config.scenario_spec();
  double min_dist = std::numeric_limits<double>::infinity();
  for (int t = 0; t < 100; ++t) {
    const auto graphs = env::observe_all(state, config);
    std::vector<Vec2> controls;
    for (const auto& g : graphs) {
      const auto res = qcqp::solve(build_default_program(g, spec));
      REQUIRE(res.status == qcqp::SolveStatus::optimal);
      controls.push_back(res.control);
    }
    auto [next, result] = env::step(state, controls, config);
    state = std::move(next);
    min_dist = std::min(min_dist, (state.agents[0].position - state.agents[1].position).norm());
    for (const auto& e : result.events) CHECK(e.type != env::EventType::collision);
  }
  CHECK(min_dist >= config.cbf.min_distance - 1e-3);
}
