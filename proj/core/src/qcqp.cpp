#include "recode/qcqp.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <stdexcept>

namespace recode::qcqp {

namespace {

constexpr double kTinyBallRadius = 1e-9;

// Barrier iterations run in extended precision: stage weights reach ~1e10,
// where double-precision Newton decrements drown in rounding noise.
using Real = long double;
// Stack-allocated up to 8 variables: 2 controls + slacks (and phase-1 tau).
constexpr int kMaxVars = 8;
using VecX = Eigen::Matrix<Real, Eigen::Dynamic, 1, 0, kMaxVars, 1>;
using MatX = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxVars, kMaxVars>;
using Vec2R = Eigen::Matrix<Real, 2, 1>;

struct AffineRow {
  VecX a;
  Real b;
};

// ‖E x + f‖ ≤ gᵀx + h
struct SocBlock {
  VecX g;
  Real h;
  Eigen::Matrix<Real, 2, Eigen::Dynamic, 0, 2, kMaxVars> E;
  Vec2R f;
};

struct ConeForm {
  int n = 2;
  MatX Q;  // scaled quadratic term
  VecX c;  // scaled linear term
  Real omega = 1.0;
  std::vector<AffineRow> rows;
  std::vector<SocBlock> socs;

  Real theta() const {
    return static_cast<Real>(rows.size()) + 2.0L * static_cast<Real>(socs.size());
  }
};

void validate(const ConvexProgram& p) {
  auto finite2 = [](const Vec2& v) { return v.allFinite(); };
  if (!p.objective.quad_matrix.allFinite() || !finite2(p.objective.lin_vector) ||
      !std::isfinite(p.objective.regularization) || p.objective.regularization < 0.0) {
    throw std::invalid_argument("qcqp: invalid objective");
  }
  if (!(p.norm_bound.max_speed > 0.0) || !std::isfinite(p.norm_bound.max_speed)) {
    throw std::invalid_argument("qcqp: norm bound must be positive");
  }
  for (const auto& row : p.linear) {
    if (!finite2(row.normal) || row.normal.norm() == 0.0 || !std::isfinite(row.offset)) {
      throw std::invalid_argument("qcqp: degenerate linear constraint");
    }
    if (!row.hard && !(row.slack_penalty > 0.0)) {
      throw std::invalid_argument("qcqp: soft linear row needs positive slack penalty");
    }
  }
  for (const auto& ball : p.balls) {
    if (!finite2(ball.center) || !(ball.radius >= 0.0) || !std::isfinite(ball.radius)) {
      throw std::invalid_argument("qcqp: degenerate ball constraint");
    }
    if (ball.slack_penalty && !(*ball.slack_penalty > 0.0)) {
      throw std::invalid_argument("qcqp: soft ball needs positive slack penalty");
    }
  }
}

// Slack ordering: soft balls in declaration order, then soft linear rows.
std::vector<double> slack_penalties(const ConvexProgram& p) {
  std::vector<double> lambdas;
  for (const auto& ball : p.balls) {
    if (ball.soft()) lambdas.push_back(*ball.slack_penalty);
  }
  for (const auto& row : p.linear) {
    if (!row.hard) lambdas.push_back(row.slack_penalty);
  }
  return lambdas;
}

ConeForm build_cone_form(const ConvexProgram& p) {
  const std::vector<double> lambdas = slack_penalties(p);
  const int n_slack = static_cast<int>(lambdas.size());
  ConeForm cf;
  cf.n = 2 + n_slack;

  Mat2 quad = 0.5 * (p.objective.quad_matrix + p.objective.quad_matrix.transpose());
  quad += p.objective.regularization * Mat2::Identity();

  cf.Q = MatX::Zero(cf.n, cf.n);
  cf.Q.topLeftCorner<2, 2>() = quad.cast<Real>();
  cf.c = VecX::Zero(cf.n);
  cf.c.head<2>() = p.objective.lin_vector.cast<Real>();
  for (int k = 0; k < n_slack; ++k) cf.c(2 + k) = static_cast<Real>(lambdas[k]);

  cf.omega = std::max({Real(1.0), cf.Q.cwiseAbs().maxCoeff(), cf.c.cwiseAbs().maxCoeff()});
  cf.Q /= cf.omega;
  cf.c /= cf.omega;

  Eigen::Matrix<Real, 2, Eigen::Dynamic, 0, 2, kMaxVars> E_u(2, cf.n);
  E_u.setZero();
  E_u.leftCols<2>().setIdentity();

  int slack_idx = 0;
  for (const auto& ball : p.balls) {
    SocBlock soc;
    soc.E = E_u;
    soc.f = -ball.center.cast<Real>();
    soc.g = VecX::Zero(cf.n);
    soc.h = static_cast<Real>(ball.radius);
    if (ball.soft()) {
      soc.g(2 + slack_idx) = 1.0;
      AffineRow nonneg;
      nonneg.a = VecX::Zero(cf.n);
      nonneg.a(2 + slack_idx) = -1.0;
      nonneg.b = 0.0;
      cf.rows.push_back(std::move(nonneg));
      ++slack_idx;
    }
    cf.socs.push_back(std::move(soc));
  }
  for (const auto& row : p.linear) {
    AffineRow r;
    r.a = VecX::Zero(cf.n);
    r.a.head<2>() = row.normal.cast<Real>();
    r.b = static_cast<Real>(row.offset);
    if (!row.hard) {
      r.a(2 + slack_idx) = -1.0;
      AffineRow nonneg;
      nonneg.a = VecX::Zero(cf.n);
      nonneg.a(2 + slack_idx) = -1.0;
      nonneg.b = 0.0;
      cf.rows.push_back(std::move(nonneg));
      ++slack_idx;
    }
    cf.rows.push_back(std::move(r));
  }
  {
    SocBlock norm;
    norm.E = E_u;
    norm.f = Vec2R::Zero();
    norm.g = VecX::Zero(cf.n);
    norm.h = static_cast<Real>(p.norm_bound.max_speed);
    cf.socs.push_back(std::move(norm));
  }
  return cf;
}

Real smallest_margin(const ConeForm& cf, const VecX& x) {
  Real m = std::numeric_limits<Real>::infinity();
  for (const auto& r : cf.rows) m = std::min(m, r.b - r.a.dot(x));
  for (const auto& s : cf.socs) {
    const Real t = s.g.dot(x) + s.h;
    const Vec2R z = s.E * x + s.f;
    m = std::min(m, t - z.norm());
  }
  return m;
}

Real merit(const ConeForm& cf, Real kappa, const VecX& x) {
  Real value = kappa * (Real(0.5) * x.dot(cf.Q * x) + cf.c.dot(x));
  for (const auto& r : cf.rows) {
    const Real margin = r.b - r.a.dot(x);
    if (!(margin > 0.0)) return std::numeric_limits<Real>::infinity();
    value -= std::log(margin);
  }
  for (const auto& s : cf.socs) {
    const Real t = s.g.dot(x) + s.h;
    const Vec2R z = s.E * x + s.f;
    const Real psi = t * t - z.squaredNorm();
    if (!(psi > 0.0) || !(t > 0.0)) return std::numeric_limits<Real>::infinity();
    value -= std::log(psi);
  }
  return value;
}

// One barrier centering stage: damped Newton (feasibility pullback + Armijo)
// switching to full steps in the quadratic regime. Returns the best squared
// Newton decrement seen.
Real center(const ConeForm& cf, Real kappa, VecX& x, int max_inner,
            Real dec_target = Real(1e-16)) {
  const int n = cf.n;
  Real best_dec = std::numeric_limits<Real>::infinity();
  for (int it = 0; it < max_inner; ++it) {
    VecX grad = kappa * (cf.Q * x + cf.c);
    MatX hess = kappa * cf.Q;
    for (const auto& r : cf.rows) {
      const Real d = Real(1.0) / (r.b - r.a.dot(x));
      grad.noalias() += r.a * d;
      hess.noalias() += (d * d) * (r.a * r.a.transpose());
    }
    for (const auto& s : cf.socs) {
      const Real t = s.g.dot(x) + s.h;
      const Vec2R z = s.E * x + s.f;
      const Real psi = t * t - z.squaredNorm();
      VecX dpsi = Real(2.0) * t * s.g - Real(2.0) * (s.E.transpose() * z);
      grad.noalias() -= dpsi / psi;
      hess.noalias() += (dpsi * dpsi.transpose()) / (psi * psi);
      hess.noalias() += (Real(2.0) / psi) * (s.E.transpose() * s.E);
      hess.noalias() -= (Real(2.0) / psi) * (s.g * s.g.transpose());
    }
    if (!grad.allFinite() || !hess.allFinite()) break;

    VecX step;
    Real dec_sq = -1.0;
    Real ridge = 0.0;
    for (int attempt = 0; attempt < 4; ++attempt) {
      Eigen::LDLT<MatX> ldlt(hess + ridge * MatX::Identity(n, n));
      step = -ldlt.solve(grad);
      if (step.allFinite()) {
        dec_sq = -grad.dot(step);
        if (dec_sq > 0.0) break;
      }
      ridge = (ridge == 0.0) ? hess.trace() * Real(1e-16) + Real(1e-18) : ridge * Real(1e4);
    }
    if (!(dec_sq > 0.0)) break;
    best_dec = std::min(best_dec, dec_sq);
    if (dec_sq * 0.5 < dec_target) return best_dec;

    Real tstep = 1.0;
    while (tstep > Real(1e-18) && smallest_margin(cf, x + tstep * step) <= 0.0) tstep *= 0.7;
    if (tstep <= Real(1e-18)) break;

    // inside the Dikin ellipsoid full Newton steps converge quadratically;
    // Armijo is only needed while the decrement is large
    if (dec_sq > Real(0.0625)) {
      const Real f0 = merit(cf, kappa, x);
      const Real slope = grad.dot(step);
      int ls = 0;
      while (ls++ < 80) {
        if (merit(cf, kappa, x + tstep * step) <= f0 + Real(0.25) * tstep * slope) break;
        tstep *= 0.5;
      }
      if (ls >= 80) break;
    }
    x += tstep * step;
  }
  return best_dec;
}

// Minimize tau subject to all hard constraints relaxed by tau; returns a
// strictly feasible control, or nothing when the hard set is (near-)empty.
std::optional<Vec2> phase1(const ConvexProgram& p, const SolverOptions& opts) {
  ConeForm cf;
  cf.n = 3;
  cf.Q = MatX::Zero(3, 3);
  cf.c = VecX::Zero(3);
  cf.c(2) = 1.0;

  Eigen::Matrix<Real, 2, Eigen::Dynamic, 0, 2, kMaxVars> E_u(2, 3);
  E_u.setZero();
  E_u.leftCols<2>().setIdentity();

  Real tau0 = 0.0;
  for (const auto& row : p.linear) {
    if (!row.hard) continue;
    AffineRow r;
    r.a = VecX::Zero(3);
    r.a.head<2>() = row.normal.cast<Real>();
    r.a(2) = -1.0;
    r.b = static_cast<Real>(row.offset);
    tau0 = std::max(tau0, static_cast<Real>(-row.offset));
    cf.rows.push_back(std::move(r));
  }
  for (const auto& ball : p.balls) {
    if (ball.soft()) continue;
    SocBlock s;
    s.E = E_u;
    s.f = -ball.center.cast<Real>();
    s.g = VecX::Zero(3);
    s.g(2) = 1.0;
    s.h = static_cast<Real>(ball.radius);
    tau0 = std::max(tau0, static_cast<Real>(ball.center.norm() - ball.radius));
    cf.socs.push_back(std::move(s));
  }
  {
    SocBlock s;
    s.E = E_u;
    s.f = Vec2R::Zero();
    s.g = VecX::Zero(3);
    s.g(2) = 1.0;
    s.h = static_cast<Real>(p.norm_bound.max_speed);
    cf.socs.push_back(std::move(s));
  }

  VecX x = VecX::Zero(3);
  x(2) = tau0 + 1.0;

  Real kappa = 1.0;
  for (int outer = 0; outer < opts.max_outer; ++outer) {
    const bool last_stage = cf.theta() / (kappa * static_cast<Real>(opts.mu)) < Real(1e-11);
    center(cf, kappa, x, opts.max_inner, last_stage ? Real(1e-16) : Real(1e-4));
    if (x(2) <= Real(-1e-4)) return Vec2(x.head<2>().cast<double>());
    if (cf.theta() / kappa < Real(1e-11)) break;
    kappa *= static_cast<Real>(opts.mu);
  }
  if (x(2) <= Real(-1e-9)) return Vec2(x.head<2>().cast<double>());
  return std::nullopt;
}

SolveResult finish(const ConvexProgram& p, const Vec2& u, SolveStatus status) {
  SolveResult res;
  res.control = u;
  res.status = status;
  res.slack_values = slacks_at(p, u);
  res.objective_value = exact_penalty_value(p, u);
  return res;
}

SolveResult failure_result(const Vec2& u = Vec2::Zero()) {
  SolveResult res;
  res.control = u;
  res.status = SolveStatus::numerical_failure;
  res.objective_value = std::numeric_limits<double>::quiet_NaN();
  return res;
}

SolveResult infeasible_result() {
  SolveResult res;
  res.status = SolveStatus::infeasible_hard;
  res.objective_value = std::numeric_limits<double>::quiet_NaN();
  return res;
}

// A hard ball of (near-)zero radius pins the control to its center; the
// barrier cannot represent an empty interior, so resolve these directly.
std::optional<SolveResult> solve_degenerate(const ConvexProgram& p) {
  const BallConstraint* pin = nullptr;
  for (const auto& ball : p.balls) {
    if (!ball.soft() && ball.radius <= kTinyBallRadius) {
      pin = &ball;
      break;
    }
  }
  if (pin == nullptr) return std::nullopt;
  const Vec2 u = pin->center;
  if (max_hard_residual(p, u) <= 1e-6) return finish(p, u, SolveStatus::optimal);
  return infeasible_result();
}

}  // namespace

int ConvexProgram::slack_count() const {
  int count = 0;
  for (const auto& ball : balls) {
    if (ball.soft()) ++count;
  }
  for (const auto& row : linear) {
    if (!row.hard) ++count;
  }
  return count;
}

std::string to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::optimal: return "optimal";
    case SolveStatus::infeasible_hard: return "infeasible_hard";
    case SolveStatus::numerical_failure: return "numerical_failure";
  }
  return "unknown";
}

double exact_penalty_value(const ConvexProgram& p, const Vec2& u) {
  double value = p.objective.value(u);
  for (const auto& ball : p.balls) {
    if (ball.soft()) {
      value += *ball.slack_penalty * std::max(0.0, (u - ball.center).norm() - ball.radius);
    }
  }
  for (const auto& row : p.linear) {
    if (!row.hard) {
      value += row.slack_penalty * std::max(0.0, row.normal.dot(u) - row.offset);
    }
  }
  return value;
}

double max_hard_residual(const ConvexProgram& p, const Vec2& u) {
  double res = u.norm() - p.norm_bound.max_speed;
  for (const auto& row : p.linear) {
    if (row.hard) res = std::max(res, row.normal.dot(u) - row.offset);
  }
  for (const auto& ball : p.balls) {
    if (!ball.soft()) res = std::max(res, (u - ball.center).norm() - ball.radius);
  }
  return res;
}

std::vector<double> slacks_at(const ConvexProgram& p, const Vec2& u) {
  std::vector<double> slacks;
  for (const auto& ball : p.balls) {
    if (ball.soft()) slacks.push_back(std::max(0.0, (u - ball.center).norm() - ball.radius));
  }
  for (const auto& row : p.linear) {
    if (!row.hard) slacks.push_back(std::max(0.0, row.normal.dot(u) - row.offset));
  }
  return slacks;
}

namespace {

// Runs the barrier ladder from a strictly hard-feasible start. Returns the
// control or nothing on numerical failure.
std::optional<Vec2> barrier_minimize(const ConvexProgram& program, const Vec2& u0,
                                     const SolverOptions& opts) {
  ConeForm cf = build_cone_form(program);
  VecX x = VecX::Zero(cf.n);
  x.head<2>() = u0.cast<Real>();
  {
    const std::vector<double> s0 = slacks_at(program, u0);
    const double pad = 0.5 * std::max(1.0, program.norm_bound.max_speed);
    for (size_t k = 0; k < s0.size(); ++k) x(2 + static_cast<int>(k)) = s0[k] + pad;
  }
  if (smallest_margin(cf, x) <= 0.0) return std::nullopt;

  // normalized coefficients make the initial gap O(1), so start near theta
  Real kappa = std::max(Real(1.0), cf.theta());
  Real final_dec = std::numeric_limits<Real>::infinity();
  for (int outer = 0; outer < opts.max_outer; ++outer) {
    const bool last_stage =
        cf.theta() / kappa < static_cast<Real>(opts.gap_tol) * static_cast<Real>(opts.mu);
    final_dec = center(cf, kappa, x, opts.max_inner, last_stage ? Real(1e-16) : Real(1e-4));
    if (cf.theta() / kappa < static_cast<Real>(opts.gap_tol)) break;
    kappa *= static_cast<Real>(opts.mu);
  }
  if (!x.allFinite() || !(final_dec < Real(1e-8))) return std::nullopt;
  return Vec2(x.head<2>().cast<double>());
}

// Strips constraints that are strictly inactive at u. Keeping only the local
// geometry makes the solution independent of far-away constraints, which
// matters for nearly flat (regularized linear) objectives.
ConvexProgram drop_inactive(const ConvexProgram& p, const Vec2& u, bool* dropped) {
  const double tol = 1e-3 * std::max(1.0, p.norm_bound.max_speed);
  ConvexProgram reduced;
  reduced.objective = p.objective;
  reduced.norm_bound = p.norm_bound;
  *dropped = false;
  for (const auto& row : p.linear) {
    if (row.normal.dot(u) - row.offset < -tol) {
      *dropped = true;
    } else {
      reduced.linear.push_back(row);
    }
  }
  for (const auto& ball : p.balls) {
    if ((u - ball.center).norm() - ball.radius < -tol) {
      *dropped = true;
    } else {
      reduced.balls.push_back(ball);
    }
  }
  return reduced;
}

}  // namespace

SolveResult solve(const ConvexProgram& program, const SolverOptions& opts) {
  validate(program);

  if (auto degenerate = solve_degenerate(program)) return *degenerate;

  // Strictly feasible start; u = 0 covers every environment-built program.
  Vec2 u0 = Vec2::Zero();
  const double margin0 = 1e-6 * std::max(1.0, program.norm_bound.max_speed);
  if (max_hard_residual(program, u0) > -margin0) {
    auto found = phase1(program, opts);
    if (!found) return infeasible_result();
    u0 = *found;
  }

  auto u1 = barrier_minimize(program, u0, opts);
  if (!u1) return failure_result(u0);

  bool dropped = false;
  const ConvexProgram reduced = drop_inactive(program, *u1, &dropped);
  if (dropped) {
    if (auto u2 = barrier_minimize(reduced, *u1, opts)) u1 = u2;
  }
  return finish(program, *u1, SolveStatus::optimal);
}

std::vector<SolveResult> batch_solve(std::span<const ConvexProgram> programs,
                                     const SolverOptions& opts) {
  std::vector<SolveResult> results;
  results.reserve(programs.size());
  for (const auto& program : programs) {
    try {
      results.push_back(solve(program, opts));
    } catch (const std::invalid_argument&) {
      results.push_back(failure_result());
    }
  }
  return results;
}

SolveResult oracle_solve(const ConvexProgram& program, double grid_resolution) {
  validate(program);
  const double M = program.norm_bound.max_speed;
  if (!(grid_resolution > 0.0) || grid_resolution > 0.01 * M) {
    throw std::invalid_argument("oracle_solve: grid_resolution must be in (0, 0.01*M]");
  }
  const double slop = 1.1 * grid_resolution;
  const int steps = static_cast<int>(std::floor(2.0 * M / grid_resolution + 1e-9));

  bool found = false;
  Vec2 best = Vec2::Zero();
  double best_value = std::numeric_limits<double>::infinity();
  for (int ix = 0; ix <= steps; ++ix) {
    const double ux = -M + ix * grid_resolution;
    for (int iy = 0; iy <= steps; ++iy) {
      const Vec2 u(ux, -M + iy * grid_resolution);
      if (max_hard_residual(program, u) > slop) continue;
      const double value = exact_penalty_value(program, u);
      if (value < best_value) {
        best_value = value;
        best = u;
        found = true;
      }
    }
  }
  if (!found) return infeasible_result();
  return finish(program, best, SolveStatus::optimal);
}

}  // namespace recode::qcqp
