#include "recode/diagnostics.hpp"

#include <cmath>
#include <stdexcept>

namespace recode::diagnostics {

namespace {

// Lentz continued fraction for the regularized incomplete beta.
double beta_cf(double a, double b, double x) {
  constexpr int kMaxIter = 300;
  constexpr double kEps = 1e-15;
  constexpr double kTiny = 1e-300;
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < kEps) break;
  }
  return h;
}

}  // namespace

double incomplete_beta(double a, double b, double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double ln_front =
      std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) +
      b * std::log1p(-x);
  const double front = std::exp(ln_front);
  if (x < (a + 1.0) / (a + b + 2.0)) {
    return front * beta_cf(a, b, x) / a;
  }
  return 1.0 - front * beta_cf(b, a, 1.0 - x) / b;
}

CorrelationResult pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw std::invalid_argument("pearson: size mismatch");
  CorrelationResult res;
  res.n = static_cast<long long>(x.size());
  if (res.n < 3) {
    res.degenerate = true;
    return res;
  }
  const double n = static_cast<double>(res.n);
  double mx = 0.0, my = 0.0;
  for (size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxx += dx * dx;
    syy += dy * dy;
    sxy += dx * dy;
  }
  if (sxx <= 0.0 || syy <= 0.0) {
    res.degenerate = true;  // constant series
    res.r = 0.0;
    res.p_value = 1.0;
    return res;
  }
  res.r = sxy / std::sqrt(sxx * syy);
  const double r2 = std::min(res.r * res.r, 1.0 - 1e-15);
  const double nu = n - 2.0;
  const double t2 = r2 * nu / (1.0 - r2);
  // two-sided: P(|T| > t) = I_{nu/(nu+t^2)}(nu/2, 1/2)
  res.p_value = incomplete_beta(nu / 2.0, 0.5, nu / (nu + t2));
  return res;
}

BDiagnostics b_diagnostics(const std::vector<BSample>& samples) {
  BDiagnostics out;
  out.samples = static_cast<long long>(samples.size());
  std::vector<double> b, neighbors, proximity;
  b.reserve(samples.size());
  neighbors.reserve(samples.size());
  proximity.reserve(samples.size());
  for (const auto& s : samples) {
    b.push_back(s.b);
    neighbors.push_back(s.neighbor_count);
    proximity.push_back(s.goal_proximity);
  }
  out.b_vs_neighbors = pearson(b, neighbors);
  out.b_vs_goal_proximity = pearson(b, proximity);
  return out;
}

}  // namespace recode::diagnostics
