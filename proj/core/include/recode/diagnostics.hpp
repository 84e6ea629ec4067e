#pragma once

#include <span>
#include <vector>

namespace recode::diagnostics {

struct CorrelationResult {
  double r = 0.0;
  double p_value = 1.0;
  long long n = 0;
  bool degenerate = false;  // constant series: r reported as 0
};

/// Pearson correlation with a two-sided p-value from the t distribution.
CorrelationResult pearson(std::span<const double> x, std::span<const double> y);

/// One agent-step sample from a ReCoDe run.
struct BSample {
  double b = 0.0;
  double neighbor_count = 0.0;
  double goal_proximity = 0.0;  // −distance-to-goal, larger is closer
};

struct BDiagnostics {
  CorrelationResult b_vs_neighbors;
  CorrelationResult b_vs_goal_proximity;
  long long samples = 0;
};

BDiagnostics b_diagnostics(const std::vector<BSample>& samples);

/// Regularized incomplete beta (used by the t-distribution tail).
double incomplete_beta(double a, double b, double x);

}  // namespace recode::diagnostics
