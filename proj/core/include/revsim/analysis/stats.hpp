#pragma once

#include <optional>
#include <span>
#include <vector>

#include "revsim/analysis/error.hpp"

namespace revsim::analysis {

struct StatResult {
  double statistic = 0.0;  // r or t
  double p_value = 1.0;
  std::size_t n = 0;
  std::optional<double> df;
};

/// Product-moment correlation with a two-sided Student-t p-value (n - 2 df).
StatResult pearson(std::span<const double> xs, std::span<const double> ys);

/// Paired t-test on d = after - before with n - 1 df. All-zero differences
/// give t = 0, p = 1; any other constant difference has no variance and
/// throws degenerate_variance.
StatResult paired_t(std::span<const double> before, std::span<const double> after);

struct SummaryStats {
  double min = 0, q1 = 0, median = 0, q3 = 0, max = 0, mean = 0;
  std::size_t n = 0;
};

// Quartiles by linear interpolation between order statistics.
SummaryStats summary_stats(std::span<const double> xs);
double quantile_sorted(std::span<const double> sorted, double q);

/// Regularized incomplete beta I_x(a, b), continued fraction evaluation.
double incomplete_beta(double a, double b, double x);

// P(|T| >= |t|) for Student t with `df` degrees of freedom.
double student_t_two_sided(double t, double df);

/// Share of items whose predicted label (score >= threshold) matches the
/// recorded outcome.
double threshold_accuracy(std::span<const double> scores, const std::vector<bool>& accepted, double threshold);

}  // namespace revsim::analysis
