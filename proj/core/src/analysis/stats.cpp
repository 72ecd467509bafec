#include "revsim/analysis/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace revsim::analysis {

namespace {

constexpr double kRelTol = 1e-10;
constexpr int kMaxIterations = 10000;

void require_same_length(std::size_t a, std::size_t b) {
  if (a != b)
    throw AnalysisError(AnalysisError::Kind::length_mismatch,
                        "LengthMismatch(" + std::to_string(a) + " vs " + std::to_string(b) + ")");
}

void require_finite(std::span<const double> xs) {
  for (double x : xs)
    if (!std::isfinite(x)) throw PreconditionError("statistics input contains a non-finite value");
}

double mean_of(std::span<const double> xs) {
  double s = 0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

// Continued fraction for I_x(a, b), modified Lentz evaluation.
double beta_fraction(double a, double b, double x) {
  constexpr double tiny = 1e-300;
  const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < tiny) d = tiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIterations; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kRelTol) return h;
  }
  return h;
}

}  // namespace

double incomplete_beta(double a, double b, double x) {
  if (!(a > 0 && b > 0)) throw PreconditionError("incomplete beta needs a, b > 0");
  if (!(x >= 0.0 && x <= 1.0)) throw PreconditionError("incomplete beta needs x in [0, 1]");
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;
  const double log_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(log_front);
  // The fraction converges fast on the side of the mean; use symmetry otherwise.
  if (x < (a + 1.0) / (a + b + 2.0)) return std::clamp(front * beta_fraction(a, b, x) / a, 0.0, 1.0);
  return std::clamp(1.0 - front * beta_fraction(b, a, 1.0 - x) / b, 0.0, 1.0);
}

double student_t_two_sided(double t, double df) {
  if (!(df > 0)) throw PreconditionError("degrees of freedom must be positive");
  if (std::isnan(t)) throw PreconditionError("t statistic is NaN");
  if (std::isinf(t)) return 0.0;
  const double x = df / (df + t * t);
  return std::clamp(incomplete_beta(df / 2.0, 0.5, x), 0.0, 1.0);
}

StatResult pearson(std::span<const double> xs, std::span<const double> ys) {
  require_same_length(xs.size(), ys.size());
  if (xs.size() < 3)
    throw AnalysisError(AnalysisError::Kind::too_few_points, "TooFewPoints(" + std::to_string(xs.size()) + ")");
  require_finite(xs);
  require_finite(ys);
  const double mx = mean_of(xs), my = mean_of(ys);
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double dx = xs[i] - mx, dy = ys[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) throw AnalysisError(AnalysisError::Kind::degenerate_variance, "DegenerateVariance");
  const double r = std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
  const double df = static_cast<double>(xs.size() - 2);
  StatResult out{r, 0.0, xs.size(), df};
  const double one_minus = 1.0 - r * r;
  if (one_minus > 0.0) {
    const double t = r * std::sqrt(df / one_minus);
    out.p_value = student_t_two_sided(t, df);
  }
  return out;
}

StatResult paired_t(std::span<const double> before, std::span<const double> after) {
  require_same_length(before.size(), after.size());
  if (before.size() < 2)
    throw AnalysisError(AnalysisError::Kind::too_few_points, "TooFewPoints(" + std::to_string(before.size()) + ")");
  require_finite(before);
  require_finite(after);
  std::vector<double> d(before.size());
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = after[i] - before[i];
  const auto n = static_cast<double>(d.size());
  const double df = n - 1.0;
  if (std::all_of(d.begin(), d.end(), [](double x) { return x == 0.0; })) return StatResult{0.0, 1.0, d.size(), df};
  const double md = mean_of(d);
  double ss = 0;
  for (double x : d) ss += (x - md) * (x - md);
  if (ss == 0.0) throw AnalysisError(AnalysisError::Kind::degenerate_variance, "DegenerateVariance");
  const double sd = std::sqrt(ss / df);
  const double t = md / (sd / std::sqrt(n));
  return StatResult{t, student_t_two_sided(t, df), d.size(), df};
}

double quantile_sorted(std::span<const double> sorted, double q) {
  if (sorted.empty()) throw AnalysisError(AnalysisError::Kind::empty, "Empty");
  if (!(q >= 0.0 && q <= 1.0)) throw PreconditionError("quantile must be within [0, 1]");
  const double h = (static_cast<double>(sorted.size()) - 1.0) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  if (lo + 1 >= sorted.size()) return sorted[lo];
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[lo + 1] - sorted[lo]);
}

SummaryStats summary_stats(std::span<const double> xs) {
  if (xs.empty()) throw AnalysisError(AnalysisError::Kind::empty, "Empty");
  require_finite(xs);
  std::vector<double> s(xs.begin(), xs.end());
  std::sort(s.begin(), s.end());
  return SummaryStats{s.front(),
                      quantile_sorted(s, 0.25),
                      quantile_sorted(s, 0.5),
                      quantile_sorted(s, 0.75),
                      s.back(),
                      mean_of(s),
                      s.size()};
}

double threshold_accuracy(std::span<const double> scores, const std::vector<bool>& accepted, double threshold) {
  require_same_length(scores.size(), accepted.size());
  if (scores.empty()) throw AnalysisError(AnalysisError::Kind::empty, "Empty");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) hits += (scores[i] >= threshold) == accepted[i];
  return static_cast<double>(hits) / static_cast<double>(scores.size());
}

}  // namespace revsim::analysis
