#include <doctest.h>

#include <functional>

#include "generators.hpp"
#include "oracles.hpp"
#include "revsim/analysis/error.hpp"
#include "revsim/analysis/stats.hpp"

using namespace revsim;
using namespace revsim::analysis;

namespace {

AnalysisError::Kind kind_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const AnalysisError& e) {
    return e.kind();
  }
  FAIL("no AnalysisError thrown");
  return AnalysisError::Kind::empty;
}

// Correlated pair with a random strength so r covers (-1, 1).
std::pair<std::vector<double>, std::vector<double>> correlated(gen::Gen& g, std::size_t n) {
  const double w = g.real(-1, 1);
  auto xs = g.reals(n, -10, 10);
  std::vector<double> ys(n);
  for (std::size_t i = 0; i < n; ++i) ys[i] = w * xs[i] + (1 - std::abs(w)) * g.real(-10, 10) + 3;
  return {xs, ys};
}

}  // namespace

TEST_CASE("pearson examples") {
  std::vector<double> x{1, 2, 3}, up{2, 4, 6}, down{3, 2, 1};
  auto r = pearson(x, up);
  CHECK(r.statistic == doctest::Approx(1.0));
  CHECK(r.p_value == 0.0);
  CHECK(r.n == 3);
  CHECK(r.df == std::optional<double>(1.0));
  CHECK(pearson(x, down).statistic == doctest::Approx(-1.0));
  CHECK(pearson(x, down).p_value == 0.0);

  std::vector<double> a{1, 2, 3, 4, 5}, b{1, 3, 2, 5, 4};
  auto p = pearson(a, b);
  CHECK(std::abs(p.statistic - 0.8) < 1e-12);
  const double t = 0.8 * std::sqrt(3.0 / (1 - 0.64));
  CHECK(std::abs(p.p_value - oracle::t_two_sided(t, 3)) < 1e-6);
}

TEST_CASE("pearson errors") {
  std::vector<double> a{1, 2, 3}, b{1, 2}, flat{4, 4, 4}, two{1, 2};
  CHECK(kind_of([&] { pearson(a, b); }) == AnalysisError::Kind::length_mismatch);
  CHECK(kind_of([&] { pearson(a, flat); }) == AnalysisError::Kind::degenerate_variance);
  CHECK(kind_of([&] { pearson(flat, a); }) == AnalysisError::Kind::degenerate_variance);
  CHECK(kind_of([&] { pearson(two, two); }) == AnalysisError::Kind::too_few_points);
}

TEST_CASE("pearson agrees with independent oracles on random data") {
  gen::Gen g(81);
  for (int trial = 0; trial < 20; ++trial) {
    auto [xs, ys] = correlated(g, g.size(3, 200));
    auto res = pearson(xs, ys);
    const double r = oracle::pearson_r(xs, ys);
    CHECK(std::abs(res.statistic - r) < 1e-9);
    const double df = static_cast<double>(xs.size() - 2);
    const double t = r * std::sqrt(df / (1 - r * r));
    CHECK(std::abs(res.p_value - oracle::t_two_sided(t, df)) < 1e-6);
  }
}

TEST_CASE("property: pearson is symmetric and affine-invariant") {
  gen::Gen g(82);
  for (int trial = 0; trial < 200; ++trial) {
    auto [xs, ys] = correlated(g, g.size(3, 60));
    const double r = pearson(xs, ys).statistic;
    CHECK(std::abs(r) <= 1.0);
    CHECK(pearson(ys, xs).statistic == doctest::Approx(r).epsilon(1e-12));
    double a = g.real(-5, 5);
    if (std::abs(a) < 0.1) a = 2;
    const double b = g.real(-100, 100);
    auto scaled = xs;
    for (auto& x : scaled) x = a * x + b;
    const double expect = a > 0 ? r : -r;
    CHECK(std::abs(pearson(scaled, ys).statistic - expect) < 1e-9);
    const auto p = pearson(xs, ys).p_value;
    CHECK(p >= 0.0);
    CHECK(p <= 1.0);
  }
}

TEST_CASE("paired t examples") {
  std::vector<double> same{4, 5, 6};
  auto z = paired_t(same, same);
  CHECK(z.statistic == 0.0);
  CHECK(z.p_value == 1.0);

  std::vector<double> before{5, 6}, after{6, 6};
  auto r = paired_t(before, after);
  CHECK(r.statistic == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(r.df == std::optional<double>(1.0));
  CHECK(r.n == 2);
  CHECK(std::abs(r.p_value - oracle::t_two_sided(1.0, 1.0)) < 1e-6);
  CHECK(std::abs(r.p_value - 0.5) < 1e-9);  // Cauchy: P(|T| >= 1) = 1/2

  std::vector<double> fives{5, 5, 5}, sixes{6, 6, 6};
  CHECK(kind_of([&] { paired_t(fives, sixes); }) == AnalysisError::Kind::degenerate_variance);
  std::vector<double> one{1};
  CHECK(kind_of([&] { paired_t(before, fives); }) == AnalysisError::Kind::length_mismatch);
  CHECK(kind_of([&] { paired_t(one, one); }) == AnalysisError::Kind::too_few_points);
}

TEST_CASE("paired t agrees with independent oracles on random data") {
  gen::Gen g(83);
  for (int trial = 0; trial < 20; ++trial) {
    const auto n = g.size(2, 120);
    auto before = g.reals(n, 1, 10);
    std::vector<double> after(n);
    const double shift = g.real(-1, 1);
    for (std::size_t i = 0; i < n; ++i) after[i] = before[i] + shift + g.real(-1, 1);
    auto res = paired_t(before, after);
    auto o = oracle::paired_t(before, after);
    CHECK(res.statistic == doctest::Approx(o.t).epsilon(1e-9));
    CHECK(*res.df == o.df);
    CHECK(std::abs(res.p_value - oracle::t_two_sided(o.t, o.df)) < 1e-6);
  }
}

TEST_CASE("t tail and incomplete beta") {
  CHECK(student_t_two_sided(0, 5) == doctest::Approx(1.0));
  CHECK(student_t_two_sided(1e6, 3) < 1e-12);
  gen::Gen g(84);
  for (int trial = 0; trial < 50; ++trial) {
    const double t = g.real(-8, 8), df = static_cast<double>(g.integer(1, 200));
    CHECK(std::abs(student_t_two_sided(t, df) - oracle::t_two_sided(t, df)) < 1e-6);
  }
  CHECK(incomplete_beta(1, 1, 0.3) == doctest::Approx(0.3));
  CHECK(incomplete_beta(2, 3, 0) == 0.0);
  CHECK(incomplete_beta(2, 3, 1) == 1.0);
  // I_x(a, 1) = x^a.
  CHECK(incomplete_beta(3.5, 1, 0.6) == doctest::Approx(std::pow(0.6, 3.5)).epsilon(1e-10));
}

TEST_CASE("summary statistics") {
  std::vector<double> five{5, 1, 4, 2, 3};
  auto s = summary_stats(five);
  CHECK(s.min == 1);
  CHECK(s.q1 == 2);
  CHECK(s.median == 3);
  CHECK(s.q3 == 4);
  CHECK(s.max == 5);
  CHECK(s.mean == 3);
  CHECK(s.n == 5);
  std::vector<double> seven{7};
  auto t = summary_stats(seven);
  for (double v : {t.min, t.q1, t.median, t.q3, t.max, t.mean}) CHECK(v == 7);
  std::vector<double> four{1, 2, 3, 4};
  CHECK(summary_stats(four).q1 == doctest::Approx(1.75));
  CHECK(summary_stats(four).median == doctest::Approx(2.5));
  CHECK(kind_of([] { summary_stats({}); }) == AnalysisError::Kind::empty);
}

TEST_CASE("summary statistics agree with a sort-based oracle") {
  gen::Gen g(85);
  for (int trial = 0; trial < 100; ++trial) {
    auto xs = g.reals(g.size(1, 100), -50, 50);
    auto s = summary_stats(xs);
    CHECK(std::abs(s.q1 - oracle::quantile(xs, 0.25)) < 1e-12);
    CHECK(std::abs(s.median - oracle::quantile(xs, 0.5)) < 1e-12);
    CHECK(std::abs(s.q3 - oracle::quantile(xs, 0.75)) < 1e-12);
    CHECK(s.min == *std::min_element(xs.begin(), xs.end()));
    CHECK(s.max == *std::max_element(xs.begin(), xs.end()));
  }
  auto hundred = g.reals(100, 0, 10);
  auto s = summary_stats(hundred);
  CHECK(std::abs(s.median - oracle::quantile(hundred, 0.5)) < 1e-12);
}

TEST_CASE("threshold accuracy") {
  std::vector<double> scores{6.0, 5.9, 7.0, 4.0};
  CHECK(threshold_accuracy(scores, {true, false, true, false}, 6.0) == 1.0);
  CHECK(threshold_accuracy(scores, {false, false, true, true}, 6.0) == 0.5);
  CHECK_THROWS_AS(threshold_accuracy(scores, {true}, 6.0), AnalysisError);
}
