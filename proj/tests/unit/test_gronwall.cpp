#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "slipflow/error.hpp"
#include "slipflow/gronwall.hpp"

using namespace slipflow;
using namespace slipflow::gronwall;

namespace {

SampledTrajectory sample(double t_final, double h, double (*f)(double), Rule rule = Rule::Trapezoid) {
  SampledTrajectory s;
  s.rule = rule;
  const auto n = static_cast<int>(std::lround(t_final / h));
  for (int k = 0; k <= n; ++k) {
    s.t.push_back(k * h);
    s.y.push_back(f(k * h));
  }
  return s;
}

SampledTrajectory staircase(double y0, double k, double delta, int steps, Rule rule) {
  SampledTrajectory s;
  s.rule = rule;
  for (int n = 0; n <= steps; ++n) {
    s.t.push_back(n * delta);
    s.y.push_back(y0 * std::pow(1.0 + k * delta, -n));
  }
  return s;
}

// All pairs, integral summed afresh for each pair.
bool brute_force_holds(const SampledTrajectory& s, double k, double tol) {
  for (std::size_t i = 0; i < s.size(); ++i) {
    for (std::size_t j = i + 1; j < s.size(); ++j) {
      double integral = 0.0;
      for (std::size_t m = i + 1; m <= j; ++m) {
        const double h = s.t[m] - s.t[m - 1];
        integral += s.rule == Rule::Trapezoid ? 0.5 * h * (s.y[m] + s.y[m - 1]) : h * s.y[m];
      }
      if (s.y[j] > s.y[i] - k * integral + tol) return false;
    }
  }
  return true;
}

}  // namespace

TEST(Hypothesis, ExactExponentialWithCurvatureAllowance) {
  const auto s = sample(5.0, 1e-3, [](double t) { return std::exp(-t); });
  EXPECT_FALSE(check_hypothesis(s, 1.0).holds);
  const auto v = check_hypothesis(s, 1.0, 1.0);
  EXPECT_TRUE(v.holds);
  EXPECT_EQ(v.pairs, s.size() * (s.size() - 1) / 2);
  const auto c = certify_exponential(s, 1.0, v);
  EXPECT_TRUE(c.certified);
  EXPECT_LE(c.worst_margin, 1.0 + 1e-12);
}

TEST(Hypothesis, FasterDecayAndMonotoneInK) {
  const auto s = sample(5.0, 1e-2, [](double t) { return std::exp(-2.0 * t); });
  EXPECT_TRUE(check_hypothesis(s, 1.0).holds);
  EXPECT_TRUE(verify(s, 1.0).bound->certified);
  bool previous = true;
  for (double k = 0.25; k <= 3.0; k += 0.25) {
    const bool now = check_hypothesis(s, k).holds;
    EXPECT_TRUE(previous || !now);
    previous = now;
  }
  EXPECT_FALSE(check_hypothesis(s, 3.0).holds);
}

TEST(Hypothesis, ConstantIsViolatedAtFirstPair) {
  const auto s = sample(1.0, 0.1, [](double) { return 1.0; });
  const auto v = check_hypothesis(s, 1.0);
  EXPECT_FALSE(v.holds);
  EXPECT_EQ(*v.first_s_index, 0u);
  EXPECT_EQ(*v.first_t_index, 1u);
  EXPECT_NEAR(v.first_margin, 0.1 - 1e-9, 1e-12);
  const auto r = verify(s, 1.0);
  EXPECT_FALSE(r.bound.has_value());
  EXPECT_THROW(certify_exponential(s, 1.0, v), AnalysisError);
}

TEST(Hypothesis, AgreesWithBruteForce) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    SampledTrajectory s;
    s.rule = trial % 2 ? Rule::Trapezoid : Rule::RightEndpoint;
    double t = 0.0;
    double y = 1.0;
    for (int k = 0; k < 25; ++k) {
      s.t.push_back(t);
      s.y.push_back(y);
      const double h = 0.01 + 0.1 * u(rng);
      t += h;
      y *= std::exp(-h * (0.5 + 1.5 * u(rng))) * (1.0 + 0.02 * (u(rng) - 0.5));
    }
    const double k = 0.5 + u(rng);
    EXPECT_EQ(check_hypothesis(s, k).holds, brute_force_holds(s, k, 1e-9 * s.y[0])) << "trial " << trial;
  }
}

TEST(Staircase, VerdictMatchesClosedForm) {
  const double k = 2.0;
  const double delta = 0.1;
  const double theta = 1.0 / (1.0 + k * delta);
  // One step of the trapezoid sum is y_{n-1}(theta (1 + K delta / 2) - (1 - K delta / 2)).
  const bool trapezoid_holds = theta * (1.0 + 0.5 * k * delta) <= 1.0 - 0.5 * k * delta;
  const auto trap = staircase(1.0, k, delta, 30, Rule::Trapezoid);
  EXPECT_EQ(check_hypothesis(trap, k).holds, trapezoid_holds);
  EXPECT_FALSE(trapezoid_holds);
  EXPECT_EQ(check_hypothesis(trap, k).holds, brute_force_holds(trap, k, 1e-9));

  // Right-endpoint sum telescopes to exactly zero per step.
  const auto right = staircase(1.0, k, delta, 30, Rule::RightEndpoint);
  const auto v = check_hypothesis(right, k);
  EXPECT_TRUE(v.holds);
  EXPECT_LT(std::abs(v.worst_margin + 1e-9), 1e-14);
  EXPECT_FALSE(verify(right, k).bound->certified);
  EXPECT_NEAR(verify(right, k).theta, theta, 1e-15);
  for (std::size_t n = 0; n < right.size(); ++n) {
    EXPECT_LE(right.y[n], staircase_bound(1.0, k, delta, right.t[n]) * (1.0 + 1e-14));
  }
}

TEST(Staircase, BoundProperties) {
  EXPECT_DOUBLE_EQ(staircase_bound(2.0, 3.0, 0.1, 0.0), 2.0 * 1.3);
  EXPECT_NEAR(staircase_bound(2.0, 1e-300, 0.1, 5.0), 2.0, 1e-15);
  for (double t : {0.0, 0.3, 1.0, 4.0}) {
    for (double delta : {0.5, 0.1, 0.01}) {
      EXPECT_GE(staircase_bound(1.5, 2.0, delta, t), 1.5 * std::exp(-2.0 * t));
    }
  }
  double previous = INFINITY;
  for (double delta : {0.1, 0.01, 0.001}) {
    const double v = staircase_bound(1.0, 1.0, delta, 1.0);
    EXPECT_LT(v, previous);
    const double limit = std::exp(-1.0);
    EXPECT_GT(v, limit);
    EXPECT_LE(v - limit, delta * limit * (1.0 + delta) + delta);
    previous = v;
  }
  EXPECT_THROW(staircase_bound(1.0, 1.0, 0.0, 1.0), AnalysisError);
  EXPECT_THROW(staircase_bound(-1.0, 1.0, 0.1, 1.0), AnalysisError);
}

TEST(SecondDerivative, EstimateCoversExponential) {
  const auto s = sample(3.0, 1e-2, [](double t) { return 4.0 * std::exp(-2.0 * t); });
  const double ypp = estimate_second_derivative_bound(s);
  EXPECT_GE(ypp, 16.0);
  EXPECT_LE(ypp, 40.0);
}

TEST(Trajectory, Validation) {
  SampledTrajectory s;
  EXPECT_THROW(s.validate(), AnalysisError);
  s.t = {0.0, 0.0};
  s.y = {1.0, 1.0};
  EXPECT_THROW(s.validate(), AnalysisError);
  s.t = {0.0, 1.0};
  s.y = {1.0, -1.0};
  EXPECT_THROW(s.validate(), AnalysisError);
  s.y = {1.0, NAN};
  EXPECT_THROW(s.validate(), AnalysisError);
  s.y = {1.0, 0.5};
  EXPECT_NO_THROW(s.validate());
  EXPECT_THROW(check_hypothesis(s, 0.0), AnalysisError);
  EXPECT_THROW(rule_from_string("simpson"), AnalysisError);
  EXPECT_EQ(rule_from_string(to_string(Rule::RightEndpoint)), Rule::RightEndpoint);
}

TEST(Csv, ReadColumns) {
  std::istringstream in("t, E ,other\n0,1,9\n0.5, 0.25 ,9\n\n1,0.0625,9\n");
  const auto s = read_csv(in, "E");
  ASSERT_EQ(s.size(), 3u);
  EXPECT_EQ(s.t[1], 0.5);
  EXPECT_EQ(s.y[2], 0.0625);

  std::istringstream missing("t,E\n0,1\n");
  EXPECT_THROW(read_csv(missing, "E_dev"), AnalysisError);
  std::istringstream bad("t,E\n0,x\n");
  EXPECT_THROW(read_csv(bad, "E"), AnalysisError);
  std::istringstream shortrow("t,E\n0\n");
  EXPECT_THROW(read_csv(shortrow, "E"), AnalysisError);
  std::istringstream empty("");
  EXPECT_THROW(read_csv(empty, "E"), AnalysisError);
}

TEST(Report, Formats) {
  const auto s = sample(1.0, 0.1, [](double) { return 1.0; });
  const auto r = verify(s, 1.0);
  std::ostringstream csv;
  write_report_csv(csv, r);
  EXPECT_EQ(csv.str().substr(0, csv.str().find('\n')),
            "K,hypothesis_ok,bound_ok,worst_margin,first_violation_s,first_violation_t");
  std::ostringstream txt;
  write_report(txt, r);
  EXPECT_NE(txt.str().find("hypothesis_ok = false"), std::string::npos);
  EXPECT_NE(txt.str().find("bound_ok = false"), std::string::npos);
}
