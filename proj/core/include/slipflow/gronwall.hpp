#pragma once

// Integral Gronwall inequality on sampled data: from
//   y(t) <= y(s) - K int_s^t y   for all sampled s < t
// conclude y(t) <= y(0) exp(-K t).

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace slipflow::gronwall {

/// How int_{t_i}^{t_j} y is approximated from samples. RightEndpoint uses
/// sum h_k y_{k+1}, which is what the staircase iteration of the proof uses.
enum class Rule { Trapezoid, RightEndpoint };

std::string to_string(Rule rule);
Rule rule_from_string(const std::string& name);

struct SampledTrajectory {
  std::vector<double> t;
  std::vector<double> y;
  Rule rule = Rule::Trapezoid;

  /// Throws AnalysisError unless times strictly increase, values are finite
  /// and non-negative and there is at least one sample.
  void validate() const;
  std::size_t size() const { return t.size(); }
};

struct HypothesisVerdict {
  bool holds = true;
  double worst_margin = 0.0;  // max over i < j of lhs - rhs - tolerance; > 0 means violated
  std::size_t pairs = 0;
  // First violation in order of t_j, paired with the worst s before it.
  std::optional<std::size_t> first_s_index;
  std::optional<std::size_t> first_t_index;
  double first_s = 0.0;
  double first_t = 0.0;
  double first_margin = 0.0;
};

/// Checks y_j <= y_i - K I(i, j) + tol for all i < j with
/// tol = rel_tol y_0 + K ypp h^2 (t_j - t_i) / 12 when a bound ypp on |y''| is
/// given (h the largest step), else rel_tol y_0.
HypothesisVerdict check_hypothesis(const SampledTrajectory& traj, double k, std::optional<double> ypp = std::nullopt,
                                   double rel_tol = 1e-9);

/// (1 + K delta)^(-t / delta) (1 + K delta) y0.
double staircase_bound(double y0, double k, double delta, double t);

struct Certificate {
  bool certified = false;
  double worst_margin = 0.0;  // max_j y_j exp(K t_j) / y_0
  std::size_t worst_index = 0;
};

/// y_j <= y_0 exp(-K t_j) (1 + rel_tol) for all j. Throws AnalysisError when
/// the hypothesis verdict is negative.
Certificate certify_exponential(const SampledTrajectory& traj, double k, const HypothesisVerdict& hypothesis,
                                double rel_tol = 1e-9);

struct GronwallReport {
  double k = 0.0;
  Rule rule = Rule::Trapezoid;
  std::optional<double> ypp;
  HypothesisVerdict hypothesis;
  std::optional<Certificate> bound;  // absent when the hypothesis fails
  double delta = 0.0;  // largest sample spacing
  double theta = 0.0;  // 1 / (1 + K delta)
};

GronwallReport verify(const SampledTrajectory& traj, double k, std::optional<double> ypp = std::nullopt);

/// Largest |y''| from second divided differences, plus twice their largest
/// jump between neighbours to cover the ends of the sample range.
double estimate_second_derivative_bound(const SampledTrajectory& traj);

/// Key = value lines.
void write_report(std::ostream& out, const GronwallReport& report);
/// K,hypothesis_ok,bound_ok,worst_margin,first_violation_s,first_violation_t
void write_report_csv(std::ostream& out, const GronwallReport& report);

/// Reads columns `time_column` and `value_column` from a CSV with a header row.
SampledTrajectory read_csv(std::istream& in, const std::string& value_column, const std::string& time_column = "t");

}  // namespace slipflow::gronwall
