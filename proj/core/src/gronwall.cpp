#include "slipflow/gronwall.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>

#include "slipflow/error.hpp"

namespace slipflow::gronwall {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream is(line);
  while (std::getline(is, cell, ',')) {
    const auto b = cell.find_first_not_of(" \t\r");
    const auto e = cell.find_last_not_of(" \t\r");
    out.push_back(b == std::string::npos ? std::string() : cell.substr(b, e - b + 1));
  }
  return out;
}

std::string format(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.16e", v);
  return buf;
}

double max_step(const SampledTrajectory& traj) {
  double h = 0.0;
  for (std::size_t k = 1; k < traj.size(); ++k) h = std::max(h, traj.t[k] - traj.t[k - 1]);
  return h;
}

}  // namespace

std::string to_string(Rule rule) { return rule == Rule::Trapezoid ? "trapezoid" : "right_endpoint"; }

Rule rule_from_string(const std::string& name) {
  if (name == "trapezoid") return Rule::Trapezoid;
  if (name == "right_endpoint") return Rule::RightEndpoint;
  throw AnalysisError("unknown integration rule '" + name + "'");
}

void SampledTrajectory::validate() const {
  if (t.empty()) throw AnalysisError("empty trajectory");
  if (t.size() != y.size()) throw AnalysisError("time and value columns differ in length");
  for (std::size_t k = 0; k < t.size(); ++k) {
    if (!std::isfinite(t[k]) || !std::isfinite(y[k])) throw AnalysisError("trajectory has non-finite entries");
    if (y[k] < 0.0) throw AnalysisError("trajectory values must be non-negative");
    if (k > 0 && !(t[k] > t[k - 1])) throw AnalysisError("trajectory times must increase strictly");
  }
}

HypothesisVerdict check_hypothesis(const SampledTrajectory& traj, double k, std::optional<double> ypp, double rel_tol) {
  traj.validate();
  if (!(k > 0.0)) throw AnalysisError("K must be positive");
  const std::size_t n = traj.size();
  const double h = max_step(traj);
  const double absolute = rel_tol * traj.y[0];
  const double slope = ypp ? k * std::abs(*ypp) * h * h / 12.0 : 0.0;

  // Violation of (i, j) iff z_j - z_i > absolute with z = y + K P - slope t.
  HypothesisVerdict v;
  v.pairs = n * (n - 1) / 2;
  v.worst_margin = n > 1 ? -INFINITY : 0.0;
  double prefix = 0.0;
  double zmin = traj.y[0] - slope * traj.t[0];
  std::size_t imin = 0;
  for (std::size_t j = 1; j < n; ++j) {
    const double dt = traj.t[j] - traj.t[j - 1];
    prefix += traj.rule == Rule::Trapezoid ? 0.5 * dt * (traj.y[j - 1] + traj.y[j]) : dt * traj.y[j];
    const double z = traj.y[j] + k * prefix - slope * traj.t[j];
    const double margin = z - zmin - absolute;
    v.worst_margin = std::max(v.worst_margin, margin);
    if (margin > 0.0 && v.holds) {
      v.holds = false;
      v.first_s_index = imin;
      v.first_t_index = j;
      v.first_s = traj.t[imin];
      v.first_t = traj.t[j];
      v.first_margin = margin;
    }
    if (z < zmin) {
      zmin = z;
      imin = j;
    }
  }
  return v;
}

double staircase_bound(double y0, double k, double delta, double t) {
  if (!(delta > 0.0) || !(k >= 0.0) || !(t >= 0.0) || !(y0 >= 0.0)) {
    throw AnalysisError("staircase bound needs y0 >= 0, K >= 0, delta > 0, t >= 0");
  }
  const double q = 1.0 + k * delta;
  return std::exp(-(t / delta) * std::log1p(k * delta)) * q * y0;
}

Certificate certify_exponential(const SampledTrajectory& traj, double k, const HypothesisVerdict& hypothesis,
                                double rel_tol) {
  if (!hypothesis.holds) throw AnalysisError("hypothesis of the integral inequality failed; no certificate");
  traj.validate();
  if (!(k > 0.0)) throw AnalysisError("K must be positive");
  Certificate c;
  const double y0 = traj.y[0];
  if (y0 == 0.0) {
    c.certified = std::all_of(traj.y.begin(), traj.y.end(), [](double v) { return v == 0.0; });
    c.worst_margin = c.certified ? 0.0 : INFINITY;
    return c;
  }
  for (std::size_t j = 0; j < traj.size(); ++j) {
    const double m = traj.y[j] * std::exp(k * (traj.t[j] - traj.t[0])) / y0;
    if (m > c.worst_margin) {
      c.worst_margin = m;
      c.worst_index = j;
    }
  }
  c.certified = c.worst_margin <= 1.0 + rel_tol;
  return c;
}

GronwallReport verify(const SampledTrajectory& traj, double k, std::optional<double> ypp) {
  GronwallReport r;
  r.k = k;
  r.rule = traj.rule;
  r.ypp = ypp;
  r.hypothesis = check_hypothesis(traj, k, ypp);
  if (r.hypothesis.holds) r.bound = certify_exponential(traj, k, r.hypothesis);
  r.delta = max_step(traj);
  r.theta = 1.0 / (1.0 + k * r.delta);
  return r;
}

double estimate_second_derivative_bound(const SampledTrajectory& traj) {
  traj.validate();
  std::vector<double> d;
  for (std::size_t k = 2; k < traj.size(); ++k) {
    const double a = (traj.y[k - 1] - traj.y[k - 2]) / (traj.t[k - 1] - traj.t[k - 2]);
    const double b = (traj.y[k] - traj.y[k - 1]) / (traj.t[k] - traj.t[k - 1]);
    d.push_back(2.0 * (b - a) / (traj.t[k] - traj.t[k - 2]));
  }
  double peak = 0.0;
  double jump = 0.0;
  for (std::size_t k = 0; k < d.size(); ++k) {
    peak = std::max(peak, std::abs(d[k]));
    if (k > 0) jump = std::max(jump, std::abs(d[k] - d[k - 1]));
  }
  return peak + 2.0 * jump;
}

void write_report(std::ostream& out, const GronwallReport& r) {
  out << "K = " << format(r.k) << '\n';
  out << "rule = " << to_string(r.rule) << '\n';
  out << "ypp = " << (r.ypp ? format(*r.ypp) : std::string("none")) << '\n';
  out << "pairs_checked = " << r.hypothesis.pairs << '\n';
  out << "hypothesis_ok = " << (r.hypothesis.holds ? "true" : "false") << '\n';
  out << "hypothesis_worst_margin = " << format(r.hypothesis.worst_margin) << '\n';
  if (!r.hypothesis.holds) {
    out << "first_violation_s = " << format(r.hypothesis.first_s) << '\n';
    out << "first_violation_t = " << format(r.hypothesis.first_t) << '\n';
    out << "first_violation_margin = " << format(r.hypothesis.first_margin) << '\n';
  }
  out << "bound_ok = " << (r.bound && r.bound->certified ? "true" : "false") << '\n';
  if (r.bound) out << "worst_margin = " << format(r.bound->worst_margin) << '\n';
  out << "delta = " << format(r.delta) << '\n';
  out << "theta = " << format(r.theta) << '\n';
}

void write_report_csv(std::ostream& out, const GronwallReport& r) {
  out << "K,hypothesis_ok,bound_ok,worst_margin,first_violation_s,first_violation_t\n";
  out << format(r.k) << ',' << (r.hypothesis.holds ? 1 : 0) << ',' << (r.bound && r.bound->certified ? 1 : 0) << ','
      << (r.bound ? format(r.bound->worst_margin) : std::string("nan")) << ','
      << (r.hypothesis.holds ? std::string("nan") : format(r.hypothesis.first_s)) << ','
      << (r.hypothesis.holds ? std::string("nan") : format(r.hypothesis.first_t)) << '\n';
}

SampledTrajectory read_csv(std::istream& in, const std::string& value_column, const std::string& time_column) {
  std::string line;
  if (!std::getline(in, line)) throw AnalysisError("CSV input is empty");
  const auto header = split_csv_line(line);
  auto find = [&](const std::string& name) {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw AnalysisError("CSV has no column '" + name + "'");
    return static_cast<std::size_t>(it - header.begin());
  };
  const std::size_t ct = find(time_column);
  const std::size_t cy = find(value_column);
  SampledTrajectory traj;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() <= std::max(ct, cy)) throw AnalysisError("CSV row " + std::to_string(row) + " is short");
    try {
      traj.t.push_back(std::stod(cells[ct]));
      traj.y.push_back(std::stod(cells[cy]));
    } catch (const std::exception&) {
      throw AnalysisError("CSV row " + std::to_string(row) + " has a non-numeric entry");
    }
  }
  traj.validate();
  return traj;
}

}  // namespace slipflow::gronwall
