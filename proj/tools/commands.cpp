#include "commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <sstream>

#include "config.hpp"
#include "manifest.hpp"
#include "slipflow/dynamics.hpp"
#include "slipflow/error.hpp"
#include "slipflow/geometry.hpp"
#include "slipflow/gronwall.hpp"
#include "slipflow/operators.hpp"
#include "svg.hpp"

namespace slipflow::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr double kResidualTolerance = 1e-9;
constexpr double kPairingTolerance = 1e-8;

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fmt(const Vec3& v) { return fmt(v.x()) + " " + fmt(v.y()) + " " + fmt(v.z()); }

json to_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

/// Config plus command-line overrides. A config is mandatory for every
/// command except verify.
ExperimentConfig resolve_config(const GlobalOptions& global) {
  if (!global.config) throw ConfigError("--config is required");
  auto c = load_config(*global.config);
  if (global.out) c.output_dir = *global.out;
  if (global.seed) c.run.u0.seed = *global.seed;
  if (global.plot) c.plot = true;
  refresh_resolved(c);
  return c;
}

json resolved_json(const ExperimentConfig& c) {
  json j = json::object();
  for (const auto& [section, keys] : c.resolved) {
    for (const auto& [key, value] : keys) j[section][key] = value;
  }
  return j;
}

/// Runs `body` and maps library exceptions to exit codes. The manifest, if
/// any, records the failure and is written in every case.
int guarded(const std::string& command, const GlobalOptions& global, int analysis_code,
            const std::function<int(std::unique_ptr<Manifest>&)>& body) {
  std::unique_ptr<Manifest> manifest;
  int code = exit_code::kOk;
  std::string kind;
  std::string message;
  try {
    code = body(manifest);
  } catch (const ConfigError& e) {
    code = exit_code::kConfig, kind = "config", message = e.what();
  } catch (const GeometryError& e) {
    code = exit_code::kGeometry, kind = "geometry", message = e.what();
  } catch (const SolverError& e) {
    code = exit_code::kSolver, kind = "solver", message = e.what();
  } catch (const InstabilityError& e) {
    code = exit_code::kInstability, kind = "instability", message = e.what();
  } catch (const AnalysisError& e) {
    code = analysis_code, kind = "analysis", message = e.what();
  } catch (const BasisError& e) {
    code = exit_code::kConfig, kind = "basis", message = e.what();
  } catch (const OperatorError& e) {
    code = exit_code::kConfig, kind = "operator", message = e.what();
  } catch (const std::exception& e) {
    code = exit_code::kFailure, kind = "internal", message = e.what();
  }
  if (!message.empty()) std::cerr << "slipflow " << command << ": " << kind << " error: " << message << "\n";
  if (!manifest && code == exit_code::kConfig && global.out) manifest = std::make_unique<Manifest>(*global.out, command);
  if (manifest) {
    if (!message.empty()) manifest->set_error(kind, message);
    manifest->set_exit_code(code);
    try {
      manifest->write();
    } catch (const std::exception& e) {
      std::cerr << "slipflow " << command << ": cannot write manifest: " << e.what() << "\n";
      if (code == exit_code::kOk) code = exit_code::kFailure;
    }
  }
  return code;
}

void write_text(Manifest& manifest, const fs::path& dir, const std::string& name, const std::string& content) {
  fs::create_directories(dir);
  write_atomic(dir / name, content);
  manifest.add_file(name);
}

/// The Galerkin solver is built on a ball centred at the origin.
void require_solver_geometry(const ExperimentConfig& c) {
  c.geometry.validate();
  const auto* ball = c.geometry.as_ball();
  if (!ball) throw GeometryError("the solver supports only ball geometry, got " + c.geometry.kind_name());
  if (ball->center.norm() != 0.0) throw GeometryError("the solver requires a ball centred at the origin");
}

double max_relative_difference(const Matrix& a, const Matrix& b) {
  const double scale = std::max(a.cwiseAbs().maxCoeff(), b.cwiseAbs().maxCoeff());
  return scale > 0.0 ? (a - b).cwiseAbs().maxCoeff() / scale : 0.0;
}

double kernel_angle(const operators::OperatorSet& ops) {
  const int nulls = ops.null_count();
  if (nulls != 3) return std::nan("");
  Matrix k(static_cast<Eigen::Index>(ops.size()), 3);
  for (int i = 0; i < 3; ++i) k.col(i) = ops.kernel[static_cast<std::size_t>(i)];
  return operators::max_principal_angle_sine(ops.spectrum.vectors.leftCols(3), k, ops.mass);
}

}  // namespace

int cmd_geometry(const GlobalOptions& global) {
  return guarded("geometry", global, exit_code::kFailure, [&](std::unique_ptr<Manifest>& manifest) {
    const auto c = resolve_config(global);
    const fs::path dir = c.output_dir;
    manifest = std::make_unique<Manifest>(dir, "geometry");
    manifest->config() = resolved_json(c);
    c.geometry.validate();

    const auto cls = geometry::ker_s_classification(c.geometry);
    const auto ext = geometry::curvature_extrema(c.geometry);

    std::ostringstream os;
    os << "kind = " << c.geometry.kind_name() << "\n";
    os << "ker_s_dimension = " << cls.dimension << "\n";
    if (cls.center) os << "center = " << fmt(*cls.center) << "\n";
    if (cls.axis) os << "axis = " << fmt(*cls.axis) << "\n";
    if (cls.axis_point) os << "axis_point = " << fmt(*cls.axis_point) << "\n";
    for (std::size_t i = 0; i < cls.generators.size(); ++i) {
      const auto& g = cls.generators[i];
      os << "generator_" << i + 1 << " = translation " << fmt(g.translation) << " angular " << fmt(g.angular) << "\n";
    }
    os << "lambda_bound = " << fmt(ext.lambda) << "\n";
    os << "curvature_min = " << fmt(ext.min_k) << "\n";
    os << "curvature_max = " << fmt(ext.max_k) << "\n";
    os << "tangency_singular_values =";
    for (double s : cls.singular_values) os << " " << fmt(s);
    os << "\n";
    write_text(*manifest, dir, "geometry_report.txt", os.str());

    auto& d = manifest->derived();
    d["ker_s_dimension"] = cls.dimension;
    d["lambda_bound"] = ext.lambda;
    d["curvature_min"] = ext.min_k;
    d["curvature_max"] = ext.max_k;
    if (cls.axis) d["axis"] = to_json(*cls.axis);
    if (cls.center) d["center"] = to_json(*cls.center);
    std::cout << "ker_s_dimension = " << cls.dimension << "\n";
    return exit_code::kOk;
  });
}

int cmd_spectrum(const GlobalOptions& global) {
  return guarded("spectrum", global, exit_code::kFailure, [&](std::unique_ptr<Manifest>& manifest) {
    const auto c = resolve_config(global);
    const fs::path dir = c.output_dir;
    manifest = std::make_unique<Manifest>(dir, "spectrum");
    manifest->config() = resolved_json(c);
    require_solver_geometry(c);

    const auto ops = operators::build_operator_set(c.operator_options(false));
    const auto& pc = ops.poincare;
    const double sigma1 = ops.sigma1();
    const int nulls = ops.null_count();
    const double equivalence = max_relative_difference(ops.form_du, ops.form_su);

    {
      std::ostringstream os;
      operators::write_spectrum_csv(os, ops.spectrum);
      write_text(*manifest, dir, "spectrum.csv", os.str());
    }

    std::optional<double> mu1_refined;
    if (c.refine_l_max) {
      auto opts = c.operator_options(false);
      opts.l_max = *c.refine_l_max;
      opts.bilinear.reset();
      opts.nonlinear.reset();
      mu1_refined = operators::build_operator_set(opts).poincare.mu1;
    }

    std::ostringstream os;
    os << "N = " << ops.size() << "\n";
    os << "mu1 = " << fmt(pc.mu1) << "\n";
    os << "C = " << fmt(pc.C) << "\n";
    os << "C_beta = " << fmt(ops.c_beta) << "\n";
    os << "sigma1 = " << fmt(sigma1) << "\n";
    os << "lambda_bound = " << fmt(ops.lambda_bound) << "\n";
    os << "min_alpha = " << fmt(ops.friction.min) << "\n";
    os << "max_alpha = " << fmt(ops.friction.max) << "\n";
    os << "c_classical = " << fmt(pc.c_classical) << "\n";
    os << "korn_ratio = " << fmt(pc.korn_ratio) << "\n";
    os << "null_eigenvalues = " << nulls << "\n";
    if (nulls == 3) os << "kernel_angle_sine = " << fmt(kernel_angle(ops)) << "\n";
    os << "first_positive_eigenvalue = " << fmt(ops.spectrum.values(ops.first_positive())) << "\n";
    os << "eigen_residual = " << fmt(ops.spectrum.residual) << "\n";
    os << "m_orthonormality = " << fmt(ops.spectrum.m_orthonormality) << "\n";
    os << "mass_condition = " << fmt(ops.mass_condition) << "\n";
    os << "form_equivalence = " << fmt(equivalence) << "\n";
    if (mu1_refined) {
      os << "refine_l_max = " << *c.refine_l_max << "\n";
      os << "mu1_refined = " << fmt(*mu1_refined) << "\n";
      os << "mu1_relative_change = " << fmt(std::abs(*mu1_refined - pc.mu1) / pc.mu1) << "\n";
    }
    for (const auto& w : ops.warnings) os << "warning = " << w << "\n";
    write_text(*manifest, dir, "constants.txt", os.str());

    auto& d = manifest->derived();
    d["N"] = ops.size();
    d["mu1"] = pc.mu1;
    d["C"] = pc.C;
    d["C_beta"] = ops.c_beta;
    d["sigma1"] = sigma1;
    d["lambda_bound"] = ops.lambda_bound;
    d["null_eigenvalues"] = nulls;
    d["form_equivalence"] = equivalence;
    if (mu1_refined) d["mu1_refined"] = *mu1_refined;
    if (mu1_refined) {
      std::cout << "mu1 = " << fmt(pc.mu1) << " (l_max " << c.l_max << "), " << fmt(*mu1_refined) << " (l_max "
                << *c.refine_l_max << "), relative change " << fmt(std::abs(*mu1_refined - pc.mu1) / pc.mu1) << "\n";
    }
    std::cout << "null_eigenvalues = " << nulls << ", sigma1 = " << fmt(sigma1) << "\n";
    return exit_code::kOk;
  });
}

int cmd_simulate(const GlobalOptions& global) {
  return guarded("simulate", global, exit_code::kVerdict, [&](std::unique_ptr<Manifest>& manifest) {
    const auto c = resolve_config(global);
    const fs::path dir = c.output_dir;
    manifest = std::make_unique<Manifest>(dir, "simulate");
    manifest->config() = resolved_json(c);
    require_solver_geometry(c);

    const auto ops = operators::build_operator_set(c.operator_options(true));
    const dynamics::GalerkinSystem system(ops, c.nu);
    const auto& pc = ops.poincare;
    const double sigma1 = ops.sigma1();

    auto& d = manifest->derived();
    d["N"] = ops.size();
    d["nonzeros"] = system.nonzeros();
    d["lambda_bound"] = ops.lambda_bound;
    d["mu1"] = pc.mu1;
    d["C"] = pc.C;
    d["sigma1"] = sigma1;
    d["C_beta"] = ops.c_beta;
    d["alpha_min"] = ops.friction.min;
    d["alpha_max"] = ops.friction.max;

    double rate = 0.0;
    if (c.run.target != dynamics::DecayTarget::None) {
      rate = c.rate == RateKind::Mu1 ? 4.0 * c.nu * pc.mu1 : 2.0 * c.nu * sigma1;
      d["decay_rate"] = rate;
    }

    const auto series = dynamics::integrate(c.run, ops, system);
    {
      std::ostringstream os;
      dynamics::write_time_series_csv(os, series);
      write_text(*manifest, dir, "timeseries.csv", os.str());
    }

    const auto& rec = series.records;
    const double e0 = rec.front().energy;
    const double escale = e0 > 0.0 ? e0 : 1.0;
    const auto residuals = dynamics::energy_inequality_residuals(series, c.nu, ops.lambda_bound);

    auto& v = manifest->verdicts();
    std::ostringstream summary;
    bool ok = true;
    auto verdict = [&](const std::string& name, bool pass, const json& detail) {
      v[name] = detail;
      v[name]["pass"] = pass;
      summary << name << " = " << (pass ? "PASS" : "FAIL") << "\n";
      ok = ok && pass;
    };

    summary << "N = " << ops.size() << "\n";
    summary << "steps = " << series.steps << "\n";
    summary << "E0 = " << fmt(e0) << "\n";
    summary << "E_final = " << fmt(rec.back().energy) << "\n";
    summary << "r_su_max_abs_all_pairs = " << fmt(residuals.max_abs_su_all_pairs / escale) << "\n";
    summary << "r_du_max_all_pairs = " << fmt(residuals.max_du_all_pairs / escale) << "\n";
    summary << "step1_residual = " << fmt(series.step1_residual) << "\n";

    verdict("energy_inequality_du", residuals.max_du_all_pairs <= kResidualTolerance * escale,
            {{"max_all_pairs_relative", residuals.max_du_all_pairs / escale}, {"tolerance", kResidualTolerance}});

    if (ops.friction.max == 0.0) {
      double drift = 0.0;
      for (const auto& r : rec) {
        for (int i = 0; i < 3; ++i) drift = std::max(drift, std::abs(r.pairing[i] - rec.front().pairing[i]));
      }
      const double rel = drift / std::sqrt(escale);
      summary << "pairing_drift = " << fmt(rel) << "\n";
      verdict("kernel_pairings", rel <= kPairingTolerance, {{"drift_relative", rel}, {"tolerance", kPairingTolerance}});
    }

    if (ops.friction.min > 0.0) {
      const auto cc = dynamics::convex_combination_check(series, c.nu, ops.lambda_bound);
      d["eta"] = cc.eta;
      summary << "eta = " << fmt(cc.eta) << "\n";
      verdict("convex_combination", cc.holds, {{"eta", cc.eta}, {"worst_relative", cc.worst / escale}});
    }

    if (c.check_steady) {
      double drift = 0.0;
      for (const auto& s : series.states) drift = std::max(drift, (s - series.states.front()).norm());
      const double rel = drift / std::sqrt(escale);
      summary << "steady_drift = " << fmt(rel) << "\n";
      verdict("steady_state", rel <= c.steady_tolerance, {{"drift_relative", rel}, {"tolerance", c.steady_tolerance}});
    }

    if (c.run.target != dynamics::DecayTarget::None) {
      const auto dr = dynamics::decay_analysis(series, rate);
      summary << "decay_rate = " << fmt(rate) << "\n";
      summary << "fitted_rate = " << fmt(dr.fitted_rate) << "\n";
      summary << "worst_bound_ratio = " << fmt(dr.worst_bound_ratio) << "\n";
      verdict("decay", dr.pass,
              {{"predicted_rate", dr.predicted_rate},
               {"fitted_rate", dr.fitted_rate},
               {"window", {dr.window_start, dr.window_end}},
               {"window_points", dr.window_points},
               {"worst_bound_ratio", dr.worst_bound_ratio},
               {"slope_ok", dr.slope_ok},
               {"bound_ok", dr.bound_ok}});

      gronwall::SampledTrajectory traj;
      for (const auto& r : rec) {
        traj.t.push_back(r.t);
        traj.y.push_back(r.e_dev);
      }
      const auto gr = gronwall::verify(traj, rate, gronwall::estimate_second_derivative_bound(traj));
      const bool certified = gr.hypothesis.holds && gr.bound && gr.bound->certified;
      json detail = {{"K", rate}, {"hypothesis_ok", gr.hypothesis.holds}, {"worst_margin", gr.hypothesis.worst_margin}};
      if (gr.bound) detail["bound_margin"] = gr.bound->worst_margin;
      verdict("gronwall_certificate", certified, detail);

      if (c.plot) {
        PlotSeries measured{"|u - target|^2", {}, {}, "#1f77b4", false};
        PlotSeries bound{"bound", {}, {}, "#d62728", true};
        const double y0 = rec.front().e_dev;
        for (const auto& r : rec) {
          measured.x.push_back(r.t);
          measured.y.push_back(r.e_dev);
          bound.x.push_back(r.t);
          bound.y.push_back(y0 * std::exp(-rate * r.t));
        }
        write_text(*manifest, dir, "decay.svg", render_log_plot("Energy decay", "t", "E_dev", {measured, bound}));
      }
    } else if (c.plot) {
      PlotSeries energy{"|u|^2", {}, {}, "#1f77b4", false};
      for (const auto& r : rec) {
        energy.x.push_back(r.t);
        energy.y.push_back(r.energy);
      }
      write_text(*manifest, dir, "decay.svg", render_log_plot("Energy", "t", "E", {energy}));
    }

    summary << "verdict = " << (ok ? "PASS" : "FAIL") << "\n";
    write_text(*manifest, dir, "summary.txt", summary.str());
    std::cout << summary.str();
    return ok ? exit_code::kOk : exit_code::kVerdict;
  });
}

int cmd_verify(const GlobalOptions& global, const VerifyOptions& options) {
  return guarded("verify", global, exit_code::kConfig, [&](std::unique_ptr<Manifest>& manifest) {
    double k = 0.0;
    if (options.k) {
      k = *options.k;
    } else if (options.manifest) {
      std::ifstream in(*options.manifest);
      if (!in) throw ConfigError("cannot open manifest " + options.manifest->string());
      json doc;
      try {
        doc = json::parse(in);
      } catch (const json::exception& e) {
        throw ConfigError("malformed manifest " + options.manifest->string() + ": " + e.what());
      }
      const auto it = doc.find("derived");
      if (it == doc.end() || !it->contains("decay_rate")) {
        throw ConfigError("manifest " + options.manifest->string() + " has no derived.decay_rate");
      }
      k = it->at("decay_rate").get<double>();
    } else {
      throw ConfigError("verify needs --K or --manifest");
    }
    if (!(k >= 0.0) || !std::isfinite(k)) throw ConfigError("K must be finite and non-negative");

    gronwall::Rule rule;
    try {
      rule = gronwall::rule_from_string(options.rule);
    } catch (const std::exception& e) {
      throw ConfigError(e.what());
    }

    std::ifstream in(options.series);
    if (!in) throw ConfigError("cannot open series " + options.series.string());
    std::string header;
    std::getline(in, header);
    std::string column = options.column.value_or("");
    if (column.empty()) {
      std::vector<std::string> names;
      std::stringstream hs(header);
      for (std::string name; std::getline(hs, name, ',');) names.push_back(name);
      column = std::find(names.begin(), names.end(), "E_dev") != names.end() ? "E_dev" : "E";
    }
    in.clear();
    in.seekg(0);
    auto traj = gronwall::read_csv(in, column);
    traj.rule = rule;

    const fs::path dir = global.out.value_or(fs::path("out"));
    manifest = std::make_unique<Manifest>(dir, "verify");
    manifest->config() = {{"series", options.series.string()},
                          {"column", column},
                          {"K", k},
                          {"rule", gronwall::to_string(rule)}};

    auto ypp = options.ypp;
    if (!ypp && rule == gronwall::Rule::Trapezoid) ypp = gronwall::estimate_second_derivative_bound(traj);
    const auto report = gronwall::verify(traj, k, ypp);
    if (ypp) manifest->config()["ypp"] = *ypp;
    {
      std::ostringstream os;
      gronwall::write_report(os, report);
      write_text(*manifest, dir, "gronwall_report.txt", os.str());
      std::cout << os.str();
    }
    {
      std::ostringstream os;
      gronwall::write_report_csv(os, report);
      write_text(*manifest, dir, "gronwall.csv", os.str());
    }
    const bool bound_ok = report.bound && report.bound->certified;
    manifest->verdicts() = {{"hypothesis", report.hypothesis.holds}, {"bound", bound_ok}};
    if (!report.hypothesis.holds) return exit_code::kHypothesis;
    return bound_ok ? exit_code::kOk : exit_code::kBound;
  });
}

}  // namespace slipflow::cli
