#include "slipflow/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <random>

#include "slipflow/error.hpp"

namespace slipflow::dynamics {

namespace {

Matrix congruence(const Matrix& w, const Matrix& a) {
  Matrix r = w.transpose() * a * w;
  return 0.5 * (r + r.transpose());
}

std::array<double, 4> quadratic_rates(const GalerkinSystem& sys, const Vector& g) {
  return {sys.strain_sq(g), sys.gradient_sq(g), sys.boundary_alpha(g), sys.boundary_u2(g)};
}

long long checked_ratio(double num, double den, const char* what) {
  const double r = num / den;
  const long long k = std::llround(r);
  if (k < 1 || std::abs(r - static_cast<double>(k)) > 1e-9 * std::max(1.0, r)) {
    throw AnalysisError(std::string(what) + " must be a positive integer multiple of dt");
  }
  return k;
}

}  // namespace

std::string to_string(Integrator integrator) { return integrator == Integrator::RK4 ? "rk4" : "rk2"; }

Integrator integrator_from_string(const std::string& name) {
  if (name == "rk4" || name == "RK4") return Integrator::RK4;
  if (name == "rk2" || name == "RK2") return Integrator::RK2;
  throw AnalysisError("unknown integrator '" + name + "'");
}

InitialCondition::Kind InitialCondition::kind_from_string(const std::string& name) {
  if (name == "rigid") return Kind::Rigid;
  if (name == "eigenmode") return Kind::Eigenmode;
  if (name == "random") return Kind::Random;
  if (name == "coefficients") return Kind::Coefficients;
  throw AnalysisError("unknown initial condition '" + name + "'");
}

std::string to_string(InitialCondition::Kind kind) {
  switch (kind) {
    case InitialCondition::Kind::Rigid: return "rigid";
    case InitialCondition::Kind::Eigenmode: return "eigenmode";
    case InitialCondition::Kind::Random: return "random";
    case InitialCondition::Kind::Coefficients: return "coefficients";
  }
  return "unknown";
}

std::string to_string(DecayTarget target) {
  switch (target) {
    case DecayTarget::None: return "none";
    case DecayTarget::Zero: return "zero";
    case DecayTarget::KernelProjection: return "kernel_projection";
  }
  return "unknown";
}

DecayTarget decay_target_from_string(const std::string& name) {
  if (name == "none") return DecayTarget::None;
  if (name == "zero") return DecayTarget::Zero;
  if (name == "kernel_projection") return DecayTarget::KernelProjection;
  throw AnalysisError("unknown decay target '" + name + "'");
}

GalerkinSystem::GalerkinSystem(const operators::OperatorSet& ops, double nu, double drop_tolerance) : nu_(nu) {
  if (!(nu > 0.0)) throw AnalysisError("viscosity must be positive");
  if (!ops.advection) throw AnalysisError("operator set was built without the advection tensor");
  const Eigen::Index n = static_cast<Eigen::Index>(ops.size());
  lambda_ = ops.spectrum.values;
  w_ = ops.spectrum.vectors;
  d_ = congruence(w_, ops.gradient);
  s_ = congruence(w_, ops.strain);
  ba_ = congruence(w_, ops.boundary_friction);
  b0_ = congruence(w_, ops.boundary_mass);
  wtm_ = w_.transpose() * ops.mass;
  kernel_.resize(n, 3);
  for (Eigen::Index i = 0; i < 3; ++i) kernel_.col(i) = wtm_ * ops.kernel[static_cast<std::size_t>(i)];
  Eigen::HouseholderQR<Matrix> qr(kernel_);
  kernel_basis_ = qr.householderQ() * Matrix::Identity(n, 3);

  const auto t = ops.advection->transform(w_);
  const double threshold = drop_tolerance * t.max_abs();
  std::vector<std::vector<Entry>> buckets(static_cast<std::size_t>(n));
  for (Eigen::Index a = 0; a < n; ++a) {
    for (Eigen::Index b = 0; b < n; ++b) {
      for (Eigen::Index c = b + 1; c < n; ++c) {
        const double x = t(a, b, c);
        const double y = t(a, c, b);
        if (std::abs(x) <= threshold && std::abs(y) <= threshold) continue;
        const double v = 0.5 * (x - y);
        const auto ia = static_cast<std::int32_t>(a);
        buckets[static_cast<std::size_t>(c)].push_back({ia, static_cast<std::int32_t>(b), v});
        buckets[static_cast<std::size_t>(b)].push_back({ia, static_cast<std::int32_t>(c), -v});
      }
    }
  }
  offsets_.assign(static_cast<std::size_t>(n) + 1, 0);
  for (std::size_t c = 0; c < buckets.size(); ++c) offsets_[c + 1] = offsets_[c] + buckets[c].size();
  entries_.reserve(offsets_.back());
  for (auto& bucket : buckets) entries_.insert(entries_.end(), bucket.begin(), bucket.end());
}

Vector GalerkinSystem::nonlinear(const Vector& g) const {
  const Eigen::Index n = size();
  Vector out(n);
  for (Eigen::Index c = 0; c < n; ++c) {
    double acc = 0.0;
    for (std::size_t e = offsets_[static_cast<std::size_t>(c)]; e < offsets_[static_cast<std::size_t>(c) + 1]; ++e) {
      const auto& en = entries_[e];
      acc += en.value * g(en.a) * g(en.b);
    }
    out(c) = acc;
  }
  return out;
}

Vector GalerkinSystem::rhs(const Vector& g) const {
  if (g.size() != size()) throw AnalysisError("state size does not match the Galerkin system");
  Vector out = -nonlinear(g);
  out.array() -= nu_ * lambda_.array() * g.array();
  return out;
}

std::array<double, 3> GalerkinSystem::pairings(const Vector& g) const {
  return {kernel_.col(0).dot(g), kernel_.col(1).dot(g), kernel_.col(2).dot(g)};
}

Vector GalerkinSystem::to_eigen(const Vector& coefficients) const {
  if (coefficients.size() != size()) throw AnalysisError("coefficient vector does not match the basis size");
  return wtm_ * coefficients;
}

Vector GalerkinSystem::project_kernel(const Vector& g) const {
  return kernel_basis_ * (kernel_basis_.transpose() * g);
}

Vector initial_state(const InitialCondition& u0, const GalerkinSystem& system, const operators::OperatorSet& ops) {
  const Eigen::Index n = system.size();
  Vector g = Vector::Zero(n);
  switch (u0.kind) {
    case InitialCondition::Kind::Rigid:
      if (u0.rigid_index < 0 || u0.rigid_index > 2) throw AnalysisError("rigid index must be 0, 1 or 2");
      g = u0.amplitude * system.kernel().col(u0.rigid_index);
      break;
    case InitialCondition::Kind::Eigenmode: {
      const Eigen::Index mode = u0.mode < 0 ? ops.first_positive() : u0.mode;
      if (mode >= n) throw AnalysisError("eigenmode index out of range");
      g(mode) = u0.amplitude;
      break;
    }
    case InitialCondition::Kind::Random: {
      if (u0.random_modes < 1) throw AnalysisError("random_modes must be positive");
      if (!(u0.energy >= 0.0)) throw AnalysisError("initial energy must be non-negative");
      std::mt19937_64 rng(u0.seed);
      std::normal_distribution<double> normal;
      const Eigen::Index m = std::min<Eigen::Index>(u0.random_modes, n);
      for (Eigen::Index i = 0; i < m; ++i) g(i) = normal(rng);
      if (u0.deflate_kernel) g -= system.project_kernel(g);
      const double e = g.squaredNorm();
      if (u0.energy > 0.0 && !(e > 0.0)) throw AnalysisError("random initial data vanished after deflation");
      g *= e > 0.0 ? std::sqrt(u0.energy / e) : 0.0;
      break;
    }
    case InitialCondition::Kind::Coefficients:
      g = system.to_eigen(u0.coefficients);
      break;
  }
  if (u0.deflate_kernel && u0.kind != InitialCondition::Kind::Random) g -= system.project_kernel(g);
  for (Eigen::Index i = 0; i < 3; ++i) {
    if (u0.rigid[static_cast<std::size_t>(i)] != 0.0) g += u0.rigid[static_cast<std::size_t>(i)] * system.kernel().col(i);
  }
  return g;
}

TimeSeries integrate(const SimulationConfig& config, const operators::OperatorSet& ops, const GalerkinSystem& system) {
  if (!(config.nu > 0.0)) throw AnalysisError("viscosity must be positive");
  if (config.nu != system.nu()) throw AnalysisError("configured viscosity differs from the Galerkin system");
  if (!(config.dt > 0.0)) throw AnalysisError("dt must be positive");
  if (!(config.t_final >= config.dt)) throw AnalysisError("final time must be at least dt");
  const long long steps = checked_ratio(config.t_final, config.dt, "final time");
  const long long every = checked_ratio(config.cadence, config.dt, "diagnostic cadence");

  const double lambda_max = system.eigenvalues().maxCoeff();
  if (lambda_max > 0.0 && config.dt > 0.5 / (config.nu * lambda_max)) {
    throw InstabilityError("dt violates the stability guard dt <= 0.5 / (nu lambda_max) = " +
                           std::to_string(0.5 / (config.nu * lambda_max)));
  }

  TimeSeries series;
  series.nu = config.nu;
  series.dt = config.dt;
  series.radius = ops.options.radius;
  series.lambda_bound = ops.lambda_bound;
  series.alpha_min = ops.friction.min;
  series.alpha_max = ops.friction.max;
  series.integrator = config.integrator;
  series.seed = config.u0.seed;

  Vector g = initial_state(config.u0, system, ops);
  switch (config.target) {
    case DecayTarget::None:
    case DecayTarget::Zero:
      series.target = Vector::Zero(g.size());
      break;
    case DecayTarget::KernelProjection:
      if (!ops.options.alpha.is_zero()) {
        throw AnalysisError("decay to the kernel projection is only defined for zero friction");
      }
      series.target = system.project_kernel(g);
      break;
  }

  std::array<double, 4> integral{0.0, 0.0, 0.0, 0.0};
  const double e0 = g.squaredNorm();
  const double dt = config.dt;

  auto record = [&](long long step) {
    DiagnosticsRecord r;
    r.t = static_cast<double>(step) * dt;
    r.energy = g.squaredNorm();
    r.dsq = system.gradient_sq(g);
    r.ssq = system.strain_sq(g);
    r.bnd_alpha = system.boundary_alpha(g);
    r.bnd_u2 = system.boundary_u2(g);
    r.pairing = system.pairings(g);
    r.e_dev = (g - series.target).squaredNorm();
    series.records.push_back(r);
    series.states.push_back(g);
    series.integrals.push_back(integral);
    const double step1 = std::abs(r.dsq - 2.0 * r.ssq - r.bnd_u2 / series.radius);
    series.step1_residual = std::max(series.step1_residual, r.dsq > 0.0 ? step1 / r.dsq : step1);
  };
  auto accumulate = [](std::array<double, 4>& acc, const std::array<double, 4>& q, double w) {
    for (std::size_t i = 0; i < 4; ++i) acc[i] += w * q[i];
  };

  record(0);
  for (long long step = 1; step <= steps; ++step) {
    const double e_old = g.squaredNorm();
    if (config.integrator == Integrator::RK4) {
      const Vector k1 = system.rhs(g);
      const auto q1 = quadratic_rates(system, g);
      const Vector g2 = g + 0.5 * dt * k1;
      const Vector k2 = system.rhs(g2);
      const auto q2 = quadratic_rates(system, g2);
      const Vector g3 = g + 0.5 * dt * k2;
      const Vector k3 = system.rhs(g3);
      const auto q3 = quadratic_rates(system, g3);
      const Vector g4 = g + dt * k3;
      const Vector k4 = system.rhs(g4);
      const auto q4 = quadratic_rates(system, g4);
      g += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      accumulate(integral, q1, dt / 6.0);
      accumulate(integral, q2, dt / 3.0);
      accumulate(integral, q3, dt / 3.0);
      accumulate(integral, q4, dt / 6.0);
    } else {
      const Vector k1 = system.rhs(g);
      const Vector g2 = g + 0.5 * dt * k1;
      const Vector k2 = system.rhs(g2);
      accumulate(integral, quadratic_rates(system, g2), dt);
      g += dt * k2;
    }
    if (!g.allFinite()) throw InstabilityError("non-finite state at t = " + std::to_string(step * dt));
    const double e_new = g.squaredNorm();
    if (e_new - e_old > config.energy_growth_tolerance * e0) {
      throw InstabilityError("energy grew by " + std::to_string((e_new - e_old) / e0) + " relative at t = " +
                             std::to_string(step * dt));
    }
    if (step % every == 0 || step == steps) record(step);
  }
  series.steps = static_cast<std::size_t>(steps);

  const auto residuals = energy_inequality_residuals(series, config.nu, ops.lambda_bound);
  auto& rec = series.records;
  for (std::size_t k = 1; k < rec.size(); ++k) {
    rec[k].r_su = residuals.r_su[k - 1];
    rec[k].r_du = residuals.r_du[k - 1];
  }
  auto log_e = [&](std::size_t k) { return std::log(rec[k].energy); };
  for (std::size_t k = 0; k < rec.size() && rec.size() > 1; ++k) {
    const std::size_t lo = k == 0 ? 0 : k - 1;
    const std::size_t hi = k + 1 == rec.size() ? k : k + 1;
    if (rec[lo].energy > 0.0 && rec[hi].energy > 0.0) {
      rec[k].inst_rate = -(log_e(hi) - log_e(lo)) / (rec[hi].t - rec[lo].t);
    }
  }
  return series;
}

ResidualReport energy_inequality_residuals(const TimeSeries& series, double nu, double lambda_bound) {
  ResidualReport out;
  const auto& rec = series.records;
  if (rec.empty()) return out;
  std::vector<double> f(rec.size()), h(rec.size());
  for (std::size_t k = 0; k < rec.size(); ++k) {
    const auto& i = series.integrals[k];
    f[k] = rec[k].energy + 4.0 * nu * i[0] + 2.0 * nu * i[2];
    h[k] = rec[k].energy + 2.0 * nu * i[1] - 2.0 * nu * (lambda_bound * i[3] - i[2]);
  }
  double fmin = f[0], fmax = f[0], hmin = h[0];
  out.max_du_all_pairs = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 1; k < rec.size(); ++k) {
    out.r_su.push_back(f[k] - f[k - 1]);
    out.r_du.push_back(h[k] - h[k - 1]);
    out.max_abs_su_interval = std::max(out.max_abs_su_interval, std::abs(out.r_su.back()));
    out.max_du_interval = k == 1 ? out.r_du.back() : std::max(out.max_du_interval, out.r_du.back());
    fmin = std::min(fmin, f[k]);
    fmax = std::max(fmax, f[k]);
    out.max_du_all_pairs = std::max(out.max_du_all_pairs, h[k] - hmin);
    hmin = std::min(hmin, h[k]);
  }
  out.max_abs_su_all_pairs = fmax - fmin;
  if (rec.size() == 1) out.max_du_all_pairs = 0.0;
  return out;
}

ConvexCombinationReport convex_combination_check(const TimeSeries& series, double nu, double lambda_bound,
                                                 double tolerance) {
  if (!(series.alpha_min > 0.0)) throw AnalysisError("convex combination needs a strictly positive friction");
  if (!(lambda_bound > 0.0)) throw AnalysisError("curvature bound must be positive");
  ConvexCombinationReport out;
  out.eta = std::min(series.alpha_min / lambda_bound, 0.5);
  const auto& rec = series.records;
  double hmin = std::numeric_limits<double>::infinity();
  out.worst = rec.size() > 1 ? -std::numeric_limits<double>::infinity() : 0.0;
  for (std::size_t k = 0; k < rec.size(); ++k) {
    const auto& i = series.integrals[k];
    const double h = rec[k].energy + 2.0 * nu * out.eta * i[1] + 4.0 * nu * (1.0 - out.eta) * i[0];
    if (k > 0) out.worst = std::max(out.worst, h - hmin);
    hmin = std::min(hmin, h);
  }
  out.holds = out.worst <= tolerance;
  return out;
}

DecayReport decay_analysis(const TimeSeries& series, double predicted_rate) {
  if (!(predicted_rate > 0.0)) throw AnalysisError("predicted decay rate must be positive");
  const auto& rec = series.records;
  if (rec.size() < 2) throw AnalysisError("time series is too short for decay analysis");
  const double e0 = rec.front().e_dev;
  if (!(e0 > 0.0)) throw AnalysisError("initial deviation from the decay target is zero");
  if (rec.back().e_dev / e0 > 1e-4) {
    throw AnalysisError("decay window too short: E_dev(T)/E_dev(0) = " + std::to_string(rec.back().e_dev / e0));
  }
  DecayReport out;
  out.predicted_rate = predicted_rate;
  double st = 0, sy = 0, stt = 0, sty = 0;
  for (const auto& r : rec) {
    const double ratio = r.e_dev / e0;
    out.worst_bound_ratio = std::max(out.worst_bound_ratio, ratio * std::exp(predicted_rate * r.t));
    if (ratio < 1e-8 || ratio > 1e-1) continue;
    if (out.window_points == 0) out.window_start = r.t;
    out.window_end = r.t;
    ++out.window_points;
    const double y = std::log(r.e_dev);
    st += r.t;
    sy += y;
    stt += r.t * r.t;
    sty += r.t * y;
  }
  if (out.window_points < 3) throw AnalysisError("fewer than three samples in the decay fit window");
  const double np = static_cast<double>(out.window_points);
  const double slope = (np * sty - st * sy) / (np * stt - st * st);
  out.fitted_rate = -slope;
  out.slope_ok = slope <= -predicted_rate * (1.0 - 0.02);
  out.bound_ok = out.worst_bound_ratio <= 1.0 + 1e-6;
  out.pass = out.slope_ok && out.bound_ok;
  return out;
}

Vector project_kernel(const Vector& u, const std::array<Vector, 3>& kernel, const Matrix& m) {
  Matrix k(u.size(), 3);
  for (Eigen::Index c = 0; c < 3; ++c) k.col(c) = kernel[static_cast<std::size_t>(c)];
  const Matrix mk = m * k;
  const Matrix gram = k.transpose() * mk;
  return k * gram.ldlt().solve(mk.transpose() * u);
}

void write_time_series_csv(std::ostream& out, const TimeSeries& series) {
  out << "t,E,Dsq,Ssq,bnd_alpha,bnd_u2,pairing_Y1,pairing_Y2,pairing_Y3,r_Su,r_Du,inst_rate,E_dev\n";
  char buf[32];
  auto put = [&](double v, char sep) {
    std::snprintf(buf, sizeof buf, "%.16e", v);
    out << buf << sep;
  };
  for (const auto& r : series.records) {
    put(r.t, ',');
    put(r.energy, ',');
    put(r.dsq, ',');
    put(r.ssq, ',');
    put(r.bnd_alpha, ',');
    put(r.bnd_u2, ',');
    put(r.pairing[0], ',');
    put(r.pairing[1], ',');
    put(r.pairing[2], ',');
    put(r.r_su, ',');
    put(r.r_du, ',');
    put(r.inst_rate, ',');
    put(r.e_dev, '\n');
  }
}

}  // namespace slipflow::dynamics
