#pragma once

// Galerkin ODE in the Stokes eigenbasis, fixed-step Runge-Kutta integration,
// energy diagnostics and decay analysis.

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "slipflow/operators.hpp"
#include "slipflow/types.hpp"

namespace slipflow::dynamics {

enum class Integrator { RK4, RK2 };

std::string to_string(Integrator integrator);
Integrator integrator_from_string(const std::string& name);

struct InitialCondition {
  enum class Kind { Rigid, Eigenmode, Random, Coefficients };

  Kind kind = Kind::Random;

  // Rigid: amplitude * Y_{rigid_index + 1}.
  int rigid_index = 2;
  // Eigenmode: amplitude * w_mode; mode < 0 selects the first positive eigenvalue.
  Eigen::Index mode = -1;
  double amplitude = 1.0;
  // Random: Gaussian eigen-coordinates on the lowest `random_modes` modes,
  // scaled to `energy`.
  int random_modes = 20;
  double energy = 1.0;
  std::uint64_t seed = 1;
  // Coefficients in the (normalized) field basis.
  Vector coefficients;
  // Remove the Ker S component of the result before adding `rigid`.
  bool deflate_kernel = false;
  // Added sum_i rigid[i] * Y_{i+1}.
  std::array<double, 3> rigid{0.0, 0.0, 0.0};

  static Kind kind_from_string(const std::string& name);
};

std::string to_string(InitialCondition::Kind kind);

enum class DecayTarget { None, Zero, KernelProjection };

std::string to_string(DecayTarget target);
DecayTarget decay_target_from_string(const std::string& name);

struct SimulationConfig {
  double nu = 0.1;
  double dt = 1e-3;
  double t_final = 1.0;
  Integrator integrator = Integrator::RK4;
  double cadence = 0.01;  // time between diagnostic samples
  InitialCondition u0;
  DecayTarget target = DecayTarget::None;
  double energy_growth_tolerance = 1e-6;
};

/// Sparse, exactly (b, c)-antisymmetric advection tensor in eigen-coordinates.
/// Entries below `drop_tolerance * max|T|` in both mirrored positions are
/// dropped; they are rounding residue of selection-rule zeros.
class GalerkinSystem {
 public:
  static constexpr double kDefaultDropTolerance = 1e-8;

  GalerkinSystem(const operators::OperatorSet& ops, double nu, double drop_tolerance = kDefaultDropTolerance);

  Eigen::Index size() const { return lambda_.size(); }
  double nu() const { return nu_; }
  const Vector& eigenvalues() const { return lambda_; }
  const Matrix& eigenvectors() const { return w_; }
  std::size_t nonzeros() const { return entries_.size(); }

  /// sum_ab T[a][b][c] g_a g_b.
  Vector nonlinear(const Vector& g) const;
  /// -nonlinear(g) - nu lambda g.
  Vector rhs(const Vector& g) const;

  double energy(const Vector& g) const { return g.squaredNorm(); }
  double gradient_sq(const Vector& g) const { return g.dot(d_ * g); }
  double strain_sq(const Vector& g) const { return g.dot(s_ * g); }
  double boundary_alpha(const Vector& g) const { return g.dot(ba_ * g); }
  double boundary_u2(const Vector& g) const { return g.dot(b0_ * g); }
  std::array<double, 3> pairings(const Vector& g) const;

  /// Eigen-coordinates of field-basis coefficients and back.
  Vector to_eigen(const Vector& coefficients) const;
  Vector to_basis(const Vector& g) const { return w_ * g; }

  /// Eigen-coordinates of Y_1, Y_2, Y_3.
  const Matrix& kernel() const { return kernel_; }
  /// Euclidean projection onto span(kernel()).
  Vector project_kernel(const Vector& g) const;

 private:
  struct Entry {
    std::int32_t a;
    std::int32_t b;
    double value;
  };

  double nu_;
  Vector lambda_;
  Matrix w_;
  Matrix d_, s_, ba_, b0_;
  Matrix wtm_;  // W^T M
  Matrix kernel_;
  Matrix kernel_basis_;  // orthonormal columns
  std::vector<Entry> entries_;
  std::vector<std::size_t> offsets_;  // entries for output c in [offsets_[c], offsets_[c+1])
};

Vector initial_state(const InitialCondition& u0, const GalerkinSystem& system, const operators::OperatorSet& ops);

struct DiagnosticsRecord {
  double t = 0.0;
  double energy = 0.0;
  double dsq = 0.0;
  double ssq = 0.0;
  double bnd_alpha = 0.0;
  double bnd_u2 = 0.0;
  std::array<double, 3> pairing{};
  double r_su = 0.0;  // over the interval ending here
  double r_du = 0.0;
  double inst_rate = 0.0;
  double e_dev = 0.0;  // |u - target|^2
};

struct TimeSeries {
  std::vector<DiagnosticsRecord> records;
  std::vector<Vector> states;  // eigen-coordinates, one per record
  // Time integrals from 0 of |Su|^2, |Du|^2, int alpha|u|^2 dS, int |u|^2 dS,
  // integrated with the same Runge-Kutta stages as the state.
  std::vector<std::array<double, 4>> integrals;
  Vector target;  // eigen-coordinates of the decay target

  double nu = 0.0;
  double dt = 0.0;
  double radius = 1.0;
  double lambda_bound = 0.0;
  double alpha_min = 0.0;
  double alpha_max = 0.0;
  Integrator integrator = Integrator::RK4;
  std::uint64_t seed = 0;
  std::size_t steps = 0;
  /// max |Dsq - 2 Ssq - bnd_u2 / R| / max(Dsq, tiny) over records.
  double step1_residual = 0.0;
};

/// Throws InstabilityError when the stability guard fails, the energy grows
/// beyond the tolerance or the state becomes non-finite.
TimeSeries integrate(const SimulationConfig& config, const operators::OperatorSet& ops, const GalerkinSystem& system);

struct ResidualReport {
  std::vector<double> r_su;  // consecutive intervals
  std::vector<double> r_du;
  double max_abs_su_interval = 0.0;
  double max_du_interval = 0.0;       // most positive
  double max_abs_su_all_pairs = 0.0;  // over every s < t
  double max_du_all_pairs = 0.0;
};

/// r_Su = E(t) - E(s) + 4 nu int Ssq + 2 nu int bnd_alpha,
/// r_Du = E(t) - E(s) + 2 nu int Dsq - 2 nu int (lambda_bound |u|^2 - alpha |u|^2) dS.
ResidualReport energy_inequality_residuals(const TimeSeries& series, double nu, double lambda_bound);

struct ConvexCombinationReport {
  double eta = 0.0;
  double worst = 0.0;  // max over s < t of E(t) - E(s) + 2 nu eta int Dsq + 4 nu (1 - eta) int Ssq
  bool holds = false;
};

/// eta = min(min alpha / lambda_bound, 1/2). Throws AnalysisError if min alpha <= 0.
ConvexCombinationReport convex_combination_check(const TimeSeries& series, double nu, double lambda_bound,
                                                 double tolerance = 1e-9);

struct DecayReport {
  double predicted_rate = 0.0;
  double fitted_rate = 0.0;  // minus the least-squares slope of log E_dev
  double window_start = 0.0;
  double window_end = 0.0;
  std::size_t window_points = 0;
  double worst_bound_ratio = 0.0;  // max E_dev(t) / (E_dev(0) exp(-rate t))
  bool slope_ok = false;
  bool bound_ok = false;
  bool pass = false;
};

DecayReport decay_analysis(const TimeSeries& series, double predicted_rate);

/// M-orthogonal projection of field-basis coefficients onto span(kernel).
Vector project_kernel(const Vector& u, const std::array<Vector, 3>& kernel, const Matrix& m);

/// Header plus one row per record, 17 significant digits.
void write_time_series_csv(std::ostream& out, const TimeSeries& series);

}  // namespace slipflow::dynamics
