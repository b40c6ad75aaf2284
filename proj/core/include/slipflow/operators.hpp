#pragma once

// Galerkin matrices of the Stokes problem with Navier friction on the ball,
// the advection tensor, the Stokes spectrum and the Poincare-type constants.

#include <array>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "slipflow/basis.hpp"
#include "slipflow/geometry.hpp"
#include "slipflow/quadrature.hpp"
#include "slipflow/types.hpp"

namespace slipflow::operators {

/// Friction coefficient on the boundary as a polynomial in cos(theta):
/// alpha(theta) = sum_k coefficients[k] cos(theta)^k.
struct FrictionSpec {
  std::vector<double> coefficients{0.0};

  static FrictionSpec constant(double alpha0) { return FrictionSpec{{alpha0}}; }

  double operator()(double colatitude) const;
  bool is_zero() const;
  bool is_constant() const;
  std::string describe() const;
};

struct FrictionSamples {
  std::vector<double> values;  // one per boundary node
  double min = 0.0;
  double max = 0.0;
};

/// Throws OperatorError if alpha is negative at any boundary node.
FrictionSamples sample_friction(const FrictionSpec& alpha, const QuadratureGrid& grid);

/// Null-eigenvalue threshold for unit-normalized bases.
inline constexpr double kNullEigenvalue = 1e-9;

Matrix assemble_mass(const basis::SampledBasis& s, const QuadratureGrid& grid);
/// int Dv_i : Dv_j dx.
Matrix assemble_gradient_form(const basis::SampledBasis& s, const QuadratureGrid& grid);
/// int Sv_i : Sv_j dx.
Matrix assemble_strain_form(const basis::SampledBasis& s, const QuadratureGrid& grid);
/// int_boundary weight v_i . v_j dS, weight = 1 when empty.
Matrix assemble_boundary_mass(const basis::SampledBasis& s, const QuadratureGrid& grid,
                              const std::vector<double>& weight = {});

/// 2 int Sv_i : Sv_j dx + int alpha v_i . v_j dS.
Matrix assemble_form_su(const basis::SampledBasis& s, const QuadratureGrid& grid, const FrictionSpec& alpha);

/// int Dv_i : Dv_j dx + int v_i . (alpha v_j - dn(v_j)) dS. Only balls
/// concentric with the basis are supported.
Matrix assemble_form_du(const basis::SampledBasis& s, const QuadratureGrid& grid, const FrictionSpec& alpha,
                        const geometry::GeometryDescriptor& geom);

/// Smallest C >= 0 making B + C M positive definite, up to kNullEigenvalue.
double coercivity_shift(const Matrix& b, const Matrix& m);

struct EigenDecomposition {
  Vector values;             // ascending
  Matrix vectors;            // columns, M-orthonormal
  int blocks = 0;            // decoupled diagonal blocks solved independently
  double residual = 0.0;     // max_j |B w_j - l_j M w_j| / |B|
  double m_orthonormality = 0.0;
  double b_orthogonality = 0.0;  // off-diagonal of W^T (B + C M) W relative to its diagonal
};

/// B w = lambda M w. The pencil is split into the connected components of
/// its sparsity pattern, which keeps eigenvectors inside symmetry classes.
/// Throws SolverError on failure or when the residual exceeds 1e-8 |B|.
EigenDecomposition solve_stokes_eigenproblem(const Matrix& b, const Matrix& m, double c_beta = 0.0);

/// Dense T[i][j][k] = int (v_i . grad) v_j . v_k dx.
class AdvectionTensor {
 public:
  static constexpr Eigen::Index kMaxSize = 512;

  AdvectionTensor() = default;
  explicit AdvectionTensor(Eigen::Index n);

  Eigen::Index size() const { return n_; }
  double operator()(Eigen::Index i, Eigen::Index j, Eigen::Index k) const { return data_[index(i, j, k)]; }
  double& operator()(Eigen::Index i, Eigen::Index j, Eigen::Index k) { return data_[index(i, j, k)]; }

  /// Slice i as a row-major (j, k) matrix view.
  Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> slice(Eigen::Index i) const;
  Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> slice(Eigen::Index i);

  double max_abs() const;
  /// max |T[i][j][k] + T[i][k][j]| / max |T|.
  double antisymmetry_defect() const;

  /// N(g)_k = sum_ij T[i][j][k] g_i g_j.
  Vector contract(const Vector& g) const;

  /// T'[a][b][c] = sum W_ia W_jb W_kc T[i][j][k].
  AdvectionTensor transform(const Matrix& w) const;

 private:
  std::size_t index(Eigen::Index i, Eigen::Index j, Eigen::Index k) const {
    return static_cast<std::size_t>((i * n_ + j) * n_ + k);
  }
  Eigen::Index n_ = 0;
  std::vector<double> data_;
};

AdvectionTensor assemble_advection(const basis::SampledBasis& s, const QuadratureGrid& grid);

struct PoincareConstants {
  double mu1 = 0.0;          // min int|Su|^2 / int|u|^2 off the kernel
  double C = 0.0;            // 1 / sqrt(mu1)
  double c_classical = 0.0;  // min int|Du|^2 / int|u|^2
  double korn_ratio = 0.0;   // min int|Su|^2 / int|Du|^2 off the kernel
  double kernel_residual = 0.0;
  Vector minimizer;          // coefficients of the mu1 eigenfield
  Matrix complement;         // columns span the M-orthogonal complement of the kernel
};

/// `strain` is int Sv_i : Sv_j (no factor 2). Throws OperatorError if the
/// kernel vectors are not S-null.
PoincareConstants symmetric_poincare_constant(const Matrix& strain, const Matrix& gradient, const Matrix& m,
                                              const std::array<Vector, 3>& kernel);

/// max over random coefficient vectors of
/// | |Du|^2 - 2 |Su|^2 - (1/R) int |u|^2 dS | / |Du|^2, evaluated pointwise on the grid.
double korn_step1_check(const basis::SampledBasis& s, const QuadratureGrid& grid,
                        const geometry::GeometryDescriptor& geom, int samples = 100, unsigned seed = 7);

/// M-orthonormal basis of span(columns of k).
Matrix m_orthonormalize(const Matrix& k, const Matrix& m);

/// Largest sine of the principal angles between span(a) and span(b) in the
/// M inner product; both must have full column rank.
double max_principal_angle_sine(const Matrix& a, const Matrix& b, const Matrix& m);

struct OperatorOptions {
  double radius = 1.0;
  int l_max = 4;
  int n_max = 2;
  FrictionSpec alpha;
  std::optional<GridOrders> bilinear;
  std::optional<GridOrders> nonlinear;
  bool advection = true;
};

struct OperatorSet {
  OperatorOptions options;
  geometry::GeometryDescriptor geometry;
  std::shared_ptr<const basis::FieldBasis> basis;
  QuadratureGrid grid;
  GridOrders bilinear_orders;
  GridOrders nonlinear_orders;
  FrictionSamples friction;

  Matrix mass;
  Matrix gradient;          // int Dv:Dv
  Matrix strain;            // int Sv:Sv
  Matrix boundary_mass;     // int v.v dS
  Matrix boundary_friction; // int alpha v.v dS
  Matrix form_su;
  Matrix form_du;

  double c_beta = 0.0;
  double lambda_bound = 0.0;
  double mass_condition = 0.0;
  EigenDecomposition spectrum;
  std::array<Vector, 3> kernel;  // Y_1, Y_2, Y_3 coefficients
  PoincareConstants poincare;
  std::optional<AdvectionTensor> advection;
  std::vector<std::string> warnings;

  std::size_t size() const { return static_cast<std::size_t>(mass.rows()); }
  /// Smallest eigenvalue of (B_Su, M).
  double sigma1() const { return spectrum.values(0); }
  /// Number of eigenvalues with |lambda| <= kNullEigenvalue.
  int null_count() const;
  /// Index of the first eigenvalue above kNullEigenvalue.
  Eigen::Index first_positive() const;
};

OperatorSet build_operator_set(const OperatorOptions& options);

/// Columns index,eigenvalue with 17 significant digits.
void write_spectrum_csv(std::ostream& out, const EigenDecomposition& spectrum);

}  // namespace slipflow::operators
