#pragma once

// Divergence-free fields on the ball of radius R that are tangent to its
// boundary, generated from scalar potentials f = g(r) Y_lm:
//
//   toroidal  v = grad f x x            with g = r^l r^(2n)
//   poloidal  v = curl (grad f x x)     with g = r^l r^(2n) (R^2 - r^2)
//
// r^l Y_lm is a solid harmonic polynomial, so every field is a polynomial
// vector field and its Jacobian is exact.

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "slipflow/polynomial.hpp"
#include "slipflow/quadrature.hpp"
#include "slipflow/types.hpp"

namespace slipflow::basis {

enum class FieldKind : std::uint8_t { Toroidal = 0, Poloidal = 1 };

std::string to_string(FieldKind kind);

struct BasisIndex {
  FieldKind kind = FieldKind::Toroidal;
  int degree = 1;  // l >= 1
  int order = 0;   // m in [-l, l]
  int radial = 0;  // n >= 0
  double radius = 1.0;

  friend bool operator==(const BasisIndex&, const BasisIndex&) = default;
};

inline constexpr std::size_t kDefaultMaxBasisSize = 512;

/// Ordered (kind, l, m, n) lexicographically, toroidal first. For each kind
/// there are n_max + 1 radial functions per harmonic, so the size is
/// 2 (n_max + 1) ((l_max + 1)^2 - 1).
std::vector<BasisIndex> build_basis(double radius, int l_max, int n_max,
                                    std::size_t max_count = kDefaultMaxBasisSize);

/// One basis field with its exact Jacobian, J(a, b) = d v_a / d x_b.
struct BasisField {
  BasisIndex index;
  VectorPolynomial value;
  std::array<VectorPolynomial, 3> jacobian;  // jacobian[a][b]

  Vec3 evaluate(const Vec3& x) const;
  Mat3 evaluate_jacobian(const Vec3& x) const;
  double divergence(const Vec3& x) const { return evaluate_jacobian(x).trace(); }
  int degree() const;
};

/// Unnormalized generator field for an index.
BasisField make_field(const BasisIndex& index);

struct FieldSample {
  std::vector<Vec3> value;
  std::vector<Mat3> jacobian;
  std::vector<Mat3> strain;  // (J + J^T) / 2
  std::vector<Vec3> boundary_value;
};

FieldSample evaluate_field(const BasisField& field, const QuadratureGrid& grid);

/// The whole family, optionally scaled to unit L2 norm.
class FieldBasis {
 public:
  FieldBasis(double radius, int l_max, int n_max, bool normalize = true,
             std::size_t max_count = kDefaultMaxBasisSize);

  std::size_t size() const { return fields_.size(); }
  double radius() const { return radius_; }
  int l_max() const { return l_max_; }
  int n_max() const { return n_max_; }
  bool normalized() const { return normalized_; }

  const BasisField& field(std::size_t i) const { return fields_[i]; }
  const BasisIndex& index(std::size_t i) const { return fields_[i].index; }
  /// Factor applied to the generator; 1 when not normalized.
  double scale(std::size_t i) const { return scales_[i]; }
  int max_degree() const { return max_degree_; }

  /// sum_i c_i v_i(x).
  Vec3 combine(const Vector& coefficients, const Vec3& x) const;

 private:
  double radius_;
  int l_max_;
  int n_max_;
  bool normalized_;
  std::vector<BasisField> fields_;
  std::vector<double> scales_;
  int max_degree_ = 0;
};

/// Basis samples laid out for assembly: matrices of shape (nodes, fields).
struct SampledBasis {
  std::array<Matrix, 3> value;     // v_a
  std::array<Matrix, 9> jacobian;  // d v_a / d x_b at index 3a + b
  std::array<Matrix, 3> boundary;  // boundary trace v_a

  Eigen::Index nodes() const { return value[0].rows(); }
  Eigen::Index fields() const { return value[0].cols(); }
};

SampledBasis sample_basis(const FieldBasis& basis, const QuadratureGrid& grid);

/// Y_1 = (0, -x3, x2), Y_2 = (x3, 0, -x1), Y_3 = (-x2, x1, 0) about the origin.
Vec3 rigid_rotation(int i, const Vec3& x);

/// Exact expansion coefficients of Y_1, Y_2, Y_3. Each is a single toroidal
/// l = 1, n = 0 field.
std::array<Vector, 3> rigid_rotation_coefficients(const FieldBasis& basis);

}  // namespace slipflow::basis
