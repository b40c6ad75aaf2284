#pragma once

// Bounded smooth domains, the differential geometry of their boundary and
// the classification of rigid motions tangent to it.
//
// Every supported shape is described by an implicit function F with F < 0
// inside, F = 0 on the boundary and grad F pointing outward, so the Gauss
// map is n = grad F / |grad F| and its differential restricted to the
// tangent plane is (I - n n^T) Hess F / |grad F|.

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "slipflow/types.hpp"

namespace slipflow::geometry {

struct Ball {
  double radius = 1.0;
  Vec3 center = Vec3::Zero();
};

/// Ellipsoid of revolution: semi-axis `equatorial` orthogonal to `axis`,
/// semi-axis `polar` along it.
struct Spheroid {
  double equatorial = 1.0;
  double polar = 1.0;
  Vec3 axis = Vec3::UnitZ();
  Vec3 center = Vec3::Zero();
};

/// Solid of revolution whose boundary is |x_H|^2 = P(z) in the axis frame,
/// with P(z) = (z - z0)(z1 - z) h(z)^2 and h(z) = sum_k shape[k] z^k.
/// Writing the profile through rho^2 keeps the caps at z0 and z1 smooth.
struct RevolutionProfile {
  double z0 = -1.0;
  double z1 = 1.0;
  std::vector<double> shape = {1.0};
  Vec3 axis = Vec3::UnitZ();
  Vec3 center = Vec3::Zero();

  double rho_squared(double z) const;
  double rho_squared_derivative(double z) const;
  double rho_squared_second_derivative(double z) const;
};

/// Axis-aligned ellipsoid with semi-axes (a, b, c).
struct TriaxialEllipsoid {
  double a = 1.0;
  double b = 1.0;
  double c = 1.0;
  Vec3 center = Vec3::Zero();
};

/// Resolution of the deterministic parameter grid used for sup-norms and
/// tangency checks. Colatitude (or axial) nodes include both poles, so a
/// grid refined by an integer factor contains the coarse one.
struct SurfaceSampling {
  int polar = 200;
  int azimuthal = 200;
};

using Shape = std::variant<Ball, Spheroid, RevolutionProfile, TriaxialEllipsoid>;

class GeometryDescriptor {
 public:
  GeometryDescriptor() = default;
  explicit GeometryDescriptor(Shape shape, SurfaceSampling sampling = {});

  static GeometryDescriptor ball(double radius, const Vec3& center = Vec3::Zero());

  const Shape& shape() const { return shape_; }
  const SurfaceSampling& sampling() const { return sampling_; }
  void set_sampling(SurfaceSampling s) { sampling_ = s; }

  /// Throws GeometryError when the description is not a closed smooth surface.
  void validate() const;

  std::string kind_name() const;
  const Ball* as_ball() const { return std::get_if<Ball>(&shape_); }

  double level(const Vec3& x) const;
  Vec3 level_gradient(const Vec3& x) const;
  Mat3 level_hessian(const Vec3& x) const;

  /// Outward unit normal at a boundary point (no on-surface check).
  Vec3 normal(const Vec3& p) const;

  /// Distance-like measure |F| / |grad F| used for the on-surface check.
  double surface_residual(const Vec3& p) const;

  std::vector<Vec3> boundary_samples() const;

 private:
  Shape shape_ = Ball{};
  SurfaceSampling sampling_{};
};

/// Tolerances shared by the point and tangency preconditions.
inline constexpr double kSurfaceTolerance = 1e-10;
inline constexpr double kTangencyThreshold = 1e-9;

/// dn_p(v). Throws PointOffSurfaceError / NonTangentError on bad input.
Vec3 gauss_map_differential(const GeometryDescriptor& geom, const Vec3& p, const Vec3& v);

struct ShapeOperatorSample {
  Vec3 point;
  Vec3 normal;
  Vec3 t1;
  Vec3 t2;
  Eigen::Matrix2d matrix;  // t_a . dn(t_b)
  double k1 = 0.0;         // principal curvatures, eigenvalues of -dn; k1 >= k2
  double k2 = 0.0;
};

ShapeOperatorSample shape_operator(const GeometryDescriptor& geom, const Vec3& p);

/// sup over the boundary samples of max(|k1|, |k2|).
double curvature_bound_lambda(const GeometryDescriptor& geom);

struct CurvatureExtrema {
  double lambda = 0.0;
  double min_k = 0.0;
  double max_k = 0.0;
};

CurvatureExtrema curvature_extrema(const GeometryDescriptor& geom);

/// w(x) = translation + angular x (x - center).
struct RigidField {
  Vec3 translation = Vec3::Zero();
  Vec3 angular = Vec3::Zero();
  Vec3 center = Vec3::Zero();

  Vec3 operator()(const Vec3& x) const { return translation + angular.cross(x - center); }
  Mat3 jacobian() const;
};

struct TangencyResult {
  bool tangent = false;
  double max_violation = 0.0;
};

TangencyResult rigid_field_tangency(const GeometryDescriptor& geom, const RigidField& w);

struct KernelClassification {
  int dimension = 0;
  std::vector<RigidField> generators;
  std::optional<Vec3> center;      // dimension 3
  std::optional<Vec3> axis;        // dimension 1, unit vector
  std::optional<Vec3> axis_point;  // dimension 1
  std::vector<double> singular_values;  // of the tangency least-squares system, descending
};

/// Dimension of Ker S (rigid motions tangent to the boundary): 3 for a
/// sphere, 1 for any other solid of revolution, 0 otherwise.
KernelClassification ker_s_classification(const GeometryDescriptor& geom);

}  // namespace slipflow::geometry
