#include "slipflow/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "slipflow/error.hpp"

namespace slipflow::geometry {

namespace {

// Orthonormal frame whose third column is the (normalized) axis.
Mat3 axis_frame(const Vec3& axis) {
  const Vec3 e3 = axis.normalized();
  Vec3 helper = Vec3::UnitX();
  if (std::abs(e3.x()) > 0.9) helper = Vec3::UnitY();
  const Vec3 e1 = (helper - helper.dot(e3) * e3).normalized();
  const Vec3 e2 = e3.cross(e1);
  Mat3 frame;
  frame.col(0) = e1;
  frame.col(1) = e2;
  frame.col(2) = e3;
  return frame;
}

struct LocalSurface {
  Mat3 frame = Mat3::Identity();
  Vec3 center = Vec3::Zero();
};

LocalSurface local_surface(const Shape& shape) {
  return std::visit(
      [](const auto& s) -> LocalSurface {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, Spheroid> || std::is_same_v<T, RevolutionProfile>) {
          return {axis_frame(s.axis), s.center};
        } else {
          return {Mat3::Identity(), s.center};
        }
      },
      shape);
}

struct LocalDerivatives {
  double value;
  Vec3 gradient;
  Vec3 hessian_diagonal;  // all supported level functions are separable quadrics in the frame
};

LocalDerivatives local_level(const Shape& shape, const Vec3& xi) {
  return std::visit(
      [&xi](const auto& s) -> LocalDerivatives {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, Ball>) {
          return {xi.squaredNorm() - s.radius * s.radius, 2.0 * xi, Vec3::Constant(2.0)};
        } else if constexpr (std::is_same_v<T, Spheroid>) {
          const double ia = 1.0 / (s.equatorial * s.equatorial);
          const double ic = 1.0 / (s.polar * s.polar);
          const Vec3 scale(ia, ia, ic);
          return {xi.cwiseProduct(xi).dot(scale) - 1.0, 2.0 * xi.cwiseProduct(scale), 2.0 * scale};
        } else if constexpr (std::is_same_v<T, TriaxialEllipsoid>) {
          const Vec3 scale(1.0 / (s.a * s.a), 1.0 / (s.b * s.b), 1.0 / (s.c * s.c));
          return {xi.cwiseProduct(xi).dot(scale) - 1.0, 2.0 * xi.cwiseProduct(scale), 2.0 * scale};
        } else {
          const double z = xi.z();
          return {xi.x() * xi.x() + xi.y() * xi.y() - s.rho_squared(z),
                  Vec3(2.0 * xi.x(), 2.0 * xi.y(), -s.rho_squared_derivative(z)),
                  Vec3(2.0, 2.0, -s.rho_squared_second_derivative(z))};
        }
      },
      shape);
}

double horner(const std::vector<double>& c, double z) {
  double acc = 0.0;
  for (auto it = c.rbegin(); it != c.rend(); ++it) acc = acc * z + *it;
  return acc;
}

std::vector<double> derivative_coefficients(const std::vector<double>& c) {
  std::vector<double> d;
  for (std::size_t k = 1; k < c.size(); ++k) d.push_back(static_cast<double>(k) * c[k]);
  return d;
}

void require(bool ok, const std::string& what) {
  if (!ok) throw GeometryError(what);
}

bool finite(const Vec3& v) { return v.allFinite(); }

}  // namespace

double RevolutionProfile::rho_squared(double z) const {
  const double h = horner(shape, z);
  return (z - z0) * (z1 - z) * h * h;
}

double RevolutionProfile::rho_squared_derivative(double z) const {
  const double q = (z - z0) * (z1 - z);
  const double dq = -2.0 * z + z0 + z1;
  const double h = horner(shape, z);
  const double dh = horner(derivative_coefficients(shape), z);
  return dq * h * h + 2.0 * q * h * dh;
}

double RevolutionProfile::rho_squared_second_derivative(double z) const {
  const double q = (z - z0) * (z1 - z);
  const double dq = -2.0 * z + z0 + z1;
  const auto d1 = derivative_coefficients(shape);
  const double h = horner(shape, z);
  const double dh = horner(d1, z);
  const double ddh = horner(derivative_coefficients(d1), z);
  return -2.0 * h * h + 4.0 * dq * h * dh + 2.0 * q * (dh * dh + h * ddh);
}

Mat3 RigidField::jacobian() const {
  Mat3 j;
  j << 0.0, -angular.z(), angular.y(),  //
      angular.z(), 0.0, -angular.x(),   //
      -angular.y(), angular.x(), 0.0;
  return j;
}

GeometryDescriptor::GeometryDescriptor(Shape shape, SurfaceSampling sampling)
    : shape_(std::move(shape)), sampling_(sampling) {}

GeometryDescriptor GeometryDescriptor::ball(double radius, const Vec3& center) {
  return GeometryDescriptor(Ball{radius, center});
}

std::string GeometryDescriptor::kind_name() const {
  return std::visit(
      [](const auto& s) -> std::string {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, Ball>) return "ball";
        else if constexpr (std::is_same_v<T, Spheroid>) return "spheroid";
        else if constexpr (std::is_same_v<T, TriaxialEllipsoid>) return "triaxial";
        else return "revolution";
      },
      shape_);
}

void GeometryDescriptor::validate() const {
  require(sampling_.polar >= 2 && sampling_.azimuthal >= 3,
          "surface sampling needs at least 2 polar and 3 azimuthal intervals");
  std::visit(
      [](const auto& s) {
        using T = std::decay_t<decltype(s)>;
        require(finite(s.center), "center must be finite");
        if constexpr (std::is_same_v<T, Ball>) {
          require(std::isfinite(s.radius) && s.radius > 0.0, "ball radius must be positive");
        } else if constexpr (std::is_same_v<T, Spheroid>) {
          require(s.equatorial > 0.0 && s.polar > 0.0, "spheroid semi-axes must be positive");
          require(finite(s.axis) && s.axis.norm() > 0.0, "spheroid axis must be a nonzero vector");
        } else if constexpr (std::is_same_v<T, TriaxialEllipsoid>) {
          require(s.a > 0.0 && s.b > 0.0 && s.c > 0.0, "ellipsoid semi-axes must be positive");
        } else {
          require(s.z1 > s.z0, "profile needs z1 > z0");
          require(!s.shape.empty(), "profile shape polynomial is empty");
          require(finite(s.axis) && s.axis.norm() > 0.0, "profile axis must be a nonzero vector");
          // h must keep one sign on [z0, z1]; otherwise rho vanishes in the interior.
          constexpr int kProbe = 4000;
          double hmin = std::numeric_limits<double>::infinity();
          double hmax = -hmin;
          for (int i = 0; i <= kProbe; ++i) {
            const double z = s.z0 + (s.z1 - s.z0) * i / kProbe;
            const double h = horner(s.shape, z);
            hmin = std::min(hmin, h);
            hmax = std::max(hmax, h);
          }
          const double scale = std::max(std::abs(hmin), std::abs(hmax));
          require(scale > 0.0 && (hmin > 1e-8 * scale || hmax < -1e-8 * scale),
                  "profile radius vanishes inside (z0, z1): h(z) changes sign or touches zero");
        }
      },
      shape_);
}

double GeometryDescriptor::level(const Vec3& x) const {
  const auto ls = local_surface(shape_);
  return local_level(shape_, ls.frame.transpose() * (x - ls.center)).value;
}

Vec3 GeometryDescriptor::level_gradient(const Vec3& x) const {
  const auto ls = local_surface(shape_);
  return ls.frame * local_level(shape_, ls.frame.transpose() * (x - ls.center)).gradient;
}

Mat3 GeometryDescriptor::level_hessian(const Vec3& x) const {
  const auto ls = local_surface(shape_);
  const auto d = local_level(shape_, ls.frame.transpose() * (x - ls.center));
  return ls.frame * d.hessian_diagonal.asDiagonal() * ls.frame.transpose();
}

Vec3 GeometryDescriptor::normal(const Vec3& p) const { return level_gradient(p).normalized(); }

double GeometryDescriptor::surface_residual(const Vec3& p) const {
  const double g = level_gradient(p).norm();
  if (g == 0.0) return std::numeric_limits<double>::infinity();
  return std::abs(level(p)) / g;
}

std::vector<Vec3> GeometryDescriptor::boundary_samples() const {
  const int np = sampling_.polar;
  const int na = sampling_.azimuthal;
  const auto ls = local_surface(shape_);
  std::vector<Vec3> pts;
  pts.reserve(static_cast<std::size_t>((np + 1) * na));
  for (int i = 0; i <= np; ++i) {
    for (int j = 0; j < na; ++j) {
      const double phi = 2.0 * std::numbers::pi * j / na;
      const Vec3 local = std::visit(
          [&](const auto& s) -> Vec3 {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, RevolutionProfile>) {
              const double z = s.z0 + (s.z1 - s.z0) * i / np;
              const double rho = (i == 0 || i == np) ? 0.0 : std::sqrt(std::max(0.0, s.rho_squared(z)));
              return {rho * std::cos(phi), rho * std::sin(phi), z};
            } else {
              const double theta = std::numbers::pi * i / np;
              const Vec3 dir(std::sin(theta) * std::cos(phi), std::sin(theta) * std::sin(phi), std::cos(theta));
              if constexpr (std::is_same_v<T, Ball>) {
                return s.radius * dir;
              } else if constexpr (std::is_same_v<T, Spheroid>) {
                return dir.cwiseProduct(Vec3(s.equatorial, s.equatorial, s.polar));
              } else {
                return dir.cwiseProduct(Vec3(s.a, s.b, s.c));
              }
            }
          },
          shape_);
      pts.push_back(ls.center + ls.frame * local);
    }
  }
  return pts;
}

Vec3 gauss_map_differential(const GeometryDescriptor& geom, const Vec3& p, const Vec3& v) {
  const double off = geom.surface_residual(p);
  if (!(off <= kSurfaceTolerance)) {
    std::ostringstream os;
    os << "point is not on the boundary (residual " << off << ")";
    throw PointOffSurfaceError(os.str());
  }
  const Vec3 grad = geom.level_gradient(p);
  const Vec3 n = grad.normalized();
  if (std::abs(v.dot(n)) > kSurfaceTolerance * std::max(1.0, v.norm())) {
    std::ostringstream os;
    os << "vector is not tangent (v.n = " << v.dot(n) << ")";
    throw NonTangentError(os.str());
  }
  const Vec3 hv = geom.level_hessian(p) * v;
  return (hv - n.dot(hv) * n) / grad.norm();
}

ShapeOperatorSample shape_operator(const GeometryDescriptor& geom, const Vec3& p) {
  ShapeOperatorSample s;
  s.point = p;
  s.normal = geom.normal(p);
  const Vec3& n = s.normal;
  Eigen::Index axis = 0;
  n.cwiseAbs().minCoeff(&axis);
  const Vec3 e = Vec3::Unit(axis);
  s.t1 = (e - e.dot(n) * n).normalized();
  s.t2 = n.cross(s.t1);
  const Vec3 d1 = gauss_map_differential(geom, p, s.t1);
  const Vec3 d2 = gauss_map_differential(geom, p, s.t2);
  s.matrix << s.t1.dot(d1), s.t1.dot(d2), s.t2.dot(d1), s.t2.dot(d2);
  // Closed-form eigenvalues of the symmetrized 2x2 matrix.
  const double a = s.matrix(0, 0);
  const double c = s.matrix(1, 1);
  const double b = 0.5 * (s.matrix(0, 1) + s.matrix(1, 0));
  const double mean = 0.5 * (a + c);
  const double rad = std::hypot(0.5 * (a - c), b);
  s.k1 = -(mean - rad);
  s.k2 = -(mean + rad);
  return s;
}

CurvatureExtrema curvature_extrema(const GeometryDescriptor& geom) {
  geom.validate();
  CurvatureExtrema out;
  out.min_k = std::numeric_limits<double>::infinity();
  out.max_k = -out.min_k;
  for (const Vec3& p : geom.boundary_samples()) {
    const auto s = shape_operator(geom, p);
    out.lambda = std::max({out.lambda, std::abs(s.k1), std::abs(s.k2)});
    out.min_k = std::min(out.min_k, s.k2);
    out.max_k = std::max(out.max_k, s.k1);
  }
  return out;
}

double curvature_bound_lambda(const GeometryDescriptor& geom) { return curvature_extrema(geom).lambda; }

TangencyResult rigid_field_tangency(const GeometryDescriptor& geom, const RigidField& w) {
  geom.validate();
  TangencyResult r;
  for (const Vec3& p : geom.boundary_samples()) {
    const Vec3 wp = w(p);
    r.max_violation = std::max(r.max_violation, std::abs(wp.dot(geom.normal(p))) / (1.0 + wp.norm()));
  }
  r.tangent = r.max_violation <= kTangencyThreshold;
  return r;
}

KernelClassification ker_s_classification(const GeometryDescriptor& geom) {
  constexpr double kNullThreshold = 1e-7;
  geom.validate();
  const auto pts = geom.boundary_samples();
  Vec3 centroid = Vec3::Zero();
  for (const Vec3& p : pts) centroid += p;
  centroid /= static_cast<double>(pts.size());
  double length = 0.0;
  for (const Vec3& p : pts) length = std::max(length, (p - centroid).norm());

  // w.n = a.n + (L b).(((x - c)/L) x n): one row per boundary sample.
  Eigen::MatrixXd rows(static_cast<Eigen::Index>(pts.size()), 6);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const Vec3 n = geom.normal(pts[i]);
    const Vec3 m = ((pts[i] - centroid) / length).cross(n);
    rows.row(static_cast<Eigen::Index>(i)) << n.transpose(), m.transpose();
  }
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(rows);
  const Eigen::Matrix<double, 6, 6> r = qr.matrixQR().topRows(6).triangularView<Eigen::Upper>();
  Eigen::JacobiSVD<Eigen::Matrix<double, 6, 6>> svd(r, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();

  KernelClassification out;
  out.singular_values.assign(sv.data(), sv.data() + sv.size());
  std::vector<std::pair<Vec3, Vec3>> nulls;
  for (int k = 0; k < 6; ++k) {
    if (sv(k) <= kNullThreshold * sv(0)) {
      const auto col = svd.matrixV().col(k);
      nulls.emplace_back(col.head<3>(), col.tail<3>() / length);
    }
  }
  out.dimension = static_cast<int>(nulls.size());

  if (out.dimension == 0) return out;
  if (out.dimension == 1) {
    auto [a, b] = nulls.front();
    if (b.norm() < 1e-8 * std::max(1.0, a.norm()))
      throw GeometryError("classification found a tangent translation; boundary is not bounded");
    const double s = 1.0 / b.norm();
    a *= s;
    b *= s;
    Eigen::Index big = 0;
    b.cwiseAbs().maxCoeff(&big);
    if (b(big) < 0.0) {
      a = -a;
      b = -b;
    }
    const Vec3 c = centroid + b.cross(a);
    out.axis = b;
    out.axis_point = c;
    out.generators.push_back(RigidField{Vec3::Zero(), b, c});
    return out;
  }
  if (out.dimension == 3) {
    // Each generator is b_k x (x - c): a_k = -b_k x c' with c' relative to the centroid.
    Eigen::Matrix<double, 9, 3> lhs;
    Eigen::Matrix<double, 9, 1> rhs;
    for (int k = 0; k < 3; ++k) {
      const auto& [a, b] = nulls[static_cast<std::size_t>(k)];
      RigidField cross{Vec3::Zero(), b, Vec3::Zero()};
      lhs.block<3, 3>(3 * k, 0) = cross.jacobian();
      rhs.segment<3>(3 * k) = -a;
    }
    const Vec3 c = centroid + lhs.colPivHouseholderQr().solve(rhs);
    out.center = c;
    for (int i = 0; i < 3; ++i) out.generators.push_back(RigidField{Vec3::Zero(), Vec3::Unit(i), c});
    return out;
  }
  std::ostringstream os;
  os << "rigid-motion kernel has dimension " << out.dimension << ", expected 0, 1 or 3";
  throw GeometryError(os.str());
}

}  // namespace slipflow::geometry
