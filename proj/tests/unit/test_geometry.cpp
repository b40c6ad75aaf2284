#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "slipflow/error.hpp"
#include "slipflow/geometry.hpp"

using namespace slipflow;
using namespace slipflow::geometry;

namespace {

GeometryDescriptor triaxial(double a, double b, double c) { return GeometryDescriptor(TriaxialEllipsoid{a, b, c}); }

/// Principal curvature magnitudes of x^2/a^2 + y^2/b^2 + z^2/c^2 = 1 from
/// the closed-form Gaussian and mean curvature.
std::pair<double, double> ellipsoid_curvatures(double a, double b, double c, const Vec3& p) {
  const double q = p.x() * p.x() / std::pow(a, 4) + p.y() * p.y() / std::pow(b, 4) + p.z() * p.z() / std::pow(c, 4);
  const double abc2 = a * a * b * b * c * c;
  const double gauss = 1.0 / (abc2 * q * q);
  const double mean = std::abs(p.squaredNorm() - a * a - b * b - c * c) / (2.0 * abc2 * std::pow(q, 1.5));
  const double disc = std::sqrt(std::max(0.0, mean * mean - gauss));
  return {mean + disc, mean - disc};
}

}  // namespace

TEST(Geometry, BallNormalAndCurvature) {
  const auto g = GeometryDescriptor::ball(2.0, Vec3(0.1, 0.2, -0.3));
  g.validate();
  const Vec3 c(0.1, 0.2, -0.3);
  const Vec3 dir = Vec3(1.0, -2.0, 0.5).normalized();
  const Vec3 p = c + 2.0 * dir;
  EXPECT_LT((g.normal(p) - dir).norm(), 1e-14);
  const auto s = shape_operator(g, p);
  EXPECT_NEAR(std::abs(s.k1), 0.5, 1e-13);
  EXPECT_NEAR(std::abs(s.k2), 0.5, 1e-13);
  EXPECT_NEAR(curvature_bound_lambda(g), 0.5, 1e-12);
}

TEST(Geometry, NormalMatchesFiniteDifferenceOfLevelFunction) {
  const std::vector<GeometryDescriptor> shapes = {
      GeometryDescriptor(Spheroid{1.0, 0.6, Vec3(1, 1, 0).normalized(), Vec3(0.2, 0, 0)}),
      triaxial(1.0, 0.8, 0.6),
      GeometryDescriptor(RevolutionProfile{-1.0, 1.2, {1.0, 0.3}, Vec3::UnitX(), Vec3::Zero()}),
  };
  for (const auto& g : shapes) {
    const auto pts = g.boundary_samples();
    ASSERT_FALSE(pts.empty());
    double worst = 0.0;
    for (std::size_t i = 0; i < pts.size(); i += 97) {
      const Vec3& p = pts[i];
      Vec3 grad;
      const double h = 1e-6;
      for (int a = 0; a < 3; ++a) {
        Vec3 e = Vec3::Zero();
        e[a] = h;
        grad[a] = (g.level(p + e) - g.level(p - e)) / (2 * h);
      }
      worst = std::max(worst, (g.normal(p) - grad.normalized()).norm());
      EXPECT_LT(g.surface_residual(p), 1e-10);
    }
    EXPECT_LT(worst, 1e-7) << g.kind_name();
  }
}

TEST(Geometry, SpheroidPoleAndEquatorCurvatures) {
  const double a = 1.0, c = 0.5;
  const GeometryDescriptor g(Spheroid{a, c, Vec3::UnitZ(), Vec3::Zero()});
  const auto pole = shape_operator(g, Vec3(0, 0, c));
  EXPECT_NEAR(std::abs(pole.k1), c / (a * a), 1e-12);
  EXPECT_NEAR(std::abs(pole.k2), c / (a * a), 1e-12);
  const auto eq = shape_operator(g, Vec3(a, 0, 0));
  const double hi = std::max(std::abs(eq.k1), std::abs(eq.k2));
  const double lo = std::min(std::abs(eq.k1), std::abs(eq.k2));
  EXPECT_NEAR(hi, a / (c * c), 1e-12);
  EXPECT_NEAR(lo, 1.0 / a, 1e-12);
}

TEST(Geometry, CurvatureBoundMatchesDenseParametricSampling) {
  const double a = 1.0, b = 0.8, c = 0.6;
  const auto g = triaxial(a, b, c);
  double oracle = 0.0;
  const int n = 401;
  for (int i = 0; i < n; ++i) {
    const double th = std::numbers::pi * i / (n - 1);
    for (int j = 0; j < n; ++j) {
      const double ph = 2 * std::numbers::pi * j / n;
      const Vec3 p(a * std::sin(th) * std::cos(ph), b * std::sin(th) * std::sin(ph), c * std::cos(th));
      oracle = std::max(oracle, ellipsoid_curvatures(a, b, c, p).first);
    }
  }
  EXPECT_NEAR(curvature_bound_lambda(g), oracle, 1e-6 * oracle);
  EXPECT_NEAR(oracle, a / (c * c), 1e-9);
}

TEST(Geometry, ShapeOperatorAgreesWithClosedFormEllipsoidCurvature) {
  const double a = 1.3, b = 0.9, c = 0.7;
  const auto g = triaxial(a, b, c);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int k = 0; k < 50; ++k) {
    Vec3 d(u(rng), u(rng), u(rng));
    d.normalize();
    const Vec3 p(a * d.x(), b * d.y(), c * d.z());
    const auto s = shape_operator(g, p);
    const auto [k1, k2] = ellipsoid_curvatures(a, b, c, p);
    EXPECT_NEAR(std::max(std::abs(s.k1), std::abs(s.k2)), k1, 1e-10);
    EXPECT_NEAR(std::min(std::abs(s.k1), std::abs(s.k2)), k2, 1e-10);
    EXPECT_NEAR(s.matrix(0, 1), s.matrix(1, 0), 1e-12);
  }
}

TEST(Geometry, GaussMapDifferentialPreconditions) {
  const auto g = GeometryDescriptor::ball(1.0);
  const Vec3 p(0, 0, 1);
  EXPECT_LT((gauss_map_differential(g, p, Vec3(1, 0, 0)) - Vec3(1, 0, 0)).norm(), 1e-13);
  EXPECT_THROW(gauss_map_differential(g, Vec3(0, 0, 1.1), Vec3(1, 0, 0)), PointOffSurfaceError);
  EXPECT_THROW(gauss_map_differential(g, p, Vec3(0, 0, 1)), NonTangentError);
}

TEST(Geometry, RigidFieldTangency) {
  const Vec3 c(0.3, 0, 0);
  const auto ball = GeometryDescriptor::ball(1.0, c);
  EXPECT_TRUE(rigid_field_tangency(ball, RigidField{Vec3::Zero(), Vec3(1, 2, 3), c}).tangent);
  EXPECT_FALSE(rigid_field_tangency(ball, RigidField{Vec3(1, 0, 0), Vec3::Zero(), c}).tangent);
  const GeometryDescriptor sph(Spheroid{1.0, 0.5, Vec3::UnitZ(), Vec3::Zero()});
  EXPECT_TRUE(rigid_field_tangency(sph, RigidField{Vec3::Zero(), Vec3::UnitZ(), Vec3::Zero()}).tangent);
  EXPECT_FALSE(rigid_field_tangency(sph, RigidField{Vec3::Zero(), Vec3::UnitX(), Vec3::Zero()}).tangent);
}

TEST(Geometry, KernelDimensionClassification) {
  const Vec3 c(0.5, -0.2, 0.1);
  const auto ball = ker_s_classification(GeometryDescriptor::ball(1.5, c));
  EXPECT_EQ(ball.dimension, 3);
  ASSERT_TRUE(ball.center.has_value());
  EXPECT_LT((*ball.center - c).norm(), 1e-9);

  const Vec3 axis = Vec3(1, 2, 2).normalized();
  const auto sph = ker_s_classification(GeometryDescriptor(Spheroid{1.0, 0.6, axis, c}));
  EXPECT_EQ(sph.dimension, 1);
  ASSERT_TRUE(sph.axis.has_value());
  EXPECT_NEAR(std::abs(sph.axis->dot(axis)), 1.0, 1e-9);
  ASSERT_TRUE(sph.axis_point.has_value());
  EXPECT_LT(((*sph.axis_point - c).cross(axis)).norm(), 1e-8);

  const auto rev = ker_s_classification(GeometryDescriptor(RevolutionProfile{-1.0, 1.0, {1.0, 0.4}, Vec3::UnitY(), Vec3::Zero()}));
  EXPECT_EQ(rev.dimension, 1);

  EXPECT_EQ(ker_s_classification(triaxial(1.0, 0.8, 0.6)).dimension, 0);
}

TEST(Geometry, InvalidDescriptionsRejected) {
  EXPECT_THROW(GeometryDescriptor::ball(-1.0).validate(), GeometryError);
  EXPECT_THROW(GeometryDescriptor(Spheroid{1.0, 0.0, Vec3::UnitZ(), Vec3::Zero()}).validate(), GeometryError);
  EXPECT_THROW(GeometryDescriptor(Spheroid{1.0, 1.0, Vec3::Zero(), Vec3::Zero()}).validate(), GeometryError);
  EXPECT_THROW(triaxial(1.0, -0.5, 1.0).validate(), GeometryError);
  EXPECT_THROW(GeometryDescriptor(RevolutionProfile{1.0, -1.0, {1.0}, Vec3::UnitZ(), Vec3::Zero()}).validate(),
               GeometryError);
}

TEST(Geometry, BallGaussMapIsScaledIdentity) {
  const auto g = GeometryDescriptor::ball(2.0);
  const Vec3 d = gauss_map_differential(g, Vec3(0, 0, 2), Vec3(1, 0, 0));
  EXPECT_LT((d - Vec3(0.5, 0, 0)).norm(), 1e-14);
  EXPECT_LT(gauss_map_differential(g, Vec3(0, 0, 2), Vec3::Zero()).norm(), 1e-15);
  for (const auto& p : g.boundary_samples()) {
    const auto s = shape_operator(g, p);
    EXPECT_LT((gauss_map_differential(g, p, s.t1) - 0.5 * s.t1).norm(), 1e-12);
  }
}

TEST(Geometry, SpheroidMeridianDerivativeMatchesFiniteDifference) {
  // Prolate spheroid a = 1, c = 2; meridian x(theta) = (sin theta, 0, 2 cos theta)
  // through the equator point (1, 0, 0), unit tangent (0, 0, -1).
  const GeometryDescriptor g(Spheroid{1.0, 2.0, Vec3::UnitZ(), Vec3::Zero()});
  const double ds = 1e-5;
  const double th0 = std::numbers::pi / 2;
  const double speed = 2.0;  // |x'(theta)| at the equator
  const double dth = ds / speed;
  auto x = [](double th) { return Vec3(std::sin(th), 0.0, 2.0 * std::cos(th)); };
  const Vec3 fd = (g.normal(x(th0 + dth)) - g.normal(x(th0 - dth))) / (2 * ds);
  const Vec3 dn = gauss_map_differential(g, Vec3(1, 0, 0), Vec3(0, 0, -1));
  EXPECT_LT((dn - fd).norm(), 1e-8);
  EXPECT_NEAR(dn.z(), -0.25, 1e-12);
}

TEST(Geometry, ProlateSpheroidBoundFromFundamentalForms) {
  const double a = 1.0, c = 2.0;
  const GeometryDescriptor g(Spheroid{a, c, Vec3::UnitZ(), Vec3::Zero()});
  double oracle = 0.0;
  const int n = 400;
  for (int i = 0; i < n; ++i) {
    const double th = std::numbers::pi * (i + 0.5) / n;
    for (int j = 0; j < n; ++j) {
      const double ph = 2 * std::numbers::pi * j / n;
      const double st = std::sin(th), ct = std::cos(th), sp = std::sin(ph), cp = std::cos(ph);
      const Vec3 xt(a * ct * cp, a * ct * sp, -c * st);
      const Vec3 xp(-a * st * sp, a * st * cp, 0.0);
      const Vec3 xtt(-a * st * cp, -a * st * sp, -c * ct);
      const Vec3 xtp(-a * ct * sp, a * ct * cp, 0.0);
      const Vec3 xpp(-a * st * cp, -a * st * sp, 0.0);
      const Vec3 nn = xt.cross(xp).normalized();
      const double e = xt.dot(xt), f = xt.dot(xp), gg = xp.dot(xp);
      const double l = xtt.dot(nn), m = xtp.dot(nn), nv = xpp.dot(nn);
      const double det = e * gg - f * f;
      const double kg = (l * nv - m * m) / det;
      const double h = (e * nv - 2 * f * m + gg * l) / (2 * det);
      const double disc = std::sqrt(std::max(0.0, h * h - kg));
      oracle = std::max({oracle, std::abs(h + disc), std::abs(h - disc)});
    }
  }
  const double lambda = curvature_bound_lambda(g);
  EXPECT_NEAR(lambda, c / (a * a), 1e-10);
  EXPECT_GE(lambda, oracle * (1 - 1e-12));
  EXPECT_NEAR(lambda, oracle, 1e-4 * oracle);
}

TEST(Geometry, CurvatureBoundMonotoneUnderRefinement) {
  GeometryDescriptor g(TriaxialEllipsoid{1.0, 1.3, 1.7}, SurfaceSampling{31, 40});
  const double coarse = curvature_bound_lambda(g);
  g.set_sampling(SurfaceSampling{61, 80});
  const double fine = curvature_bound_lambda(g);
  EXPECT_GE(fine, coarse * (1 - 1e-14));
}

TEST(Geometry, ShapeOperatorSelfAdjointAndTangent) {
  const std::vector<GeometryDescriptor> shapes = {
      GeometryDescriptor(Spheroid{1.0, 2.0, Vec3(0, 1, 1).normalized(), Vec3(0.1, 0.2, 0.3)}),
      triaxial(1.0, 1.3, 1.7),
      GeometryDescriptor(RevolutionProfile{-1.0, 1.0, {1.0, 0.3, 0.2}, Vec3::UnitZ(), Vec3::Zero()}),
  };
  std::mt19937_64 rng(17);
  std::normal_distribution<double> nd;
  for (const auto& g : shapes) {
    const auto pts = g.boundary_samples();
    std::uniform_int_distribution<std::size_t> pick(0, pts.size() - 1);
    for (int k = 0; k < 100; ++k) {
      const auto s = shape_operator(g, pts[pick(rng)]);
      const Vec3 v = nd(rng) * s.t1 + nd(rng) * s.t2;
      const Vec3 w = nd(rng) * s.t1 + nd(rng) * s.t2;
      const Vec3 dv = gauss_map_differential(g, s.point, v);
      const Vec3 dw = gauss_map_differential(g, s.point, w);
      EXPECT_NEAR(dv.dot(w), v.dot(dw), 1e-10);
      EXPECT_LT(std::abs(dv.dot(s.normal)), 1e-10);
    }
  }
}

TEST(Geometry, RigidFieldsHaveZeroStrain) {
  std::mt19937_64 rng(23);
  std::normal_distribution<double> nd;
  for (int k = 0; k < 20; ++k) {
    const RigidField w{Vec3(nd(rng), nd(rng), nd(rng)), Vec3(nd(rng), nd(rng), nd(rng)), Vec3(nd(rng), 0, 0)};
    const Mat3 j = w.jacobian();
    EXPECT_LT((j + j.transpose()).norm(), 1e-13);
  }
}

TEST(Geometry, ClassificationGeneratorsAreTangent) {
  const std::vector<GeometryDescriptor> shapes = {
      GeometryDescriptor::ball(1.0, Vec3(0.2, 0, 0)),
      GeometryDescriptor(Spheroid{1.0, 2.0, Vec3::UnitZ(), Vec3::Zero()}),
      GeometryDescriptor(RevolutionProfile{-1.0, 1.0, {1.0, 0.4}, Vec3::UnitX(), Vec3(0, 0.5, 0)}),
  };
  for (const auto& g : shapes) {
    const auto cls = ker_s_classification(g);
    ASSERT_EQ(cls.generators.size(), static_cast<std::size_t>(cls.dimension));
    for (const auto& w : cls.generators) EXPECT_TRUE(rigid_field_tangency(g, w).tangent) << g.kind_name();
  }
  const auto sph = ker_s_classification(shapes[1]);
  ASSERT_TRUE(sph.axis.has_value());
  EXPECT_NEAR(std::abs(sph.axis->z()), 1.0, 1e-9);
}

TEST(Geometry, TriaxialAdmitsNoTangentRigidField) {
  const auto g = triaxial(1.0, 1.3, 1.7);
  EXPECT_EQ(ker_s_classification(g).dimension, 0);
  std::mt19937_64 rng(29);
  std::normal_distribution<double> nd;
  for (int k = 0; k < 100; ++k) {
    const RigidField w{Vec3(nd(rng), nd(rng), nd(rng)), Vec3(nd(rng), nd(rng), nd(rng)), Vec3::Zero()};
    EXPECT_FALSE(rigid_field_tangency(g, w).tangent);
  }
}
