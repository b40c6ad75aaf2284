#include <gtest/gtest.h>

#include <cmath>
#include <memory>
#include <numbers>
#include <random>
#include <sstream>

#include "slipflow/error.hpp"
#include "slipflow/operators.hpp"
#include "oracles.hpp"

using namespace slipflow;
using namespace slipflow::operators;

namespace {

constexpr double kPi = std::numbers::pi;

const OperatorSet& no_friction() {
  static const auto ops = [] {
    OperatorOptions o;
    o.alpha = FrictionSpec::constant(0.0);
    return build_operator_set(o);
  }();
  return ops;
}

const OperatorSet& unit_friction() {
  static const auto ops = [] {
    OperatorOptions o;
    o.alpha = FrictionSpec::constant(1.0);
    o.advection = false;
    return build_operator_set(o);
  }();
  return ops;
}

double max_rel(const Matrix& a, const Matrix& b) { return (a - b).cwiseAbs().maxCoeff() / b.cwiseAbs().maxCoeff(); }

Vector kernel_vector(const OperatorSet& ops, int i) { return ops.kernel[static_cast<std::size_t>(i)]; }

}  // namespace

TEST(Friction, EvaluationAndValidation) {
  const FrictionSpec alpha{{0.5, 0.0, 1.0}};
  EXPECT_NEAR(alpha(0.0), 1.5, 1e-15);
  EXPECT_NEAR(alpha(kPi / 2), 0.5, 1e-15);
  EXPECT_FALSE(alpha.is_constant());
  EXPECT_TRUE(FrictionSpec::constant(0.0).is_zero());
  const auto grid = make_ball_grid(1.0, 4, 6);
  const auto s = sample_friction(alpha, grid);
  EXPECT_GE(s.min, 0.5 - 1e-12);
  EXPECT_LE(s.max, 1.5 + 1e-12);
  EXPECT_THROW(sample_friction(FrictionSpec{{0.1, 1.0}}, grid), OperatorError);
}

TEST(Operators, MassMatrix) {
  const auto& ops = no_friction();
  ASSERT_EQ(ops.size(), 144u);
  EXPECT_LT((ops.mass - ops.mass.transpose()).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT((ops.mass.diagonal().array() - 1.0).abs().maxCoeff(), 1e-12);
  const Eigen::SelfAdjointEigenSolver<Matrix> es(ops.mass);
  EXPECT_GT(es.eigenvalues().minCoeff(), 1e-10);
  EXPECT_TRUE(std::isfinite(ops.mass_condition));
  EXPECT_LT(ops.mass_condition, 1e10);
  const auto& b = *ops.basis;
  for (std::size_t i = 0; i < ops.size(); ++i) {
    for (std::size_t j = 0; j < ops.size(); ++j) {
      const auto& x = b.index(i);
      const auto& y = b.index(j);
      if (x.kind != y.kind && (x.degree != y.degree || x.order != y.order)) {
        EXPECT_LT(std::abs(ops.mass(i, j)), 1e-12) << i << "," << j;
      }
    }
  }
  const Vector y3 = kernel_vector(ops, 2);
  EXPECT_NEAR(y3.dot(ops.mass * y3), 8 * kPi / 15, 1e-13);
}

TEST(Operators, StrainFormOnRigidRotations) {
  const auto& ops = no_friction();
  for (int i = 0; i < 3; ++i) EXPECT_LT((ops.form_su * kernel_vector(ops, i)).cwiseAbs().maxCoeff(), 1e-12);
  const auto& f = unit_friction();
  const Vector y3 = kernel_vector(f, 2);
  EXPECT_NEAR(y3.dot(f.form_su * y3) / y3.dot(f.mass * y3), 5.0, 1e-12);
}

TEST(Operators, FormsExactOnDoubledGrid) {
  const auto& ops = unit_friction();
  const auto g2 = make_ball_grid(1.0, 2 * ops.bilinear_orders.radial_nodes, 2 * ops.bilinear_orders.angular_degree);
  const auto s2 = basis::sample_basis(*ops.basis, g2);
  EXPECT_LT(max_rel(assemble_form_su(s2, g2, ops.options.alpha), ops.form_su), 1e-11);
  EXPECT_LT(max_rel(assemble_mass(s2, g2), ops.mass), 1e-11);
}

TEST(Operators, FormEquivalence) {
  for (const auto& alpha : {FrictionSpec::constant(0.0), FrictionSpec::constant(1.0), FrictionSpec{{0.5, 0.0, 1.0}}}) {
    OperatorOptions o;
    o.alpha = alpha;
    o.advection = false;
    const auto ops = build_operator_set(o);
    EXPECT_LE(max_rel(ops.form_du, ops.form_su), 1e-8) << alpha.describe();
    EXPECT_LT((ops.form_su - ops.form_su.transpose()).cwiseAbs().maxCoeff(), 1e-10 * ops.form_su.norm());
    EXPECT_LT((ops.form_du - ops.form_du.transpose()).cwiseAbs().maxCoeff(), 1e-10 * ops.form_du.norm());
  }
}

TEST(Operators, StepOneIdentityOnDiagonal) {
  const auto& ops = no_friction();
  const double r = ops.options.radius;
  for (std::size_t i = 0; i < ops.size(); ++i) {
    if (ops.basis->index(i).kind != basis::FieldKind::Toroidal) continue;
    const double du = ops.gradient(i, i) - ops.boundary_mass(i, i) / r;
    EXPECT_NEAR(ops.form_du(i, i), du, 1e-10 * ops.gradient(i, i));
    EXPECT_NEAR(du, 2 * ops.strain(i, i), 1e-10 * ops.gradient(i, i));
  }
}

TEST(Operators, DuFormRequiresConcentricBall) {
  const auto& ops = unit_friction();
  const auto s = basis::sample_basis(*ops.basis, ops.grid);
  EXPECT_THROW(assemble_form_du(s, ops.grid, ops.options.alpha,
                                geometry::GeometryDescriptor::ball(1.0, Vec3(0.1, 0, 0))),
               OperatorError);
  EXPECT_THROW(assemble_form_du(s, ops.grid, ops.options.alpha,
                                geometry::GeometryDescriptor(geometry::Spheroid{1.0, 0.5, Vec3::UnitZ(), Vec3::Zero()})),
               OperatorError);
}

TEST(Operators, CoercivityShift) {
  const auto& ops = no_friction();
  EXPECT_EQ(coercivity_shift(ops.form_su, ops.mass), 0.0);
  EXPECT_EQ(unit_friction().c_beta, 0.0);
  const Matrix shifted = ops.form_su - 2.0 * ops.mass;
  const double c = coercivity_shift(shifted, ops.mass);
  EXPECT_NEAR(c, 2.0, 1e-6);
  const Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> es(ops.form_su + (c + 1.0) * ops.mass, ops.mass,
                                                            Eigen::EigenvaluesOnly);
  EXPECT_GE(es.eigenvalues().minCoeff(), 1.0 - 1e-6);
}

TEST(Operators, NullSpaceIsRigidRotations) {
  const auto& ops = no_friction();
  const auto& sp = ops.spectrum;
  EXPECT_EQ(ops.null_count(), 3);
  EXPECT_EQ(ops.first_positive(), 3);
  for (Eigen::Index j = 1; j < sp.values.size(); ++j) EXPECT_LE(sp.values(j - 1), sp.values(j));
  EXPECT_GE(sp.values.minCoeff(), -1e-9);
  Matrix k(static_cast<Eigen::Index>(ops.size()), 3);
  for (int i = 0; i < 3; ++i) k.col(i) = kernel_vector(ops, i);
  EXPECT_LE(max_principal_angle_sine(sp.vectors.leftCols(3), k, ops.mass), 1e-6);
  EXPECT_LE(sp.m_orthonormality, 1e-10);
  const Matrix gram = sp.vectors.transpose() * ops.mass * sp.vectors;
  EXPECT_LE((gram - Matrix::Identity(gram.rows(), gram.cols())).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_LE(sp.residual, 1e-8);
  EXPECT_LE(sp.b_orthogonality, 1e-8);
}

TEST(Operators, PositiveFrictionRemovesNullSpace) {
  const auto& ops = unit_friction();
  EXPECT_EQ(ops.null_count(), 0);
  EXPECT_GT(ops.sigma1(), 1e-9);
  // With alpha = 1 on the unit ball the Su form equals the full-gradient form.
  EXPECT_NEAR(ops.sigma1(), ops.poincare.c_classical, 1e-9 * ops.sigma1());
  EXPECT_LT(max_rel(ops.form_su, ops.gradient), 1e-12);
}

TEST(Operators, LowEigenvaluesStableUnderRefinement) {
  auto lowest = [](int l, int n) {
    OperatorOptions o;
    o.l_max = l;
    o.n_max = n;
    o.advection = false;
    const auto ops = build_operator_set(o);
    return Vector(ops.spectrum.values.segment(ops.first_positive(), 5));
  };
  const Vector a = lowest(3, 1);
  const Vector b = lowest(4, 1);
  const Vector c = lowest(4, 2);
  EXPECT_LE(((b - a).cwiseAbs().array() / b.array()).maxCoeff(), 0.05);
  EXPECT_LE(((c - b).cwiseAbs().array() / c.array()).maxCoeff(), 0.05);
  EXPECT_TRUE((c.array() <= b.array() * (1 + 1e-10)).all());
}

TEST(Operators, SymmetricPoincareConstant) {
  const auto& ops = no_friction();
  const auto& pc = ops.poincare;
  EXPECT_GT(pc.mu1, 0.0);
  EXPECT_NEAR(pc.C, 1.0 / std::sqrt(pc.mu1), 1e-15);
  EXPECT_NEAR(ops.spectrum.values(ops.first_positive()), 2.0 * pc.mu1, 1e-9);

  Matrix k(static_cast<Eigen::Index>(ops.size()), 3);
  for (int i = 0; i < 3; ++i) k.col(i) = kernel_vector(ops, i);
  const double oracle = oracle::rayleigh_descent(ops.strain, ops.mass, k, 4, 99);
  EXPECT_NEAR(pc.mu1, oracle, 1e-6 * oracle);

  const Vector y3 = kernel_vector(ops, 2);
  EXPECT_LT(y3.dot(ops.strain * y3) / y3.dot(ops.mass * y3), 1e-14);

  std::mt19937_64 rng(4);
  std::normal_distribution<double> nd;
  for (int t = 0; t < 100; ++t) {
    Vector u(static_cast<Eigen::Index>(ops.size()));
    for (Eigen::Index i = 0; i < u.size(); ++i) u[i] = nd(rng);
    const Vector w = pc.complement * (pc.complement.transpose() * ops.mass * u);
    EXPECT_GE(w.dot(ops.strain * w), pc.mu1 * w.dot(ops.mass * w) * (1 - 1e-9));
  }

  std::array<Vector, 3> bad = ops.kernel;
  bad[0] = Vector::Unit(static_cast<Eigen::Index>(ops.size()), 50);
  EXPECT_THROW(symmetric_poincare_constant(ops.strain, ops.gradient, ops.mass, bad), OperatorError);
}

TEST(Operators, PoincareRefinementDrift) {
  OperatorOptions o;
  o.l_max = 3;
  o.advection = false;
  const double coarse = build_operator_set(o).poincare.mu1;
  EXPECT_LE(std::abs(coarse - no_friction().poincare.mu1) / no_friction().poincare.mu1, 0.05);
}

TEST(Operators, KornStepOneIdentity) {
  const auto& ops = no_friction();
  const auto s = basis::sample_basis(*ops.basis, ops.grid);
  EXPECT_LE(korn_step1_check(s, ops.grid, ops.geometry, 100, 7), 1e-9);
  const Vector y3 = kernel_vector(ops, 2);
  EXPECT_NEAR(y3.dot(ops.gradient * y3), 8 * kPi / 3, 1e-12);
  EXPECT_NEAR(y3.dot(ops.boundary_mass * y3), 8 * kPi / 3, 1e-12);
}

TEST(Advection, Antisymmetry) {
  const auto& t = *no_friction().advection;
  const double mx = t.max_abs();
  EXPECT_LE(t.antisymmetry_defect(), 1e-10);
  double diag = 0.0;
  for (Eigen::Index i = 0; i < t.size(); ++i) {
    for (Eigen::Index j = 0; j < t.size(); ++j) diag = std::max(diag, std::abs(t(i, j, j)));
  }
  EXPECT_LE(diag, 1e-11 * std::max(1.0, mx));
}

TEST(Advection, RigidSelfAdvectionIsGradient) {
  const auto& ops = no_friction();
  const Vector y3 = kernel_vector(ops, 2);
  const Vector n = ops.advection->contract(y3);
  std::mt19937_64 rng(8);
  std::normal_distribution<double> nd;
  for (int t = 0; t < 10; ++t) {
    Vector c(n.size());
    for (Eigen::Index i = 0; i < c.size(); ++i) c[i] = nd(rng);
    EXPECT_LT(std::abs(n.dot(c)), 1e-11 * c.norm());
  }
}

TEST(Advection, MatchesMonteCarloIntegration) {
  const auto& ops = no_friction();
  const auto& t = *ops.advection;
  const auto& b = *ops.basis;
  const double r = ops.options.radius;
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<Eigen::Index> pick(0, t.size() - 1);
  std::vector<std::array<Eigen::Index, 3>> triples(20);
  for (auto& tr : triples) tr = {pick(rng), pick(rng), pick(rng)};

  const std::size_t samples = 1000000;
  std::uniform_real_distribution<double> u(-r, r);
  std::vector<double> sum(triples.size(), 0.0), sum2(triples.size(), 0.0);
  for (std::size_t s = 0; s < samples; ++s) {
    Vec3 x;
    do {
      x = Vec3(u(rng), u(rng), u(rng));
    } while (x.squaredNorm() > r * r);
    for (std::size_t k = 0; k < triples.size(); ++k) {
      const auto [i, j, l] = triples[k];
      const Vec3 vi = b.field(static_cast<std::size_t>(i)).evaluate(x);
      const Mat3 dj = b.field(static_cast<std::size_t>(j)).evaluate_jacobian(x);
      const Vec3 vl = b.field(static_cast<std::size_t>(l)).evaluate(x);
      const double f = (dj * vi).dot(vl);
      sum[k] += f;
      sum2[k] += f * f;
    }
  }
  const double vol = 4.0 / 3.0 * kPi * r * r * r;
  for (std::size_t k = 0; k < triples.size(); ++k) {
    const double mean = sum[k] / samples;
    const double var = std::max(0.0, sum2[k] / samples - mean * mean);
    const double se = vol * std::sqrt(var / (samples - 1));
    const auto [i, j, l] = triples[k];
    EXPECT_LE(std::abs(t(i, j, l) - vol * mean), 3.0 * se + 1e-12)
        << "T[" << i << "][" << j << "][" << l << "] = " << t(i, j, l) << ", estimate " << vol * mean << " +- " << se;
  }
}

TEST(Operators, SpectrumCsv) {
  std::ostringstream os;
  write_spectrum_csv(os, unit_friction().spectrum);
  const auto text = os.str();
  EXPECT_EQ(text.rfind("index,eigenvalue\n", 0), 0u);
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 145);
}
