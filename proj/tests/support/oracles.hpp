#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <limits>
#include <random>

#include "slipflow/types.hpp"

namespace slipflow::oracle {

/// Smallest Rayleigh quotient x'Ax / x'Mx over the M-orthogonal complement of
/// span(k), by projected gradient descent with an exact line search over
/// span{x, gradient, previous step}, restarted from random points.
inline double rayleigh_descent(const Matrix& a, const Matrix& m, const Matrix& k, int restarts, unsigned seed) {
  const Eigen::LLT<Matrix> llt(m);
  const Matrix l = llt.matrixL();
  const Matrix linv = l.triangularView<Eigen::Lower>().solve(Matrix::Identity(m.rows(), m.cols()));
  const Matrix at = linv * a * linv.transpose();
  const Eigen::HouseholderQR<Matrix> qr(l.transpose() * k);
  const Matrix q = qr.householderQ() * Matrix::Identity(k.rows(), k.cols());
  auto project = [&](const Vector& v) -> Vector { return v - q * (q.transpose() * v); };

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  const double scale = at.norm();
  double best = std::numeric_limits<double>::infinity();
  for (int r = 0; r < restarts; ++r) {
    Vector x(at.rows());
    for (Eigen::Index i = 0; i < x.size(); ++i) x[i] = nd(rng);
    x = project(x).normalized();
    Vector prev = Vector::Zero(x.size());
    double rho = x.dot(at * x);
    for (int it = 0; it < 20000; ++it) {
      const Vector g = project(at * x - rho * x);
      if (g.norm() < 1e-13 * scale) break;
      Matrix v(x.size(), prev.norm() > 0 ? 3 : 2);
      v.col(0) = x;
      v.col(1) = g;
      if (v.cols() == 3) v.col(2) = prev;
      const Eigen::HouseholderQR<Matrix> vq(v);
      Matrix basis = vq.householderQ() * Matrix::Identity(v.rows(), v.cols());
      for (Eigen::Index c = 0; c < basis.cols(); ++c) basis.col(c) = project(basis.col(c));
      const Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> small(basis.transpose() * at * basis,
                                                                   basis.transpose() * basis);
      Vector nx = project(basis * small.eigenvectors().col(0));
      nx.normalize();
      prev = nx - x;
      x = nx;
      rho = x.dot(at * x);
    }
    best = std::min(best, rho);
  }
  return best;
}

}  // namespace slipflow::oracle
