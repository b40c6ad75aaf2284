#pragma once

#include <vector>

#include "slipflow/types.hpp"

namespace slipflow {

/// Gauss-Legendre nodes and weights on [-1, 1], nodes ascending.
struct GaussLegendreRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

GaussLegendreRule gauss_legendre(int n);

/// Tensor-product rule on the ball of radius R: Gauss-Legendre in r (with
/// the r^2 Jacobian folded into the weights), Gauss-Legendre in cos(theta)
/// and the uniform trapezoid in phi. The angular part integrates spherical
/// polynomials of total degree <= angular_degree exactly; the radial part
/// integrates r^k for k <= 2 * radial_nodes - 3 exactly.
struct QuadratureGrid {
  double radius = 1.0;
  int radial_nodes = 0;
  int angular_degree = 0;

  std::vector<Vec3> volume_points;
  std::vector<double> volume_weights;

  std::vector<Vec3> boundary_points;
  std::vector<double> boundary_weights;
  std::vector<double> boundary_colatitude;

  std::size_t volume_size() const { return volume_points.size(); }
  std::size_t boundary_size() const { return boundary_points.size(); }
};

QuadratureGrid make_ball_grid(double radius, int radial_nodes, int angular_degree);

struct GridOrders {
  int radial_nodes = 0;
  int angular_degree = 0;
};

/// Orders making every bilinear form of a (l_max, n_max) basis exact.
GridOrders bilinear_orders(int l_max, int n_max);

/// Orders for cubic (advection) integrands: 1.5x the bilinear ones.
GridOrders nonlinear_orders(int l_max, int n_max);

}  // namespace slipflow
