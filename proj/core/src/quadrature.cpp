#include "slipflow/quadrature.hpp"

#include <cmath>
#include <numbers>

#include "slipflow/error.hpp"

namespace slipflow {

GaussLegendreRule gauss_legendre(int n) {
  if (n < 1) throw Error("Gauss-Legendre rule needs at least one node");
  GaussLegendreRule rule;
  rule.nodes.resize(static_cast<std::size_t>(n));
  rule.weights.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < (n + 1) / 2; ++i) {
    // Newton on P_n from the Tricomi initial guess.
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0;
      double p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    const auto lo = static_cast<std::size_t>(i);
    const auto hi = static_cast<std::size_t>(n - 1 - i);
    rule.nodes[lo] = -x;
    rule.nodes[hi] = x;
    rule.weights[lo] = w;
    rule.weights[hi] = w;
  }
  if (n % 2 == 1) rule.nodes[static_cast<std::size_t>(n / 2)] = 0.0;
  return rule;
}

QuadratureGrid make_ball_grid(double radius, int radial_nodes, int angular_degree) {
  if (!(radius > 0.0)) throw Error("grid radius must be positive");
  if (radial_nodes < 1 || angular_degree < 0) throw Error("invalid quadrature orders");
  QuadratureGrid g;
  g.radius = radius;
  g.radial_nodes = radial_nodes;
  g.angular_degree = angular_degree;

  const auto radial = gauss_legendre(radial_nodes);
  const auto polar = gauss_legendre(angular_degree / 2 + 1);
  const int azimuthal = angular_degree + 1;
  const double dphi = 2.0 * std::numbers::pi / azimuthal;

  for (std::size_t ip = 0; ip < polar.nodes.size(); ++ip) {
    const double mu = polar.nodes[ip];
    const double s = std::sqrt(std::max(0.0, 1.0 - mu * mu));
    for (int ja = 0; ja < azimuthal; ++ja) {
      const double phi = dphi * ja;
      const Vec3 dir(s * std::cos(phi), s * std::sin(phi), mu);
      const double wa = polar.weights[ip] * dphi;
      g.boundary_points.push_back(radius * dir);
      g.boundary_weights.push_back(wa * radius * radius);
      g.boundary_colatitude.push_back(std::acos(mu));
      for (std::size_t ir = 0; ir < radial.nodes.size(); ++ir) {
        const double r = 0.5 * radius * (radial.nodes[ir] + 1.0);
        g.volume_points.push_back(r * dir);
        g.volume_weights.push_back(wa * 0.5 * radius * radial.weights[ir] * r * r);
      }
    }
  }
  return g;
}

GridOrders bilinear_orders(int l_max, int n_max) { return {2 * (l_max + n_max) + 6, 2 * l_max + 4}; }

GridOrders nonlinear_orders(int l_max, int n_max) {
  const auto b = bilinear_orders(l_max, n_max);
  return {(3 * b.radial_nodes + 1) / 2, (3 * b.angular_degree + 1) / 2};
}

}  // namespace slipflow
