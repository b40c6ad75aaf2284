#pragma once

// Sparse trivariate polynomials with exact differentiation. Basis fields are
// polynomial in Cartesian coordinates, so values and Jacobians are evaluated
// from closed forms everywhere, including the origin and the poles.

#include <array>
#include <map>
#include <vector>

#include "slipflow/types.hpp"

namespace slipflow {

class Polynomial {
 public:
  using Exponent = std::array<int, 3>;

  struct Term {
    Exponent power;
    double coefficient;
  };

  Polynomial() = default;

  static Polynomial constant(double c);
  /// x, y or z for axis 0, 1, 2.
  static Polynomial coordinate(int axis);
  static Polynomial monomial(const Exponent& power, double c = 1.0);
  /// x^2 + y^2 + z^2.
  static Polynomial radius_squared();

  Polynomial& operator+=(const Polynomial& other);
  Polynomial& operator-=(const Polynomial& other);
  Polynomial& operator*=(double s);

  friend Polynomial operator+(Polynomial a, const Polynomial& b) { return a += b; }
  friend Polynomial operator-(Polynomial a, const Polynomial& b) { return a -= b; }
  friend Polynomial operator*(Polynomial a, double s) { return a *= s; }
  friend Polynomial operator*(double s, Polynomial a) { return a *= s; }
  friend Polynomial operator*(const Polynomial& a, const Polynomial& b);

  Polynomial derivative(int axis) const;
  Polynomial pow(int exponent) const;

  double evaluate(const Vec3& x) const;
  int degree() const;
  bool empty() const { return terms_.empty(); }
  std::vector<Term> terms() const;

 private:
  void prune();
  std::map<Exponent, double> terms_;
};

using VectorPolynomial = std::array<Polynomial, 3>;

VectorPolynomial gradient(const Polynomial& p);
Polynomial divergence(const VectorPolynomial& v);
Polynomial laplacian(const Polynomial& p);
Polynomial dot(const VectorPolynomial& a, const VectorPolynomial& b);
VectorPolynomial cross(const VectorPolynomial& a, const VectorPolynomial& b);
VectorPolynomial position();
VectorPolynomial scale(const VectorPolynomial& v, const Polynomial& s);
VectorPolynomial operator+(const VectorPolynomial& a, const VectorPolynomial& b);
VectorPolynomial operator-(const VectorPolynomial& a, const VectorPolynomial& b);

/// Flattened polynomial for fast repeated evaluation against a shared
/// table of coordinate powers.
class CompiledPolynomial {
 public:
  CompiledPolynomial() = default;
  explicit CompiledPolynomial(const Polynomial& p);

  int degree() const { return degree_; }

  /// `powers` holds x^k, y^k, z^k for k = 0..D in rows 0..2 (D >= degree()).
  double evaluate(const Eigen::Matrix<double, 3, Eigen::Dynamic>& powers) const;

 private:
  std::vector<std::array<int, 3>> power_;
  std::vector<double> coefficient_;
  int degree_ = 0;
};

Eigen::Matrix<double, 3, Eigen::Dynamic> power_table(const Vec3& x, int max_degree);

/// Real solid harmonic r^l Y_lm(theta, phi) as a homogeneous polynomial of
/// degree l, orthonormal on the unit sphere. m > 0 selects cos(m phi),
/// m < 0 selects sin(|m| phi).
Polynomial solid_harmonic(int l, int m);

}  // namespace slipflow
