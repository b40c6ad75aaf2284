#include "slipflow/polynomial.hpp"

#include <cmath>
#include <numbers>

namespace slipflow {

namespace {

double binomial(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

double factorial_ratio(int n, int m) {  // n! / m!, n >= m
  double r = 1.0;
  for (int i = m + 1; i <= n; ++i) r *= i;
  return r;
}

}  // namespace

Polynomial Polynomial::constant(double c) { return monomial({0, 0, 0}, c); }

Polynomial Polynomial::coordinate(int axis) {
  Exponent e{0, 0, 0};
  e[static_cast<std::size_t>(axis)] = 1;
  return monomial(e);
}

Polynomial Polynomial::monomial(const Exponent& power, double c) {
  Polynomial p;
  if (c != 0.0) p.terms_[power] = c;
  return p;
}

Polynomial Polynomial::radius_squared() {
  return monomial({2, 0, 0}) + monomial({0, 2, 0}) + monomial({0, 0, 2});
}

Polynomial& Polynomial::operator+=(const Polynomial& other) {
  for (const auto& [e, c] : other.terms_) terms_[e] += c;
  prune();
  return *this;
}

Polynomial& Polynomial::operator-=(const Polynomial& other) {
  for (const auto& [e, c] : other.terms_) terms_[e] -= c;
  prune();
  return *this;
}

Polynomial& Polynomial::operator*=(double s) {
  for (auto& [e, c] : terms_) c *= s;
  prune();
  return *this;
}

Polynomial operator*(const Polynomial& a, const Polynomial& b) {
  Polynomial r;
  for (const auto& [ea, ca] : a.terms_) {
    for (const auto& [eb, cb] : b.terms_) {
      r.terms_[{ea[0] + eb[0], ea[1] + eb[1], ea[2] + eb[2]}] += ca * cb;
    }
  }
  r.prune();
  return r;
}

Polynomial Polynomial::derivative(int axis) const {
  const auto a = static_cast<std::size_t>(axis);
  Polynomial r;
  for (const auto& [e, c] : terms_) {
    if (e[a] == 0) continue;
    Exponent d = e;
    d[a] -= 1;
    r.terms_[d] += c * e[a];
  }
  r.prune();
  return r;
}

Polynomial Polynomial::pow(int exponent) const {
  Polynomial r = constant(1.0);
  for (int i = 0; i < exponent; ++i) r = r * *this;
  return r;
}

double Polynomial::evaluate(const Vec3& x) const {
  double acc = 0.0;
  for (const auto& [e, c] : terms_) acc += c * std::pow(x.x(), e[0]) * std::pow(x.y(), e[1]) * std::pow(x.z(), e[2]);
  return acc;
}

int Polynomial::degree() const {
  int d = 0;
  for (const auto& [e, c] : terms_) d = std::max(d, e[0] + e[1] + e[2]);
  return d;
}

std::vector<Polynomial::Term> Polynomial::terms() const {
  std::vector<Term> out;
  out.reserve(terms_.size());
  for (const auto& [e, c] : terms_) out.push_back({e, c});
  return out;
}

void Polynomial::prune() {
  // Exact cancellations only; tiny rounding residues are kept.
  std::erase_if(terms_, [](const auto& kv) { return kv.second == 0.0; });
}

VectorPolynomial gradient(const Polynomial& p) { return {p.derivative(0), p.derivative(1), p.derivative(2)}; }

Polynomial divergence(const VectorPolynomial& v) {
  return v[0].derivative(0) + v[1].derivative(1) + v[2].derivative(2);
}

Polynomial laplacian(const Polynomial& p) {
  return p.derivative(0).derivative(0) + p.derivative(1).derivative(1) + p.derivative(2).derivative(2);
}

Polynomial dot(const VectorPolynomial& a, const VectorPolynomial& b) {
  return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
}

VectorPolynomial cross(const VectorPolynomial& a, const VectorPolynomial& b) {
  return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}

VectorPolynomial position() {
  return {Polynomial::coordinate(0), Polynomial::coordinate(1), Polynomial::coordinate(2)};
}

VectorPolynomial scale(const VectorPolynomial& v, const Polynomial& s) { return {v[0] * s, v[1] * s, v[2] * s}; }

VectorPolynomial operator+(const VectorPolynomial& a, const VectorPolynomial& b) {
  return {a[0] + b[0], a[1] + b[1], a[2] + b[2]};
}

VectorPolynomial operator-(const VectorPolynomial& a, const VectorPolynomial& b) {
  return {a[0] - b[0], a[1] - b[1], a[2] - b[2]};
}

CompiledPolynomial::CompiledPolynomial(const Polynomial& p) {
  for (const auto& t : p.terms()) {
    power_.push_back(t.power);
    coefficient_.push_back(t.coefficient);
    degree_ = std::max(degree_, t.power[0] + t.power[1] + t.power[2]);
  }
}

double CompiledPolynomial::evaluate(const Eigen::Matrix<double, 3, Eigen::Dynamic>& powers) const {
  double acc = 0.0;
  for (std::size_t i = 0; i < coefficient_.size(); ++i) {
    const auto& e = power_[i];
    acc += coefficient_[i] * powers(0, e[0]) * powers(1, e[1]) * powers(2, e[2]);
  }
  return acc;
}

Eigen::Matrix<double, 3, Eigen::Dynamic> power_table(const Vec3& x, int max_degree) {
  Eigen::Matrix<double, 3, Eigen::Dynamic> t(3, max_degree + 1);
  t.col(0).setOnes();
  for (int k = 1; k <= max_degree; ++k) t.col(k) = t.col(k - 1).cwiseProduct(x);
  return t;
}

Polynomial solid_harmonic(int l, int m) {
  const int am = std::abs(m);
  // Azimuthal factor Re/Im (x + i y)^|m|.
  Polynomial azimuthal;
  for (int p = 0; p <= am; ++p) {
    const double angle = (am - p) * std::numbers::pi / 2.0;
    const double trig = m >= 0 ? std::cos(angle) : std::sin(angle);
    const double c = binomial(am, p) * std::round(trig);
    if (c != 0.0) azimuthal += Polynomial::monomial({p, am - p, 0}, c);
  }
  // Associated-Legendre factor in z and r^2, without the Condon-Shortley phase.
  Polynomial legendre;
  const Polynomial r2 = Polynomial::radius_squared();
  for (int k = 0; k <= (l - am) / 2; ++k) {
    const double c = ((k % 2) ? -1.0 : 1.0) * std::ldexp(1.0, -l) * binomial(l, k) * binomial(2 * l - 2 * k, l) *
                     factorial_ratio(l - 2 * k, l - 2 * k - am);
    legendre += r2.pow(k) * Polynomial::monomial({0, 0, l - 2 * k - am}, c);
  }
  double norm = std::sqrt((2.0 * l + 1.0) / (4.0 * std::numbers::pi) / factorial_ratio(l + am, l - am));
  if (m != 0) norm *= std::sqrt(2.0);
  return (legendre * azimuthal) * norm;
}

}  // namespace slipflow
