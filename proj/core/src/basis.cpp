#include "slipflow/basis.hpp"

#include <algorithm>
#include <cmath>

#include "slipflow/error.hpp"

namespace slipflow::basis {

namespace {

VectorPolynomial curl(const VectorPolynomial& w) {
  return {w[2].derivative(1) - w[1].derivative(2), w[0].derivative(2) - w[2].derivative(0),
          w[1].derivative(0) - w[0].derivative(1)};
}

struct CompiledField {
  std::array<CompiledPolynomial, 3> value;
  std::array<CompiledPolynomial, 9> jacobian;

  explicit CompiledField(const BasisField& f) {
    for (std::size_t a = 0; a < 3; ++a) {
      value[a] = CompiledPolynomial(f.value[a]);
      for (std::size_t b = 0; b < 3; ++b) jacobian[3 * a + b] = CompiledPolynomial(f.jacobian[a][b]);
    }
  }
};

}  // namespace

std::string to_string(FieldKind kind) { return kind == FieldKind::Toroidal ? "toroidal" : "poloidal"; }

std::vector<BasisIndex> build_basis(double radius, int l_max, int n_max, std::size_t max_count) {
  if (!(radius > 0.0)) throw BasisError("basis radius must be positive");
  if (l_max < 1) throw BasisError("l_max must be at least 1");
  if (n_max < 0) throw BasisError("n_max must be non-negative");
  const auto count = static_cast<std::size_t>(2 * (n_max + 1) * ((l_max + 1) * (l_max + 1) - 1));
  if (count > max_count) {
    throw BasisError("basis size " + std::to_string(count) + " exceeds the limit " + std::to_string(max_count));
  }
  std::vector<BasisIndex> out;
  out.reserve(count);
  for (FieldKind kind : {FieldKind::Toroidal, FieldKind::Poloidal}) {
    for (int l = 1; l <= l_max; ++l) {
      for (int m = -l; m <= l; ++m) {
        for (int n = 0; n <= n_max; ++n) out.push_back({kind, l, m, n, radius});
      }
    }
  }
  return out;
}

BasisField make_field(const BasisIndex& index) {
  if (index.degree < 1 || std::abs(index.order) > index.degree || index.radial < 0) {
    throw BasisError("invalid basis index");
  }
  const Polynomial h = solid_harmonic(index.degree, index.order);
  const Polynomial r2 = Polynomial::radius_squared();
  const VectorPolynomial x = position();

  BasisField f;
  f.index = index;
  if (index.kind == FieldKind::Toroidal) {
    const Polynomial g = r2.pow(index.radial) * h;
    f.value = cross(gradient(g), x);
  } else {
    const Polynomial cap = Polynomial::constant(index.radius * index.radius) - r2;
    const Polynomial g = r2.pow(index.radial) * cap * h;
    f.value = curl(cross(gradient(g), x));
  }
  for (std::size_t a = 0; a < 3; ++a) f.jacobian[a] = gradient(f.value[a]);
  return f;
}

Vec3 BasisField::evaluate(const Vec3& x) const {
  return {value[0].evaluate(x), value[1].evaluate(x), value[2].evaluate(x)};
}

Mat3 BasisField::evaluate_jacobian(const Vec3& x) const {
  Mat3 j;
  for (std::size_t a = 0; a < 3; ++a) {
    for (std::size_t b = 0; b < 3; ++b) j(static_cast<int>(a), static_cast<int>(b)) = jacobian[a][b].evaluate(x);
  }
  return j;
}

int BasisField::degree() const {
  return std::max({value[0].degree(), value[1].degree(), value[2].degree()});
}

FieldSample evaluate_field(const BasisField& field, const QuadratureGrid& grid) {
  const CompiledField cf(field);
  const int d = std::max(field.degree(), 1);
  FieldSample s;
  s.value.reserve(grid.volume_size());
  s.jacobian.reserve(grid.volume_size());
  s.strain.reserve(grid.volume_size());
  for (const auto& p : grid.volume_points) {
    const auto t = power_table(p, d);
    Vec3 v;
    Mat3 j;
    for (int a = 0; a < 3; ++a) {
      v(a) = cf.value[static_cast<std::size_t>(a)].evaluate(t);
      for (int b = 0; b < 3; ++b) j(a, b) = cf.jacobian[static_cast<std::size_t>(3 * a + b)].evaluate(t);
    }
    s.value.push_back(v);
    s.jacobian.push_back(j);
    s.strain.push_back(0.5 * (j + j.transpose()));
  }
  s.boundary_value.reserve(grid.boundary_size());
  for (const auto& p : grid.boundary_points) {
    const auto t = power_table(p, d);
    Vec3 v;
    for (int a = 0; a < 3; ++a) v(a) = cf.value[static_cast<std::size_t>(a)].evaluate(t);
    s.boundary_value.push_back(v);
  }
  return s;
}

FieldBasis::FieldBasis(double radius, int l_max, int n_max, bool normalize, std::size_t max_count)
    : radius_(radius), l_max_(l_max), n_max_(n_max), normalized_(normalize) {
  const auto indices = build_basis(radius, l_max, n_max, max_count);
  const auto orders = bilinear_orders(l_max, n_max);
  const auto grid = make_ball_grid(radius, orders.radial_nodes, orders.angular_degree);
  fields_.reserve(indices.size());
  scales_.reserve(indices.size());
  for (const auto& idx : indices) {
    BasisField f = make_field(idx);
    double s = 1.0;
    if (normalize) {
      const CompiledField cf(f);
      const int d = std::max(f.degree(), 1);
      double norm2 = 0.0;
      for (std::size_t q = 0; q < grid.volume_size(); ++q) {
        const auto t = power_table(grid.volume_points[q], d);
        double v2 = 0.0;
        for (const auto& c : cf.value) {
          const double vc = c.evaluate(t);
          v2 += vc * vc;
        }
        norm2 += grid.volume_weights[q] * v2;
      }
      if (!(norm2 > 0.0)) throw BasisError("basis field with zero norm");
      s = 1.0 / std::sqrt(norm2);
      for (auto& c : f.value) c *= s;
      for (auto& row : f.jacobian) {
        for (auto& c : row) c *= s;
      }
    }
    max_degree_ = std::max(max_degree_, f.degree());
    fields_.push_back(std::move(f));
    scales_.push_back(s);
  }
}

Vec3 FieldBasis::combine(const Vector& coefficients, const Vec3& x) const {
  if (static_cast<std::size_t>(coefficients.size()) != fields_.size()) {
    throw BasisError("coefficient vector does not match the basis size");
  }
  Vec3 v = Vec3::Zero();
  for (std::size_t i = 0; i < fields_.size(); ++i) {
    const double c = coefficients(static_cast<Eigen::Index>(i));
    if (c != 0.0) v += c * fields_[i].evaluate(x);
  }
  return v;
}

SampledBasis sample_basis(const FieldBasis& basis, const QuadratureGrid& grid) {
  const auto nq = static_cast<Eigen::Index>(grid.volume_size());
  const auto nb = static_cast<Eigen::Index>(grid.boundary_size());
  const auto n = static_cast<Eigen::Index>(basis.size());
  const int d = std::max(basis.max_degree(), 1);

  SampledBasis s;
  for (auto& m : s.value) m.resize(nq, n);
  for (auto& m : s.jacobian) m.resize(nq, n);
  for (auto& m : s.boundary) m.resize(nb, n);

  std::vector<Eigen::Matrix<double, 3, Eigen::Dynamic>> vt(grid.volume_size());
  for (std::size_t q = 0; q < grid.volume_size(); ++q) vt[q] = power_table(grid.volume_points[q], d);
  std::vector<Eigen::Matrix<double, 3, Eigen::Dynamic>> bt(grid.boundary_size());
  for (std::size_t q = 0; q < grid.boundary_size(); ++q) bt[q] = power_table(grid.boundary_points[q], d);

  for (Eigen::Index i = 0; i < n; ++i) {
    const CompiledField cf(basis.field(static_cast<std::size_t>(i)));
    for (Eigen::Index q = 0; q < nq; ++q) {
      const auto& t = vt[static_cast<std::size_t>(q)];
      for (std::size_t a = 0; a < 3; ++a) {
        s.value[a](q, i) = cf.value[a].evaluate(t);
        for (std::size_t b = 0; b < 3; ++b) s.jacobian[3 * a + b](q, i) = cf.jacobian[3 * a + b].evaluate(t);
      }
    }
    for (Eigen::Index q = 0; q < nb; ++q) {
      const auto& t = bt[static_cast<std::size_t>(q)];
      for (std::size_t a = 0; a < 3; ++a) s.boundary[a](q, i) = cf.value[a].evaluate(t);
    }
  }
  return s;
}

Vec3 rigid_rotation(int i, const Vec3& x) {
  switch (i) {
    case 0: return {0.0, -x.z(), x.y()};
    case 1: return {x.z(), 0.0, -x.x()};
    case 2: return {-x.y(), x.x(), 0.0};
    default: throw BasisError("rigid rotation index must be 0, 1 or 2");
  }
}

std::array<Vector, 3> rigid_rotation_coefficients(const FieldBasis& basis) {
  const int orders[3] = {1, -1, 0};
  const Vec3 probe(0.31, -0.27, 0.44);
  std::array<Vector, 3> out;
  for (int i = 0; i < 3; ++i) {
    out[static_cast<std::size_t>(i)] = Vector::Zero(static_cast<Eigen::Index>(basis.size()));
    bool found = false;
    for (std::size_t k = 0; k < basis.size(); ++k) {
      const auto& idx = basis.index(k);
      if (idx.kind != FieldKind::Toroidal || idx.degree != 1 || idx.radial != 0 || idx.order != orders[i]) continue;
      const Vec3 p = probe * basis.radius();
      const Vec3 v = basis.field(k).evaluate(p);
      out[static_cast<std::size_t>(i)](static_cast<Eigen::Index>(k)) = rigid_rotation(i, p).dot(v) / v.squaredNorm();
      found = true;
    }
    if (!found) throw BasisError("basis does not contain the rigid rotations");
  }
  return out;
}

}  // namespace slipflow::basis
