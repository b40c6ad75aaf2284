#include "slipflow/operators.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>

#include "slipflow/error.hpp"

namespace slipflow::operators {

namespace {

using RowMajorMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

Eigen::Map<const Vector> weights_of(const std::vector<double>& w) {
  return {w.data(), static_cast<Eigen::Index>(w.size())};
}

// Sum over pairs of sample matrices X^T diag(w) X.
template <std::size_t K>
Matrix weighted_gram(const std::array<Matrix, K>& x, const Eigen::Ref<const Vector>& w) {
  const Eigen::Index n = x[0].cols();
  Matrix out = Matrix::Zero(n, n);
  for (const auto& m : x) {
    const Matrix wm = w.asDiagonal() * m;
    out.noalias() += m.transpose() * wm;
  }
  return 0.5 * (out + out.transpose());
}

void check_grid(const basis::SampledBasis& s, const QuadratureGrid& grid) {
  if (s.nodes() != static_cast<Eigen::Index>(grid.volume_size()) ||
      s.boundary[0].rows() != static_cast<Eigen::Index>(grid.boundary_size())) {
    throw OperatorError("sampled basis does not match the quadrature grid");
  }
}

const geometry::Ball& require_concentric_ball(const geometry::GeometryDescriptor& geom, double radius) {
  const auto* ball = geom.as_ball();
  if (ball == nullptr) throw OperatorError("the Du-form is only available on the ball, got " + geom.kind_name());
  if (ball->center.norm() != 0.0 || std::abs(ball->radius - radius) > 1e-14 * radius) {
    throw OperatorError("geometry does not match the basis ball");
  }
  return *ball;
}

int find_root(std::vector<int>& parent, int i) {
  while (parent[static_cast<std::size_t>(i)] != i) {
    parent[static_cast<std::size_t>(i)] = parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(i)])];
    i = parent[static_cast<std::size_t>(i)];
  }
  return i;
}

}  // namespace

double FrictionSpec::operator()(double colatitude) const {
  const double c = std::cos(colatitude);
  double acc = 0.0;
  for (auto it = coefficients.rbegin(); it != coefficients.rend(); ++it) acc = acc * c + *it;
  return acc;
}

bool FrictionSpec::is_zero() const {
  return std::all_of(coefficients.begin(), coefficients.end(), [](double c) { return c == 0.0; });
}

bool FrictionSpec::is_constant() const {
  return std::all_of(coefficients.begin() + (coefficients.empty() ? 0 : 1), coefficients.end(),
                     [](double c) { return c == 0.0; });
}

std::string FrictionSpec::describe() const {
  std::ostringstream os;
  os << std::setprecision(17);
  bool first = true;
  for (std::size_t k = 0; k < coefficients.size(); ++k) {
    if (coefficients[k] == 0.0 && !(k == 0 && is_zero())) continue;
    if (!first) os << " + ";
    first = false;
    os << coefficients[k];
    if (k == 1) os << "*cos(theta)";
    if (k > 1) os << "*cos(theta)^" << k;
  }
  return os.str();
}

FrictionSamples sample_friction(const FrictionSpec& alpha, const QuadratureGrid& grid) {
  FrictionSamples out;
  out.values.reserve(grid.boundary_size());
  for (double theta : grid.boundary_colatitude) {
    const double a = alpha(theta);
    if (!std::isfinite(a)) throw OperatorError("friction coefficient is not finite");
    if (a < 0.0) throw OperatorError("negative friction coefficient at colatitude " + std::to_string(theta));
    out.values.push_back(a);
  }
  if (!out.values.empty()) {
    const auto [lo, hi] = std::minmax_element(out.values.begin(), out.values.end());
    out.min = *lo;
    out.max = *hi;
  }
  return out;
}

Matrix assemble_mass(const basis::SampledBasis& s, const QuadratureGrid& grid) {
  check_grid(s, grid);
  return weighted_gram(s.value, weights_of(grid.volume_weights));
}

Matrix assemble_gradient_form(const basis::SampledBasis& s, const QuadratureGrid& grid) {
  check_grid(s, grid);
  return weighted_gram(s.jacobian, weights_of(grid.volume_weights));
}

Matrix assemble_strain_form(const basis::SampledBasis& s, const QuadratureGrid& grid) {
  check_grid(s, grid);
  std::array<Matrix, 9> strain;
  for (std::size_t a = 0; a < 3; ++a) {
    for (std::size_t b = 0; b < 3; ++b) strain[3 * a + b] = 0.5 * (s.jacobian[3 * a + b] + s.jacobian[3 * b + a]);
  }
  return weighted_gram(strain, weights_of(grid.volume_weights));
}

Matrix assemble_boundary_mass(const basis::SampledBasis& s, const QuadratureGrid& grid,
                              const std::vector<double>& weight) {
  check_grid(s, grid);
  Vector w = weights_of(grid.boundary_weights);
  if (!weight.empty()) {
    if (weight.size() != grid.boundary_size()) throw OperatorError("boundary weight has the wrong length");
    w.array() *= weights_of(weight).array();
  }
  return weighted_gram(s.boundary, w);
}

Matrix assemble_form_su(const basis::SampledBasis& s, const QuadratureGrid& grid, const FrictionSpec& alpha) {
  const auto friction = sample_friction(alpha, grid);
  Matrix b = 2.0 * assemble_strain_form(s, grid);
  if (!alpha.is_zero()) b += assemble_boundary_mass(s, grid, friction.values);
  return b;
}

Matrix assemble_form_du(const basis::SampledBasis& s, const QuadratureGrid& grid, const FrictionSpec& alpha,
                        const geometry::GeometryDescriptor& geom) {
  require_concentric_ball(geom, grid.radius);
  const auto friction = sample_friction(alpha, grid);
  Matrix b = assemble_gradient_form(s, grid);
  if (!alpha.is_zero()) b += assemble_boundary_mass(s, grid, friction.values);

  // dn_p as a 3x3 map on the tangent plane, t_a (t_a . dn t_b) t_b^T.
  const auto nb = static_cast<Eigen::Index>(grid.boundary_size());
  std::array<Vector, 9> dn;
  for (auto& d : dn) d.resize(nb);
  for (Eigen::Index q = 0; q < nb; ++q) {
    const auto so = geometry::shape_operator(geom, grid.boundary_points[static_cast<std::size_t>(q)]);
    Eigen::Matrix<double, 3, 2> t;
    t << so.t1, so.t2;
    const Mat3 map = t * so.matrix * t.transpose();
    for (int a = 0; a < 3; ++a) {
      for (int c = 0; c < 3; ++c) dn[static_cast<std::size_t>(3 * a + c)](q) = map(a, c) * grid.boundary_weights[static_cast<std::size_t>(q)];
    }
  }
  Matrix curvature = Matrix::Zero(b.rows(), b.cols());
  for (std::size_t a = 0; a < 3; ++a) {
    for (std::size_t c = 0; c < 3; ++c) {
      curvature.noalias() += s.boundary[a].transpose() * (dn[3 * a + c].asDiagonal() * s.boundary[c]);
    }
  }
  b -= 0.5 * (curvature + curvature.transpose());
  return b;
}

double coercivity_shift(const Matrix& b, const Matrix& m) {
  Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> es(b, m, Eigen::EigenvaluesOnly | Eigen::Ax_lBx);
  if (es.info() != Eigen::Success) throw SolverError("generalized eigenvalue computation failed");
  return std::max(0.0, -es.eigenvalues()(0) - kNullEigenvalue);
}

EigenDecomposition solve_stokes_eigenproblem(const Matrix& b, const Matrix& m, double c_beta) {
  const Eigen::Index n = b.rows();
  if (b.cols() != n || m.rows() != n || m.cols() != n) throw SolverError("pencil matrices must be square and equal in size");
  if (n == 0) throw SolverError("empty pencil");
  if (!b.allFinite() || !m.allFinite()) throw SolverError("pencil has non-finite entries");

  const double bmax = b.cwiseAbs().maxCoeff();
  const double mmax = m.cwiseAbs().maxCoeff();
  std::vector<int> parent(static_cast<std::size_t>(n));
  std::iota(parent.begin(), parent.end(), 0);
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = j + 1; i < n; ++i) {
      if (std::abs(b(i, j)) > 1e-12 * bmax || std::abs(m(i, j)) > 1e-12 * mmax) {
        const int ri = find_root(parent, static_cast<int>(i));
        const int rj = find_root(parent, static_cast<int>(j));
        if (ri != rj) parent[static_cast<std::size_t>(std::max(ri, rj))] = std::min(ri, rj);
      }
    }
  }
  std::vector<std::vector<Eigen::Index>> groups(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) groups[static_cast<std::size_t>(find_root(parent, static_cast<int>(i)))].push_back(i);
  std::erase_if(groups, [](const auto& g) { return g.empty(); });

  Vector values(n);
  Matrix vectors = Matrix::Zero(n, n);
  Eigen::Index col = 0;
  for (const auto& g : groups) {
    const auto k = static_cast<Eigen::Index>(g.size());
    Matrix bb(k, k), mm(k, k);
    for (Eigen::Index i = 0; i < k; ++i) {
      for (Eigen::Index j = 0; j < k; ++j) {
        bb(i, j) = b(g[static_cast<std::size_t>(i)], g[static_cast<std::size_t>(j)]);
        mm(i, j) = m(g[static_cast<std::size_t>(i)], g[static_cast<std::size_t>(j)]);
      }
    }
    Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> es(bb, mm, Eigen::ComputeEigenvectors | Eigen::Ax_lBx);
    if (es.info() != Eigen::Success) throw SolverError("generalized eigensolver did not converge");
    for (Eigen::Index c = 0; c < k; ++c, ++col) {
      values(col) = es.eigenvalues()(c);
      for (Eigen::Index i = 0; i < k; ++i) vectors(g[static_cast<std::size_t>(i)], col) = es.eigenvectors()(i, c);
    }
  }

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index x, Eigen::Index y) { return values(x) < values(y); });

  EigenDecomposition out;
  out.blocks = static_cast<int>(groups.size());
  out.values.resize(n);
  out.vectors.resize(n, n);
  for (Eigen::Index c = 0; c < n; ++c) {
    const Eigen::Index src = order[static_cast<std::size_t>(c)];
    out.values(c) = values(src);
    Vector v = vectors.col(src);
    Eigen::Index imax = 0;
    v.cwiseAbs().maxCoeff(&imax);
    if (v(imax) < 0.0) v = -v;
    out.vectors.col(c) = v;
  }

  const Matrix bw = b * out.vectors;
  const Matrix mw = m * out.vectors;
  const double bnorm = std::max(b.norm(), std::numeric_limits<double>::min());
  for (Eigen::Index c = 0; c < n; ++c) {
    out.residual = std::max(out.residual, (bw.col(c) - out.values(c) * mw.col(c)).norm() / bnorm);
  }
  const Matrix gram = out.vectors.transpose() * mw;
  out.m_orthonormality = (gram - Matrix::Identity(n, n)).cwiseAbs().maxCoeff();
  Matrix shifted = out.vectors.transpose() * bw + c_beta * gram;
  const double diag = std::max(shifted.diagonal().cwiseAbs().maxCoeff(), 1.0);
  shifted.diagonal().setZero();
  out.b_orthogonality = shifted.cwiseAbs().maxCoeff() / diag;
  if (!(out.residual <= 1e-8)) {
    throw SolverError("eigenpair residual " + std::to_string(out.residual) + " exceeds 1e-8 |B|");
  }
  return out;
}

AdvectionTensor::AdvectionTensor(Eigen::Index n) : n_(n) {
  if (n < 0 || n > kMaxSize) {
    throw OperatorError("advection tensor of size " + std::to_string(n) + " exceeds the limit " +
                        std::to_string(kMaxSize));
  }
  data_.assign(static_cast<std::size_t>(n * n * n), 0.0);
}

Eigen::Map<const RowMajorMatrix> AdvectionTensor::slice(Eigen::Index i) const {
  return {data_.data() + index(i, 0, 0), n_, n_};
}

Eigen::Map<RowMajorMatrix> AdvectionTensor::slice(Eigen::Index i) { return {data_.data() + index(i, 0, 0), n_, n_}; }

double AdvectionTensor::max_abs() const {
  double m = 0.0;
  for (double v : data_) m = std::max(m, std::abs(v));
  return m;
}

double AdvectionTensor::antisymmetry_defect() const {
  double d = 0.0;
  for (Eigen::Index i = 0; i < n_; ++i) {
    const auto s = slice(i);
    d = std::max(d, (s + s.transpose()).cwiseAbs().maxCoeff());
  }
  const double m = max_abs();
  return m > 0.0 ? d / m : d;
}

Vector AdvectionTensor::contract(const Vector& g) const {
  if (g.size() != n_) throw OperatorError("coefficient vector does not match the tensor size");
  Vector out = Vector::Zero(n_);
  for (Eigen::Index i = 0; i < n_; ++i) {
    if (g(i) == 0.0) continue;
    out.noalias() += g(i) * (slice(i).transpose() * g);
  }
  return out;
}

AdvectionTensor AdvectionTensor::transform(const Matrix& w) const {
  if (w.rows() != n_ || w.cols() != n_) throw OperatorError("transform must be square and match the tensor");
  const Eigen::Index n = n_;
  // Rotate (j, k) inside every slice, then mix slices over i.
  std::vector<double> tmp(data_.size());
  for (Eigen::Index i = 0; i < n; ++i) {
    Eigen::Map<RowMajorMatrix>(tmp.data() + index(i, 0, 0), n, n) = w.transpose() * slice(i) * w;
  }
  AdvectionTensor out(n);
  const Eigen::Map<const Matrix> flat_in(tmp.data(), n * n, n);  // column i holds slice i
  Eigen::Map<Matrix> flat_out(out.data_.data(), n * n, n);
  flat_out.noalias() = flat_in * w;
  return out;
}

AdvectionTensor assemble_advection(const basis::SampledBasis& s, const QuadratureGrid& grid) {
  check_grid(s, grid);
  const Eigen::Index n = s.fields();
  const Eigen::Index q = s.nodes();
  AdvectionTensor t(n);
  const auto w = weights_of(grid.volume_weights);
  Matrix wv(3 * q, n);
  for (Eigen::Index a = 0; a < 3; ++a) wv.middleRows(a * q, q) = w.asDiagonal() * s.value[static_cast<std::size_t>(a)];

#pragma omp parallel for schedule(dynamic)
  for (Eigen::Index i = 0; i < n; ++i) {
    // G rows (a, node): sum_b v_i,b d_b v_j,a.
    Matrix g(3 * q, n);
    for (std::size_t a = 0; a < 3; ++a) {
      auto block = g.middleRows(static_cast<Eigen::Index>(a) * q, q);
      block.noalias() = s.value[0].col(i).asDiagonal() * s.jacobian[3 * a];
      block.noalias() += s.value[1].col(i).asDiagonal() * s.jacobian[3 * a + 1];
      block.noalias() += s.value[2].col(i).asDiagonal() * s.jacobian[3 * a + 2];
    }
    t.slice(i).noalias() = g.transpose() * wv;
  }
  return t;
}

Matrix m_orthonormalize(const Matrix& k, const Matrix& m) {
  const Matrix gram = k.transpose() * m * k;
  Eigen::LLT<Matrix> llt(gram);
  if (llt.info() != Eigen::Success) throw OperatorError("vectors are linearly dependent in the M inner product");
  return llt.matrixU().solve<Eigen::OnTheRight>(k);
}

double max_principal_angle_sine(const Matrix& a, const Matrix& b, const Matrix& m) {
  const Matrix qa = m_orthonormalize(a, m);
  const Matrix qb = m_orthonormalize(b, m);
  const Matrix r = qa - qb * (qb.transpose() * m * qa);
  Eigen::SelfAdjointEigenSolver<Matrix> es(r.transpose() * m * r, Eigen::EigenvaluesOnly);
  return std::sqrt(std::max(0.0, es.eigenvalues().maxCoeff()));
}

PoincareConstants symmetric_poincare_constant(const Matrix& strain, const Matrix& gradient, const Matrix& m,
                                              const std::array<Vector, 3>& kernel) {
  const Eigen::Index n = m.rows();
  if (n <= 3) throw OperatorError("basis too small to deflate the kernel");
  Matrix k(n, 3);
  for (Eigen::Index c = 0; c < 3; ++c) k.col(c) = kernel[static_cast<std::size_t>(c)];
  k = m_orthonormalize(k, m);

  PoincareConstants out;
  const double snorm = std::max(strain.norm(), std::numeric_limits<double>::min());
  for (Eigen::Index c = 0; c < 3; ++c) out.kernel_residual = std::max(out.kernel_residual, (strain * k.col(c)).norm() / snorm);
  if (!(out.kernel_residual <= 1e-10)) throw OperatorError("kernel vectors are not S-null");

  Eigen::HouseholderQR<Matrix> qr(m * k);
  const Matrix q = qr.householderQ();
  out.complement = q.rightCols(n - 3);
  const Matrix& z = out.complement;
  const Matrix zs = z.transpose() * strain * z;
  const Matrix zm = z.transpose() * m * z;
  const Matrix zd = z.transpose() * gradient * z;

  Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> es(zs, zm, Eigen::ComputeEigenvectors | Eigen::Ax_lBx);
  if (es.info() != Eigen::Success) throw SolverError("deflated eigenproblem failed");
  out.mu1 = es.eigenvalues()(0);
  if (!(out.mu1 > 0.0)) throw SolverError("symmetric Poincare eigenvalue is not positive");
  out.C = 1.0 / std::sqrt(out.mu1);
  out.minimizer = z * es.eigenvectors().col(0);

  Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> cl(gradient, m, Eigen::EigenvaluesOnly | Eigen::Ax_lBx);
  if (cl.info() != Eigen::Success) throw SolverError("gradient eigenproblem failed");
  out.c_classical = cl.eigenvalues()(0);

  Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> kr(zs, zd, Eigen::EigenvaluesOnly | Eigen::Ax_lBx);
  if (kr.info() != Eigen::Success) throw SolverError("Korn eigenproblem failed");
  out.korn_ratio = kr.eigenvalues()(0);
  return out;
}

double korn_step1_check(const basis::SampledBasis& s, const QuadratureGrid& grid,
                        const geometry::GeometryDescriptor& geom, int samples, unsigned seed) {
  check_grid(s, grid);
  const auto& ball = require_concentric_ball(geom, grid.radius);
  const auto w = weights_of(grid.volume_weights);
  const auto wb = weights_of(grid.boundary_weights);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  double worst = 0.0;
  for (int it = 0; it < samples; ++it) {
    Vector u(s.fields());
    for (auto& c : u) c = normal(rng);
    std::array<Vector, 9> du;
    for (std::size_t a = 0; a < 9; ++a) du[a] = s.jacobian[a] * u;
    double dsq = 0.0;
    double ssq = 0.0;
    for (std::size_t a = 0; a < 3; ++a) {
      for (std::size_t b = 0; b < 3; ++b) {
        dsq += w.dot(du[3 * a + b].cwiseAbs2());
        ssq += w.dot((0.5 * (du[3 * a + b] + du[3 * b + a])).cwiseAbs2());
      }
    }
    double bnd = 0.0;
    for (std::size_t a = 0; a < 3; ++a) bnd += wb.dot((s.boundary[a] * u).cwiseAbs2());
    worst = std::max(worst, std::abs(dsq - 2.0 * ssq - bnd / ball.radius) / dsq);
  }
  return worst;
}

int OperatorSet::null_count() const {
  return static_cast<int>((spectrum.values.array().abs() <= kNullEigenvalue).count());
}

Eigen::Index OperatorSet::first_positive() const {
  for (Eigen::Index i = 0; i < spectrum.values.size(); ++i) {
    if (spectrum.values(i) > kNullEigenvalue) return i;
  }
  throw SolverError("no positive eigenvalue in the spectrum");
}

OperatorSet build_operator_set(const OperatorOptions& options) {
  OperatorSet ops;
  ops.options = options;
  ops.geometry = geometry::GeometryDescriptor::ball(options.radius);
  ops.geometry.validate();
  ops.basis = std::make_shared<const basis::FieldBasis>(options.radius, options.l_max, options.n_max);
  ops.bilinear_orders = options.bilinear.value_or(bilinear_orders(options.l_max, options.n_max));
  ops.nonlinear_orders = options.nonlinear.value_or(nonlinear_orders(options.l_max, options.n_max));
  ops.grid = make_ball_grid(options.radius, ops.bilinear_orders.radial_nodes, ops.bilinear_orders.angular_degree);

  const auto samples = basis::sample_basis(*ops.basis, ops.grid);
  ops.friction = sample_friction(options.alpha, ops.grid);
  ops.mass = assemble_mass(samples, ops.grid);
  ops.gradient = assemble_gradient_form(samples, ops.grid);
  ops.strain = assemble_strain_form(samples, ops.grid);
  ops.boundary_mass = assemble_boundary_mass(samples, ops.grid);
  ops.boundary_friction = assemble_boundary_mass(samples, ops.grid, ops.friction.values);
  ops.form_su = 2.0 * ops.strain + ops.boundary_friction;
  ops.form_du = assemble_form_du(samples, ops.grid, options.alpha, ops.geometry);

  Eigen::SelfAdjointEigenSolver<Matrix> me(ops.mass, Eigen::EigenvaluesOnly);
  ops.mass_condition = me.eigenvalues().maxCoeff() / me.eigenvalues().minCoeff();
  if (!(me.eigenvalues().minCoeff() > 0.0)) throw SolverError("mass matrix is not positive definite");
  if (ops.mass_condition > 1e10) ops.warnings.push_back("mass matrix condition number exceeds 1e10");

  ops.c_beta = coercivity_shift(ops.form_su, ops.mass);
  ops.spectrum = solve_stokes_eigenproblem(ops.form_su, ops.mass, ops.c_beta);
  ops.lambda_bound = geometry::curvature_bound_lambda(ops.geometry);
  ops.kernel = basis::rigid_rotation_coefficients(*ops.basis);
  ops.poincare = symmetric_poincare_constant(ops.strain, ops.gradient, ops.mass, ops.kernel);

  if (options.advection) {
    const auto fine = make_ball_grid(options.radius, ops.nonlinear_orders.radial_nodes,
                                     ops.nonlinear_orders.angular_degree);
    ops.advection = assemble_advection(basis::sample_basis(*ops.basis, fine), fine);
  }
  return ops;
}

void write_spectrum_csv(std::ostream& out, const EigenDecomposition& spectrum) {
  const auto old = out.precision(17);
  out << "index,eigenvalue\n";
  for (Eigen::Index i = 0; i < spectrum.values.size(); ++i) out << i << ',' << spectrum.values(i) << '\n';
  out.precision(old);
}

}  // namespace slipflow::operators
