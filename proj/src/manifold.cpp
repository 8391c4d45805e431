#include "langevin/manifold.hpp"

#include <cassert>
#include <cmath>

namespace langevin {

void ConstraintModel::div_grad(const Vector& x, Vector& out) const {
  const int d = dim_ambient();
  const int q = codim();
  out.setZero(q);
  Vector ei = Vector::Zero(d);
  Matrix gp(d, q);
  for (int i = 0; i < d; ++i) {
    ei(i) = 1.0;
    grad_dir(x, ei, gp);
    out += gp.row(i).transpose();
    ei(i) = 0.0;
  }
}

Vector ConstraintModel::zeta(const Vector& x) const {
  Vector out(codim());
  zeta(x, out);
  return out;
}

Matrix ConstraintModel::grad(const Vector& x) const {
  Matrix out(dim_ambient(), codim());
  grad(x, out);
  return out;
}

Matrix ConstraintModel::grad_dir(const Vector& x, const Vector& v) const {
  Matrix out(dim_ambient(), codim());
  grad_dir(x, v, out);
  return out;
}

Vector ConstraintModel::div_grad(const Vector& x) const {
  Vector out(codim());
  div_grad(x, out);
  return out;
}

// ---------------------------------------------------------------------------
// Hyperplane
// ---------------------------------------------------------------------------

Hyperplane::Hyperplane(int dim, int axis)
    : ConstraintModel(dim, 1), axis_(axis < 0 ? dim - 1 : axis) {
  assert(axis_ >= 0 && axis_ < dim);
}

void Hyperplane::zeta(const Vector& x, Vector& out) const {
  out.resize(1);
  out(0) = x(axis_);
}

void Hyperplane::grad(const Vector& x, Matrix& out) const {
  (void)x;
  out.setZero(dim_ambient(), 1);
  out(axis_, 0) = 1.0;
}

void Hyperplane::grad_dir(const Vector& x, const Vector& v, Matrix& out) const {
  (void)x;
  (void)v;
  out.setZero(dim_ambient(), 1);
}

void Hyperplane::div_grad(const Vector& x, Vector& out) const {
  (void)x;
  out.setZero(1);
}

Vector Hyperplane::reference_point() const {
  return Vector::Zero(dim_ambient());
}

// ---------------------------------------------------------------------------
// Sphere
// ---------------------------------------------------------------------------

Sphere::Sphere(int dim, double radius)
    : ConstraintModel(dim, 1), radius_(radius) {
  assert(radius > 0.0);
}

void Sphere::zeta(const Vector& x, Vector& out) const {
  out.resize(1);
  out(0) = x.squaredNorm() - radius_ * radius_;
}

void Sphere::grad(const Vector& x, Matrix& out) const {
  out.resize(dim_ambient(), 1);
  out.col(0) = 2.0 * x;
}

void Sphere::grad_dir(const Vector& x, const Vector& v, Matrix& out) const {
  (void)x;
  out.resize(dim_ambient(), 1);
  out.col(0) = 2.0 * v;
}

void Sphere::div_grad(const Vector& x, Vector& out) const {
  (void)x;
  out.resize(1);
  out(0) = 2.0 * dim_ambient();
}

Vector Sphere::reference_point() const {
  Vector x0 = Vector::Zero(dim_ambient());
  x0(0) = radius_;
  return x0;
}

// ---------------------------------------------------------------------------
// Torus
// ---------------------------------------------------------------------------

Torus::Torus(double major_radius, double minor_radius)
    : ConstraintModel(3, 1),
      major_radius_(major_radius),
      minor_radius_(minor_radius) {
  assert(major_radius > minor_radius && minor_radius > 0.0);
}

void Torus::zeta(const Vector& x, Vector& out) const {
  const double R2 = major_radius_ * major_radius_;
  const double r2 = minor_radius_ * minor_radius_;
  const double s = x.squaredNorm() + R2 - r2;
  out.resize(1);
  out(0) = s * s - 4.0 * R2 * (x(0) * x(0) + x(1) * x(1));
}

void Torus::grad(const Vector& x, Matrix& out) const {
  const double R2 = major_radius_ * major_radius_;
  const double r2 = minor_radius_ * minor_radius_;
  const double s = x.squaredNorm() + R2 - r2;
  out.resize(3, 1);
  out(0, 0) = 4.0 * s * x(0) - 8.0 * R2 * x(0);
  out(1, 0) = 4.0 * s * x(1) - 8.0 * R2 * x(1);
  out(2, 0) = 4.0 * s * x(2);
}

void Torus::grad_dir(const Vector& x, const Vector& v, Matrix& out) const {
  // d/dt g(x + t v) = 4 s v + 8 (x.v) x - 8 R^2 (v1, v2, 0)
  const double R2 = major_radius_ * major_radius_;
  const double r2 = minor_radius_ * minor_radius_;
  const double s = x.squaredNorm() + R2 - r2;
  const double xv = x.dot(v);
  out.resize(3, 1);
  out(0, 0) = 4.0 * s * v(0) + 8.0 * xv * x(0) - 8.0 * R2 * v(0);
  out(1, 0) = 4.0 * s * v(1) + 8.0 * xv * x(1) - 8.0 * R2 * v(1);
  out(2, 0) = 4.0 * s * v(2) + 8.0 * xv * x(2);
}

void Torus::div_grad(const Vector& x, Vector& out) const {
  // Laplacian of zeta: 12 s + 8 |x|^2 - 16 R^2 with s = |x|^2 + R^2 - r^2.
  const double R2 = major_radius_ * major_radius_;
  const double r2 = minor_radius_ * minor_radius_;
  const double s = x.squaredNorm() + R2 - r2;
  out.resize(1);
  out(0) = 12.0 * s + 8.0 * x.squaredNorm() - 16.0 * R2;
}

Vector Torus::reference_point() const {
  Vector x0(3);
  x0 << major_radius_ - minor_radius_, 0.0, 0.0;
  return x0;
}

Vector Torus::point(double theta, double phi) const {
  const double rho = major_radius_ + minor_radius_ * std::cos(theta);
  Vector x(3);
  x << rho * std::cos(phi), rho * std::sin(phi),
      minor_radius_ * std::sin(theta);
  return x;
}

// ---------------------------------------------------------------------------
// OrthogonalGroup
// ---------------------------------------------------------------------------

OrthogonalGroup::OrthogonalGroup(int m)
    : ConstraintModel(m * m, m * (m + 1) / 2), m_(m) {
  assert(m >= 1);
}

void OrthogonalGroup::zeta(const Vector& x, Vector& out) const {
  Eigen::Map<const Matrix> X(x.data(), m_, m_);
  out.resize(codim());
  int idx = 0;
  for (int k = 0; k < m_; ++k) {
    for (int l = k; l < m_; ++l) {
      out(idx++) = X.col(k).dot(X.col(l)) - (k == l ? 1.0 : 0.0);
    }
  }
}

void OrthogonalGroup::grad(const Vector& x, Matrix& out) const {
  // grad zeta_(k,l) = X (E_kl + E_lk) as an m x m matrix: column l is X e_k
  // and column k is X e_l (doubled on the diagonal constraints).
  Eigen::Map<const Matrix> X(x.data(), m_, m_);
  out.setZero(dim_ambient(), codim());
  int idx = 0;
  for (int k = 0; k < m_; ++k) {
    for (int l = k; l < m_; ++l) {
      Eigen::Map<Matrix> gcol(out.col(idx).data(), m_, m_);
      if (k == l) {
        gcol.col(k) = 2.0 * X.col(k);
      } else {
        gcol.col(l) = X.col(k);
        gcol.col(k) = X.col(l);
      }
      ++idx;
    }
  }
}

void OrthogonalGroup::grad_dir(const Vector& x, const Vector& v,
                               Matrix& out) const {
  (void)x;
  Eigen::Map<const Matrix> V(v.data(), m_, m_);
  out.setZero(dim_ambient(), codim());
  int idx = 0;
  for (int k = 0; k < m_; ++k) {
    for (int l = k; l < m_; ++l) {
      Eigen::Map<Matrix> gcol(out.col(idx).data(), m_, m_);
      if (k == l) {
        gcol.col(k) = 2.0 * V.col(k);
      } else {
        gcol.col(l) = V.col(k);
        gcol.col(k) = V.col(l);
      }
      ++idx;
    }
  }
}

void OrthogonalGroup::div_grad(const Vector& x, Vector& out) const {
  (void)x;
  out.setZero(codim());
  int idx = 0;
  for (int k = 0; k < m_; ++k) {
    for (int l = k; l < m_; ++l) {
      if (k == l) out(idx) = 2.0 * m_;
      ++idx;
    }
  }
}

Vector OrthogonalGroup::reference_point() const {
  Matrix I = Matrix::Identity(m_, m_);
  return Eigen::Map<const Vector>(I.data(), m_ * m_);
}

// ---------------------------------------------------------------------------
// GramFactorization and derived quantities
// ---------------------------------------------------------------------------

void GramFactorization::compute(const Matrix& G) {
  use_lu_ = false;
  llt_.compute(G);
  if (llt_.info() == Eigen::Success &&
      llt_.matrixLLT().diagonal().minCoeff() > 0.0) {
    return;
  }
  use_lu_ = true;
  lu_.compute(G);
  if (!lu_.isInvertible()) {
    throw SingularGram("Gram matrix is singular at the evaluation point");
  }
}

void GramFactorization::solve_in_place(Vector& b) const {
  if (use_lu_) {
    b = lu_.solve(b);
  } else {
    llt_.solveInPlace(b);
  }
}

void GramFactorization::solve_in_place(Matrix& B) const {
  if (use_lu_) {
    B = lu_.solve(B);
  } else {
    llt_.solveInPlace(B);
  }
}

Vector GramFactorization::solve(const Vector& b) const {
  Vector out = b;
  solve_in_place(out);
  return out;
}

Matrix GramFactorization::solve(const Matrix& B) const {
  Matrix out = B;
  solve_in_place(out);
  return out;
}

double GramFactorization::log_det() const {
  if (use_lu_) {
    double s = 0.0;
    const auto& LU = lu_.matrixLU();
    for (int i = 0; i < LU.rows(); ++i) s += std::log(std::abs(LU(i, i)));
    return s;
  }
  double s = 0.0;
  const auto& L = llt_.matrixLLT();
  for (int i = 0; i < L.rows(); ++i) s += std::log(L(i, i));
  return 2.0 * s;
}

Matrix gram(const ConstraintModel& model, const Vector& x) {
  const Matrix g = model.grad(x);
  return g.transpose() * g;
}

Matrix tangent_projection(const ConstraintModel& model, const Vector& x) {
  const int d = model.dim_ambient();
  const Matrix g = model.grad(x);
  GramFactorization G(g.transpose() * g);
  return Matrix::Identity(d, d) - g * G.solve(Matrix(g.transpose()));
}

Vector fixman_grad(const ConstraintModel& model, const Vector& x) {
  const int d = model.dim_ambient();
  const Matrix g = model.grad(x);
  GramFactorization G(g.transpose() * g);
  const Matrix Y = G.solve(Matrix(g.transpose()));  // q x d
  Vector out = Vector::Zero(d);
  Vector ei = Vector::Zero(d);
  Matrix gp(d, model.codim());
  for (int i = 0; i < d; ++i) {
    ei(i) = 1.0;
    model.grad_dir(x, ei, gp);
    out.noalias() += gp * Y.col(i);
    ei(i) = 0.0;
  }
  return 2.0 * out;
}

FixmanIdentity fixman_identity(const ConstraintModel& model, const Vector& x) {
  const int d = model.dim_ambient();
  const int q = model.codim();
  const Matrix g = model.grad(x);
  GramFactorization G(g.transpose() * g);
  const Matrix Y = G.solve(Matrix(g.transpose()));  // q x d
  const Matrix Z = Y.transpose();                   // g G^{-1}, d x q

  Vector e_trace = Vector::Zero(d);     // (1/4) grad ln det G, trace route
  Vector e_basis = Vector::Zero(d);     // (1/2) sum g'(e_i) G^{-1} g^T e_i
  Vector e_project = Vector::Zero(d);   // (1/2) sum g'(P e_i) G^{-1} g^T e_i
  Vector ei = Vector::Zero(d);
  Vector pi(d);
  Matrix gp(d, q);
  for (int i = 0; i < d; ++i) {
    ei(i) = 1.0;
    model.grad_dir(x, ei, gp);
    // d_i ln det G = Tr(G^{-1} d_i G) = 2 <g'(e_i), g G^{-1}>_F
    e_trace(i) = 0.5 * (gp.array() * Z.array()).sum();
    e_basis.noalias() += 0.5 * (gp * Y.col(i));
    pi.noalias() = g * Y.col(i);
    model.grad_dir(x, pi, gp);
    e_project.noalias() += 0.5 * (gp * Y.col(i));
    ei(i) = 0.0;
  }

  const double r12 = (e_trace - e_basis).norm();
  const double r13 = (e_trace - e_project).norm();
  const double r23 = (e_basis - e_project).norm();
  const double scale =
      std::max({e_trace.norm(), e_basis.norm(), e_project.norm()});
  return {std::max({r12, r13, r23}), scale};
}

double fixman_identity_residual(const ConstraintModel& model, const Vector& x) {
  return fixman_identity(model, x).residual;
}

}  // namespace langevin
