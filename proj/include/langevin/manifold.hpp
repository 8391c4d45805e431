#ifndef LANGEVIN_MANIFOLD_HPP
#define LANGEVIN_MANIFOLD_HPP

#include <memory>
#include <string>

#include "langevin/common.hpp"

namespace langevin {

/// A constraint map zeta: R^d -> R^q describing the manifold M = {zeta = 0},
/// together with analytic first and second derivative actions:
///
///   grad(x)          g(x) in R^{d x q}, column j = grad of zeta_j
///   grad_dir(x, v)   directional derivative g'(x)(v) in R^{d x q}
///   div_grad(x)      (Div g)_j = sum_i g'(x)(e_i)_{ij}
///
/// Models are immutable after construction; every member is a pure function of
/// (model, x) and safe to share across concurrent trajectory workers.
class ConstraintModel {
 public:
  ConstraintModel(int dim_ambient, int codim)
      : dim_ambient_(dim_ambient), codim_(codim) {}
  virtual ~ConstraintModel() = default;

  int dim_ambient() const { return dim_ambient_; }
  int codim() const { return codim_; }

  virtual void zeta(const Vector& x, Vector& out) const = 0;
  virtual void grad(const Vector& x, Matrix& out) const = 0;
  virtual void grad_dir(const Vector& x, const Vector& v, Matrix& out) const = 0;

  /// Default implementation accumulates the definitional sum over g'(e_i).
  /// Built-in models override with the (algebraically identical) closed form.
  virtual void div_grad(const Vector& x, Vector& out) const;

  /// A point on M used as the default initial condition.
  virtual Vector reference_point() const = 0;

  virtual std::string name() const = 0;

  Vector zeta(const Vector& x) const;
  Matrix grad(const Vector& x) const;
  Matrix grad_dir(const Vector& x, const Vector& v) const;
  Vector div_grad(const Vector& x) const;

 private:
  int dim_ambient_;
  int codim_;
};

/// zeta(x) = x[axis]; the flat model where every geometric quantity is exact.
class Hyperplane final : public ConstraintModel {
 public:
  using ConstraintModel::zeta;
  using ConstraintModel::grad;
  using ConstraintModel::grad_dir;
  using ConstraintModel::div_grad;

  explicit Hyperplane(int dim, int axis = -1);

  void zeta(const Vector& x, Vector& out) const override;
  void grad(const Vector& x, Matrix& out) const override;
  void grad_dir(const Vector& x, const Vector& v, Matrix& out) const override;
  void div_grad(const Vector& x, Vector& out) const override;
  Vector reference_point() const override;
  std::string name() const override { return "hyperplane"; }
  int axis() const { return axis_; }

 private:
  int axis_;
};

/// zeta(x) = |x|^2 - radius^2.
class Sphere final : public ConstraintModel {
 public:
  using ConstraintModel::zeta;
  using ConstraintModel::grad;
  using ConstraintModel::grad_dir;
  using ConstraintModel::div_grad;

  explicit Sphere(int dim, double radius = 1.0);

  void zeta(const Vector& x, Vector& out) const override;
  void grad(const Vector& x, Matrix& out) const override;
  void grad_dir(const Vector& x, const Vector& v, Matrix& out) const override;
  void div_grad(const Vector& x, Vector& out) const override;
  Vector reference_point() const override;
  std::string name() const override { return "sphere"; }
  double radius() const { return radius_; }

 private:
  double radius_;
};

/// zeta(x) = (x1^2 + x2^2 + x3^2 + R^2 - r^2)^2 - 4 R^2 (x1^2 + x2^2),
/// the torus of major radius R and minor radius r in R^3.
class Torus final : public ConstraintModel {
 public:
  using ConstraintModel::zeta;
  using ConstraintModel::grad;
  using ConstraintModel::grad_dir;
  using ConstraintModel::div_grad;

  explicit Torus(double major_radius = 3.0, double minor_radius = 1.0);

  void zeta(const Vector& x, Vector& out) const override;
  void grad(const Vector& x, Matrix& out) const override;
  void grad_dir(const Vector& x, const Vector& v, Matrix& out) const override;
  void div_grad(const Vector& x, Vector& out) const override;
  Vector reference_point() const override;
  std::string name() const override { return "torus"; }

  double major_radius() const { return major_radius_; }
  double minor_radius() const { return minor_radius_; }

  /// Point on the torus at angles (theta, phi):
  ///   ((R + r cos t) cos p, (R + r cos t) sin p, r sin t).
  Vector point(double theta, double phi) const;

 private:
  double major_radius_;
  double minor_radius_;
};

/// Or(m) = {X in R^{m x m} : X^T X = I_m} as a submanifold of R^{m^2} with
/// d = m^2 and q = m(m+1)/2. States are column-major vectorizations of X.
/// Constraints are the upper-triangle-inclusive entries of X^T X - I_m,
/// enumerated row-major over pairs (k, l) with k <= l; diagonal entries are
/// included once (not halved).
class OrthogonalGroup final : public ConstraintModel {
 public:
  using ConstraintModel::zeta;
  using ConstraintModel::grad;
  using ConstraintModel::grad_dir;
  using ConstraintModel::div_grad;

  explicit OrthogonalGroup(int m);

  void zeta(const Vector& x, Vector& out) const override;
  void grad(const Vector& x, Matrix& out) const override;
  void grad_dir(const Vector& x, const Vector& v, Matrix& out) const override;
  void div_grad(const Vector& x, Vector& out) const override;
  Vector reference_point() const override;
  std::string name() const override { return "orth"; }
  int matrix_size() const { return m_; }

 private:
  int m_;
};

/// q x q Gram factorization: Cholesky with a pivoted-LU fallback. Never forms
/// an explicit inverse. Throws SingularGram when the matrix is not invertible.
class GramFactorization {
 public:
  GramFactorization() = default;
  explicit GramFactorization(const Matrix& G) { compute(G); }

  void compute(const Matrix& G);

  void solve_in_place(Vector& b) const;
  void solve_in_place(Matrix& B) const;
  Vector solve(const Vector& b) const;
  Matrix solve(const Matrix& B) const;

  double log_det() const;

 private:
  Eigen::LLT<Matrix> llt_;
  Eigen::FullPivLU<Matrix> lu_;
  bool use_lu_ = false;
};

/// G(x) = g(x)^T g(x).
Matrix gram(const ConstraintModel& model, const Vector& x);

/// I_d - g G^{-1} g^T at x: the orthogonal projection onto the tangent space.
Matrix tangent_projection(const ConstraintModel& model, const Vector& x);

/// grad ln det G(x), computed as 2 sum_i g'(x)(e_i) G^{-1} g^T e_i. Callers
/// apply the sigma^2/4 prefactor of the Fixman correction themselves.
Vector fixman_grad(const ConstraintModel& model, const Vector& x);

struct FixmanIdentity {
  double residual;  ///< max pairwise difference norm among the three routes
  double scale;     ///< max norm among the three expressions
};

/// Evaluates the three equivalent expressions of the Fixman correction
/// (with sigma = 1) through genuinely different arithmetic routes:
///   (1/4) grad ln det G   via the trace formula  d_j ln det G = Tr(G^{-1} d_j G)
///   (1/2) sum_i g'(e_i) G^{-1} g^T e_i
///   (1/2) sum_i g'(g G^{-1} g^T e_i) G^{-1} g^T e_i
/// They agree exactly in real arithmetic; the residual is floating-point noise.
FixmanIdentity fixman_identity(const ConstraintModel& model, const Vector& x);
double fixman_identity_residual(const ConstraintModel& model, const Vector& x);

}  // namespace langevin

#endif  // LANGEVIN_MANIFOLD_HPP
