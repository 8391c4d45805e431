#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "langevin/manifold.hpp"
#include "langevin/oracle.hpp"
#include "test_helpers.hpp"

using namespace langevin;
using namespace langevin::testing;

TEST_CASE("gram: sphere and hyperplane by hand") {
  Sphere sphere(3, 1.0);
  Vector x(3);
  x << 1.0, 0.0, 0.0;
  const Matrix g = sphere.grad(x);
  CHECK(g(0, 0) == 2.0);
  CHECK(g(1, 0) == 0.0);
  CHECK(g(2, 0) == 0.0);
  CHECK(gram(sphere, x)(0, 0) == 4.0);

  Hyperplane plane(4);
  Vector y(4);
  y << 0.3, -2.0, 5.0, 7.0;
  CHECK(gram(plane, y)(0, 0) == 1.0);
  CHECK(plane.zeta(y)(0) == 7.0);
}

TEST_CASE("gram: torus analytic vs finite-difference gradient") {
  Torus torus;
  Vector x(3);
  x << 2.0, 0.0, 0.0;
  const Matrix g = torus.grad(x);
  const double step = 1e-5 * (1.0 + x.norm());
  Matrix g_fd(3, 1);
  for (int i = 0; i < 3; ++i) {
    Vector xp = x, xm = x;
    xp(i) += step;
    xm(i) -= step;
    g_fd(i, 0) = (torus.zeta(xp)(0) - torus.zeta(xm)(0)) / (2.0 * step);
  }
  const Matrix G = gram(torus, x);
  const Matrix G_fd = g_fd.transpose() * g_fd;
  CHECK((G - G_fd).norm() / G.norm() < 1e-6);
}

TEST_CASE("tangent projection: closed forms and identities") {
  Hyperplane plane(3);
  Vector y = Vector::Constant(3, 0.7);
  Matrix P = tangent_projection(plane, y);
  Matrix expected = Matrix::Identity(3, 3);
  expected(2, 2) = 0.0;
  CHECK((P - expected).norm() < 1e-15);

  Sphere sphere(3, 1.0);
  Vector x(3);
  x << 1.0, 0.0, 0.0;
  P = tangent_projection(sphere, x);
  expected = Matrix::Identity(3, 3);
  expected(0, 0) = 0.0;
  CHECK((P - expected).norm() < 1e-15);

  Torus torus;
  for (const Vector& p : torus_box_points(torus, 25)) {
    P = tangent_projection(torus, p);
    const double scale = std::max(1.0, P.norm());
    CHECK((P * P - P).norm() <= 1e-12 * scale);
    CHECK((P - P.transpose()).norm() <= 1e-12 * scale);
    CHECK((P * torus.grad(p)).norm() <=
          1e-12 * scale * (1.0 + torus.grad(p).norm()));
  }
  OrthogonalGroup group(3);
  for (const Vector& p : near_identity_points(3, 10)) {
    P = tangent_projection(group, p);
    const double scale = std::max(1.0, P.norm());
    CHECK((P * P - P).norm() <= 1e-12 * scale);
    CHECK((P - P.transpose()).norm() <= 1e-12 * scale);
    CHECK((P * group.grad(p)).norm() <=
          1e-12 * scale * (1.0 + group.grad(p).norm()));
  }
}

TEST_CASE("fixman gradient: hyperplane, sphere, torus") {
  Hyperplane plane(3);
  Vector y = Vector::Constant(3, -1.2);
  CHECK(fixman_grad(plane, y).norm() == 0.0);

  // grad ln det G = grad ln(4 |x|^2) = 2 x / |x|^2.
  Sphere sphere(3, 1.0);
  Vector x(3);
  x << 1.0, 0.0, 0.0;
  Vector fg = fixman_grad(sphere, x);
  CHECK(rel_err(fg(0), 2.0) < 1e-14);
  CHECK(std::abs(fg(1)) < 1e-14);
  CHECK(std::abs(fg(2)) < 1e-14);

  Torus torus;
  x << 2.0, 0.0, 0.0;
  fg = fixman_grad(torus, x);
  const double step = 1e-5 * (1.0 + x.norm());
  Vector fd(3);
  for (int i = 0; i < 3; ++i) {
    Vector xp = x, xm = x;
    xp(i) += step;
    xm(i) -= step;
    const Matrix gp = torus.grad(xp);
    const Matrix gm = torus.grad(xm);
    fd(i) = (std::log((gp.transpose() * gp)(0, 0)) -
             std::log((gm.transpose() * gm)(0, 0))) /
            (2.0 * step);
  }
  CHECK((fg - fd).norm() / fd.norm() < 1e-6);
}

TEST_CASE("fixman identity residual is floating-point noise") {
  Hyperplane plane(5);
  Vector y = Vector::Constant(5, 3.0);
  CHECK(fixman_identity_residual(plane, y) == 0.0);

  Torus torus;
  for (const Vector& p : torus_box_points(torus, 100)) {
    const auto id = fixman_identity(torus, p);
    CHECK(id.residual <= 1e-9 * std::max(1.0, id.scale));
  }
  OrthogonalGroup group(3);
  for (const Vector& p : near_identity_points(3, 20)) {
    const auto id = fixman_identity(group, p);
    CHECK(id.residual <= 1e-9 * std::max(1.0, id.scale));
  }
}

TEST_CASE("builtin derivatives match finite differences") {
  Torus torus;
  auto audit = derivative_audit(torus, torus_box_points(torus, 100));
  CHECK(audit.grad_mismatch < 1e-5);
  CHECK(audit.grad_dir_mismatch < 1e-5);
  CHECK(audit.div_grad_mismatch < 1e-13);
  CHECK(audit.fixman_mismatch < 1e-5);

  OrthogonalGroup group(3);
  audit = derivative_audit(group, near_identity_points(3, 20));
  CHECK(audit.grad_mismatch < 1e-5);
  CHECK(audit.grad_dir_mismatch < 1e-5);
  CHECK(audit.div_grad_mismatch < 1e-13);
  CHECK(audit.fixman_mismatch < 1e-5);

  Sphere sphere(4, 2.0);
  std::vector<Vector> pts;
  for (int k = 0; k < 20; ++k) {
    NoiseStream noise(5, k, 4);
    pts.push_back(2.0 * Vector::Ones(4) + 0.5 * noise.sample_gaussian());
  }
  audit = derivative_audit(sphere, pts);
  CHECK(audit.grad_mismatch < 1e-5);
  CHECK(audit.grad_dir_mismatch < 1e-5);
  CHECK(audit.div_grad_mismatch < 1e-13);
  CHECK(audit.fixman_mismatch < 1e-5);
}

TEST_CASE("second derivative symmetry of each constraint") {
  // u . (g'(x)(v) e_k) == v . (g'(x)(u) e_k): symmetric Hessians.
  Torus torus;
  OrthogonalGroup group(2);
  const ConstraintModel* models[2] = {&torus, &group};
  for (const ConstraintModel* model : models) {
    const int d = model->dim_ambient();
    for (int k = 0; k < 5; ++k) {
      NoiseStream a(17, k, d), b(18, k, d), c(19, k, d);
      const Vector x = model->reference_point() + 0.1 * a.sample_gaussian();
      const Vector u = b.sample_gaussian();
      const Vector v = c.sample_gaussian();
      const Vector lhs = model->grad_dir(x, v).transpose() * u;
      const Vector rhs = model->grad_dir(x, u).transpose() * v;
      CHECK((lhs - rhs).norm() <= 1e-12 * (1.0 + lhs.norm()));
    }
  }
}

TEST_CASE("torus initial point and parametrization lie on the manifold") {
  Torus torus;
  CHECK(torus.reference_point()(0) == 2.0);
  CHECK(torus.zeta(torus.reference_point())(0) == 0.0);
  for (const Vector& p : torus_surface_points(torus, 50)) {
    CHECK(std::abs(torus.zeta(p)(0)) < 1e-10);
  }
}

TEST_CASE("orthogonal group constraints vanish at the identity") {
  for (int m = 2; m <= 5; ++m) {
    OrthogonalGroup group(m);
    CHECK(group.dim_ambient() == m * m);
    CHECK(group.codim() == m * (m + 1) / 2);
    CHECK(group.zeta(group.reference_point()).norm() == 0.0);
  }
}

TEST_CASE("singular gram is reported") {
  Sphere sphere(3, 1.0);
  const Vector origin = Vector::Zero(3);
  CHECK_THROWS_AS(tangent_projection(sphere, origin), SingularGram);
  CHECK_THROWS_AS(fixman_grad(sphere, origin), SingularGram);
}
