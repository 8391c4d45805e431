#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "langevin/manifold.hpp"
#include "langevin/schemes.hpp"
#include "test_helpers.hpp"

using namespace langevin;
using namespace langevin::testing;

namespace {

// 50-digit evaluations of the closed-form coefficients, frozen as fixtures.
struct CoeffFixture {
  double h, eps;
  double k_exp, k_om, k_eps_om, k_noise, k_om_sq_half, k_fix, k_mix, k_fix_imp;
};

const CoeffFixture kCoeffFixtures[] = {
    // h = eps = 2^-7 (h/eps = 1)
    {0.0078125, 0.0078125, 0.3678794411714423215955, 0.6321205588285576784045,
     0.004938441865848106862535, 0.05811709343951211117113,
     0.1997882004468640243515, 0.0008443991374642454180723,
     -0.000198431993393296518371, 0.006896151168625825089523},
    // h = 2^-7, eps = 2^13 (h/eps = 2^-20)
    {0.0078125, 8192.0, 0.9999990463261383409563, 9.536738616590436737911e-7,
     0.007812496274710885775697, 0.08838830550148667730417,
     4.547469172058363856691e-13, 0.001953123137356035006371,
     -2.960593320612519817245e-16, 0.007812499999998223644572},
    // h = 2^-7, eps = 2^-12 (h/eps = 32)
    {0.0078125, 0.000244140625, 1.266416554909417572312e-14,
     0.9999999999999873358345, 0.0002441406249999969081627,
     0.01104854345603980506876, 0.4999999999999873358345, 0.000030517578125,
     -0.0007324218750000030918373, 0.0018310546875},
    // h = 1/8, eps = 1/2 (h/eps = 1/4)
    {0.125, 0.5, 0.7788007830714048682452, 0.2211992169285951317548,
     0.1105996084642975658774, 0.3136356725116606440055,
     0.02446454678491184355673, 0.02459183376796041102476,
     -0.0002873469632016847315754, 0.1234065757831568571189},
};

Vector vec3(double a, double b, double c) {
  Vector v(3);
  v << a, b, c;
  return v;
}

}  // namespace

TEST_CASE("stiff coefficients against high-precision closed forms") {
  for (const auto& fx : kCoeffFixtures) {
    const StiffCoeffs k = stiff_coeffs(fx.h, fx.eps);
    CHECK(rel_err(k.k_exp, fx.k_exp) < 1e-14);
    CHECK(rel_err(k.k_om, fx.k_om) < 1e-14);
    CHECK(rel_err(k.k_eps_om, fx.k_eps_om) < 1e-14);
    CHECK(rel_err(k.k_noise, fx.k_noise) < 1e-14);
    CHECK(rel_err(k.k_om_sq_half, fx.k_om_sq_half) < 1e-14);
    CHECK(rel_err(k.k_fix, fx.k_fix) < 1e-14);
    CHECK(std::abs(k.k_mix - fx.k_mix) < 1e-11 * std::abs(fx.k_mix) + 1e-30);
    CHECK(rel_err(implicit_fixman_coeff(fx.h, fx.eps), fx.k_fix_imp) < 1e-13);
  }
  CHECK(stiff_coeffs(0.0078125, 0.0078125).k_exp ==
        doctest::Approx(std::exp(-1.0)).epsilon(1e-15));
}

TEST_CASE("stiff coefficients: unpenalized limits") {
  const double h = 1.0;
  const StiffCoeffs k = stiff_coeffs(h, 1e15);
  CHECK(rel_err(k.k_exp, 1.0) < 1e-6);
  CHECK(rel_err(k.k_eps_om, h) < 1e-6);
  CHECK(rel_err(k.k_noise, std::sqrt(h)) < 1e-6);
  CHECK(rel_err(k.k_fix, h / 4.0) < 1e-6);
  CHECK(std::abs(k.k_mix) < 1e-6 * h);

  // eps = +inf sentinel gives the exact limits.
  const double inf = std::numeric_limits<double>::infinity();
  const StiffCoeffs ki = stiff_coeffs(h, inf);
  CHECK(ki.k_exp == 1.0);
  CHECK(ki.k_om == 0.0);
  CHECK(ki.k_eps_om == h);
  CHECK(ki.k_noise == std::sqrt(h));
  CHECK(ki.k_om_sq_half == 0.0);
  CHECK(ki.k_fix == h / 4.0);
  CHECK(ki.k_mix == 0.0);
  CHECK(implicit_fixman_coeff(h, inf) == h);
}

TEST_CASE("stiff coefficients: stiff limits and overflow safety") {
  const double h = std::pow(2.0, -7);
  StiffCoeffs k = stiff_coeffs(h, 1e-300);
  CHECK(k.k_exp == 0.0);  // flushed
  CHECK(k.k_om == 1.0);
  CHECK(rel_err(k.k_noise, std::sqrt(0.5e-300)) < 1e-14);
  CHECK(rel_err(k.k_eps_om, 1e-300) < 1e-14);

  // No NaN or overflow for h/eps up to 1e300.
  k = stiff_coeffs(1.0, 1e-300);
  CHECK(std::isfinite(k.k_exp));
  CHECK(std::isfinite(k.k_om));
  CHECK(std::isfinite(k.k_eps_om));
  CHECK(std::isfinite(k.k_noise));
  CHECK(std::isfinite(k.k_om_sq_half));
  CHECK(std::isfinite(k.k_fix));
  CHECK(std::isfinite(k.k_mix));

  // Monotone decay toward the stiff limit (strict until underflow).
  double prev = stiff_coeffs(h, 1e-2).k_exp;
  for (double eps : {1e-3, 1e-4, 1e-5, 1e-6}) {
    const double cur = stiff_coeffs(h, eps).k_exp;
    CHECK(cur <= prev);
    if (prev > 0.0) CHECK(cur < prev);
    prev = cur;
  }
}

TEST_CASE("euler in R^d: hyperplane scalar recursion") {
  Hyperplane plane(3);
  const ForceField f = zero_force();
  SchemeParams p{0.01, 0.02, 0.0};
  Vector x = vec3(0.4, -0.3, 1.0);
  const Vector xi = Vector::Zero(3);

  StepOutcome out = euler_unconstrained_step(plane, f, p, x, xi);
  CHECK(out.state(0) == x(0));
  CHECK(out.state(1) == x(1));
  CHECK(out.state(2) == doctest::Approx((1.0 - p.h / p.eps) * x(2)).epsilon(1e-15));
  CHECK(out.lambda.norm() == 0.0);
  CHECK(out.solver_iterations == 0);

  // h = 2 eps flips the sign: the visible face of the h << eps restriction.
  p = SchemeParams{0.02, 0.01, 0.0};
  out = euler_unconstrained_step(plane, f, p, x, xi);
  CHECK(out.state(2) == doctest::Approx(-1.0).epsilon(1e-15));
}

TEST_CASE("euler in R^d: torus drift matches independent assembly") {
  Torus torus;
  const ForceField f = torus_restoring_force(3.0, 1.0);
  const SchemeParams p{10.0 / 512.0, 1.0, std::sqrt(2.0)};

  for (const Vector& x : {vec3(2.0, 0.0, 0.0), vec3(2.2, 0.3, -0.1)}) {
    NoiseStream noise(99, 0, 3);
    const Vector xi = noise.sample_xi();
    const StepOutcome out = euler_unconstrained_step(torus, f, p, x, xi);

    Vector fx(3);
    f(x, fx);
    const Matrix g = torus.grad(x);
    const double G = (g.transpose() * g)(0, 0);
    const Vector expected = x + std::sqrt(p.h) * p.sigma * xi + p.h * fx +
                            p.h * (p.sigma * p.sigma / 4.0) *
                                fixman_grad(torus, x) -
                            (p.h / p.eps) * (g * (torus.zeta(x) / G));
    CHECK((out.state - expected).norm() <= 1e-12 * (1.0 + expected.norm()));
  }
}

TEST_CASE("constrained euler: hyperplane solves in one iteration") {
  Hyperplane plane(3);
  const ForceField f = zero_force();
  const SchemeParams p{0.01, 1.0, 1.5};
  const Vector x = vec3(0.7, -0.2, 0.9);
  NoiseStream noise(5, 0, 3);
  const Vector xi = noise.sample_xi();

  const StepOutcome out = constrained_euler_explicit_step(plane, f, p, x, xi);
  const double sq_h = std::sqrt(p.h);
  CHECK(out.state(2) == 0.0);
  CHECK(out.state(0) ==
        doctest::Approx(x(0) + sq_h * p.sigma * xi(0)).epsilon(1e-15));
  CHECK(out.state(1) ==
        doctest::Approx(x(1) + sq_h * p.sigma * xi(1)).epsilon(1e-15));
  CHECK(out.lambda(0) ==
        doctest::Approx(-(x(2) + sq_h * p.sigma * xi(2))).epsilon(1e-14));
  CHECK(out.solver_iterations == 1);

  // Implicit direction coincides for a constant g.
  const StepOutcome imp = constrained_euler_implicit_step(plane, f, p, x, xi);
  CHECK((imp.state - out.state).norm() == 0.0);
}

TEST_CASE("constrained euler: sphere projection picks the root nearest zero") {
  Sphere sphere(3, 1.0);
  const ForceField f = zero_force();
  const SchemeParams p{0.01, 1.0, 0.0};
  const Vector x = vec3(2.0, 0.0, 0.0);
  const Vector xi = Vector::Zero(3);

  const StepOutcome out = constrained_euler_explicit_step(sphere, f, p, x, xi);
  CHECK(out.state(0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(std::abs(out.state(1)) < 1e-14);
  CHECK(out.lambda(0) == doctest::Approx(-0.25).epsilon(1e-12));

  // Implicit direction: X = x + 2 X lambda with |X| = 1.
  const StepOutcome imp = constrained_euler_implicit_step(sphere, f, p, x, xi);
  CHECK(imp.state(0) == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(imp.lambda(0) == doctest::Approx(-0.5).epsilon(1e-10));
}

TEST_CASE("constrained euler: torus postcondition") {
  Torus torus;
  const ForceField f = torus_restoring_force(3.0, 1.0);
  const SchemeParams p{10.0 / 512.0, 1.0, std::sqrt(2.0)};
  Vector x = torus.reference_point();
  NoiseStream noise(17, 3, 3);
  for (int n = 0; n < 20; ++n) {
    noise.set_step(n);
    const StepOutcome out =
        constrained_euler_explicit_step(torus, f, p, x, noise.sample_xi());
    CHECK(std::abs(torus.zeta(out.state)(0)) <= 1e-10);
    x = out.state;
  }
}

TEST_CASE("ua step: hyperplane is the exact scalar update") {
  Hyperplane plane(3);
  const ForceField f = zero_force();
  const SchemeParams p{0.02, 0.05, 1.3};
  const Vector x = vec3(0.3, 0.8, -0.6);
  NoiseStream noise(23, 1, 3);
  const Vector xi = noise.sample_xi();
  const StiffCoeffs k = stiff_coeffs(p);

  const StepOutcome out = ua_step(plane, f, p, x, xi);
  const double expected = k.k_exp * x(2) + p.sigma * k.k_noise * xi(2);
  CHECK(rel_err(out.state(2), expected) < 1e-13);
  CHECK(out.state(0) ==
        doctest::Approx(x(0) + std::sqrt(p.h) * p.sigma * xi(0)).epsilon(1e-15));
  CHECK(out.state(1) ==
        doctest::Approx(x(1) + std::sqrt(p.h) * p.sigma * xi(1)).epsilon(1e-15));

  // Same reduction for the codimension-1 form and the implicit variant.
  const StepOutcome red = ua_step_codim1(plane, f, p, x, xi);
  CHECK((red.state - out.state).norm() <= 1e-15);
  const StepOutcome imp = ua_step_implicit_direction(plane, f, p, x, xi);
  CHECK((imp.state - out.state).norm() <= 1e-15);
}

TEST_CASE("ua step: converges to constrained euler as eps -> 0") {
  Torus torus;
  const ForceField f = torus_restoring_force(3.0, 1.0);
  const double h = 10.0 / 512.0;
  SchemeParams p{h, 1e-14 * h, std::sqrt(2.0)};

  // The per-step gap is dominated by the vanishing noise term of the
  // constraint line, sigma sqrt(eps/2) |g^T xi| / |g| = O(sqrt(eps)).
  Vector x = torus.reference_point();
  NoiseStream noise(41, 9, 3);
  for (int n = 0; n < 10; ++n) {
    noise.set_step(n);
    const Vector xi = noise.sample_xi();
    const StepOutcome ua = ua_step(torus, f, p, x, xi);
    const StepOutcome ec = constrained_euler_explicit_step(torus, f, p, x, xi);
    CHECK((ua.state - ec.state).norm() <= 1e-7);
    const StepOutcome uai = ua_step_implicit_direction(torus, f, p, x, xi);
    const StepOutcome eci = constrained_euler_implicit_step(torus, f, p, x, xi);
    CHECK((uai.state - eci.state).norm() <= 1e-7);
    x = ec.state;
  }

  // Once sqrt(eps) falls below the solver tolerance, the two schemes agree
  // to solver accuracy.
  p.eps = 1e-26 * h;
  x = torus.reference_point();
  for (int n = 0; n < 10; ++n) {
    noise.set_step(n);
    const Vector xi = noise.sample_xi();
    const StepOutcome ua = ua_step(torus, f, p, x, xi);
    const StepOutcome ec = constrained_euler_explicit_step(torus, f, p, x, xi);
    CHECK((ua.state - ec.state).norm() <= 10.0 * p.solver_tol);
    x = ec.state;
  }
}

TEST_CASE("ua step: codimension-1 reduction identity on the torus") {
  // sigma and f are free in the reduction identity; mild values keep every
  // grid cell inside the projection basin at the largest h. The force term
  // enters both variants through the same expression; the sigma^2 terms are
  // where the two code paths genuinely differ.
  Torus torus;
  const ForceField f = zero_force();
  const auto points = torus_surface_points(torus, 5, 99);
  for (int he = 5; he <= 10; ++he) {
    for (int ee = 0; ee <= 8; ee += 2) {
      const SchemeParams p{std::pow(2.0, -he), std::pow(10.0, -ee), 0.4};
      int traj = 0;
      for (const Vector& x : points) {
        NoiseStream noise(7, traj++, 3);
        const Vector xi = noise.sample_xi();
        const StepOutcome a = ua_step(torus, f, p, x, xi);
        const StepOutcome b = ua_step_codim1(torus, f, p, x, xi);
        CHECK((a.state - b.state).norm() <= 1e-12 * (1.0 + a.state.norm()));
      }
    }
  }

  // Force-bearing spot check in the confined region of the preset dynamics.
  const ForceField fp = torus_restoring_force(3.0, 1.0);
  const SchemeParams p{std::pow(2.0, -8), 0.01, std::sqrt(2.0)};
  const Vector x = torus.point(M_PI - 0.4, 0.15);
  NoiseStream noise(12, 0, 3);
  const Vector xi = noise.sample_xi();
  const StepOutcome a = ua_step(torus, fp, p, x, xi);
  const StepOutcome b = ua_step_codim1(torus, fp, p, x, xi);
  CHECK((a.state - b.state).norm() <= 1e-12 * (1.0 + a.state.norm()));
}

TEST_CASE("ua step codim1: dimension guard and sphere fixed point") {
  OrthogonalGroup group(2);
  const ForceField f = zero_force();
  const SchemeParams p{0.01, 0.1, 1.0};
  const Vector x = group.reference_point();
  const Vector xi = Vector::Zero(4);
  CHECK_THROWS_AS((void)ua_step_codim1(group, f, p, x, xi),
                  std::invalid_argument);

  Sphere sphere(3, 1.0);
  const Vector x0 = sphere.reference_point();
  const Vector zero3 = Vector::Zero(3);
  for (double h : {0.3, 0.01}) {
    for (double eps : {10.0, 1e-6}) {
      const SchemeParams ps{h, eps, 0.0};
      const StepOutcome out = ua_step_codim1(sphere, zero_force(), ps, x0, zero3);
      CHECK((out.state - x0).norm() <= 1e-14);
      CHECK(std::abs(out.lambda(0)) <= 1e-14);
    }
  }
}

TEST_CASE("ua step: shared constraint line between variants") {
  Torus torus;
  const ForceField f = torus_restoring_force(3.0, 1.0);
  const SchemeParams p{10.0 / 1024.0, 1.0, std::sqrt(2.0)};
  const Vector x = torus.point(M_PI - 0.4, 0.15);
  NoiseStream noise(3, 0, 3);
  const Vector xi = noise.sample_xi();

  // Independent re-assembly of the constraint target from the display.
  const StiffCoeffs k = stiff_coeffs(p);
  const Matrix g = torus.grad(x);
  const double G = (g.transpose() * g)(0, 0);
  const double z = torus.zeta(x)(0);
  Vector fx(3);
  f(x, fx);
  const double sig2 = p.sigma * p.sigma;
  const Vector fixman = fixman_grad(torus, x);
  const double divg = torus.div_grad(x)(0);
  // q = 1: both mix sums coincide, k_mix multiplies zero.
  const double target = k.k_exp * z +
                        p.sigma * k.k_noise * (g.col(0).dot(xi)) +
                        k.k_eps_om * (g.col(0).dot(fx) +
                                      0.25 * sig2 * g.col(0).dot(fixman) +
                                      0.5 * sig2 * divg);
  (void)G;

  const StepOutcome a = ua_step(torus, f, p, x, xi);
  const StepOutcome b = ua_step_implicit_direction(torus, f, p, x, xi);
  const double tol = 1e-12 * (1.0 + std::abs(z));
  CHECK(std::abs(torus.zeta(a.state)(0) - target) <=
        tol + 1e-10 * std::abs(target));
  CHECK(std::abs(torus.zeta(b.state)(0) - target) <=
        tol + 1e-10 * std::abs(target));
}

TEST_CASE("ua step: unpenalized constraint target is the Ito-Taylor value") {
  Torus torus;
  const ForceField f = torus_restoring_force(3.0, 1.0);
  const double h = 10.0 / 512.0;
  const SchemeParams p{h, 1e12 * h, std::sqrt(2.0)};
  const Vector x = vec3(2.1, 0.4, -0.2);
  NoiseStream noise(13, 2, 3);
  const Vector xi = noise.sample_xi();

  const StepOutcome out = ua_step(torus, f, p, x, xi);
  const Matrix g = torus.grad(x);
  Vector fx(3);
  f(x, fx);
  const double sig2 = p.sigma * p.sigma;
  const double taylor =
      torus.zeta(x)(0) + std::sqrt(h) * p.sigma * g.col(0).dot(xi) +
      h * (g.col(0).dot(fx) + 0.25 * sig2 * g.col(0).dot(fixman_grad(torus, x)) +
           0.5 * sig2 * torus.div_grad(x)(0));
  CHECK(rel_err(torus.zeta(out.state)(0), taylor) < 1e-6);
}

TEST_CASE("explicit expansion: hyperplane reduction") {
  Hyperplane plane(3);
  const ForceField f = zero_force();
  const SchemeParams p{0.02, 0.05, 1.1};
  const Vector x = vec3(0.5, -0.4, 0.7);
  NoiseStream noise(31, 6, 3);
  const Vector xi = noise.sample_xi();
  const StiffCoeffs k = stiff_coeffs(p);
  const double sq_h = std::sqrt(p.h);

  Vector A = p.sigma * xi;
  A(2) += (k.k_exp - 1.0) / sq_h * x(2);
  A(2) += p.sigma * (k.k_noise / sq_h - 1.0) * xi(2);
  const Vector expected = x + sq_h * A;  // B = 0 on the hyperplane with f = 0

  const Vector out = explicit_expansion_step(plane, f, p, x, xi);
  CHECK((out - expected).norm() <= 1e-14 * (1.0 + expected.norm()));
}

TEST_CASE("explicit expansion: unpenalized limits of A and B") {
  Torus torus;
  const ForceField f = torus_restoring_force(3.0, 1.0);
  const double h = 0.01;
  const SchemeParams p{h, 1e12, 1.0};
  const Vector x = vec3(2.2, 0.3, -0.1);
  NoiseStream noise(8, 4, 3);
  const Vector xi = noise.sample_xi();

  const Vector x_noise = explicit_expansion_step(torus, f, p, x, xi);
  const Vector x_still = explicit_expansion_step(torus, f, p, x, Vector::Zero(3));

  // B is xi-free, so the increment difference isolates A; A -> sigma xi.
  const Vector A = (x_noise - x_still) / std::sqrt(h);
  CHECK((A - p.sigma * xi).norm() <= 1e-5 * (1.0 + xi.norm()));

  // With xi = 0, A -> 0 and B -> f + (sigma^2/4) grad ln det G.
  Vector fx(3);
  f(x, fx);
  const Vector B_limit = fx + 0.25 * fixman_grad(torus, x);
  const Vector B = (x_still - x) / h;
  CHECK((B - B_limit).norm() <= 1e-5 * (1.0 + B_limit.norm()));
}

TEST_CASE("scheme ids round-trip") {
  for (const char* name :
       {"euler-rd", "euler-constrained", "euler-constrained-implicit", "ua",
        "ua-implicit", "ua-expansion"}) {
    CHECK(scheme_name(parse_scheme(name)) == name);
  }
  CHECK_THROWS_AS(parse_scheme("rk4"), std::invalid_argument);
  CHECK(!scheme_respects_manifold(SchemeId::EulerRd));
  CHECK(scheme_respects_manifold(SchemeId::Ua));
}
