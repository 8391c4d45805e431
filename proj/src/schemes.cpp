#include "langevin/schemes.hpp"

#include <cmath>
#include <stdexcept>

namespace langevin {

// ---------------------------------------------------------------------------
// Stiff coefficients
// ---------------------------------------------------------------------------

StiffCoeffs stiff_coeffs(double h, double eps) {
  if (!(h > 0.0) || !(eps > 0.0)) {
    throw std::invalid_argument("stiff_coeffs: h and eps must be positive");
  }
  if (std::isinf(eps)) {
    // Unpenalized limit of every coefficient.
    return {1.0, 0.0, h, std::sqrt(h), 0.0, 0.25 * h, 0.0};
  }
  const double u = h / eps;
  const double s = -std::expm1(-u);        // 1 - e^{-u}, cancellation-free
  const double t = -std::expm1(-2.0 * u);  // 1 - e^{-2u}

  StiffCoeffs k;
  k.k_exp = u > 745.0 ? 0.0 : std::exp(-u);
  k.k_om = s;
  k.k_eps_om = eps * s;
  k.k_noise = std::sqrt(0.5 * eps * t);
  k.k_om_sq_half = 0.5 * s * s;
  k.k_fix = 0.125 * eps * t;
  if (u < 1e-3) {
    // Direct subtraction cancels to O(h u^2 / 24); series in u instead.
    k.k_mix = h * (u * u * (-1.0 / 24.0) + u * u * u * (1.0 / 48.0) -
                   u * u * u * u * (31.0 / 5760.0));
  } else {
    k.k_mix = eps * s - std::sqrt(0.5 * eps * h * t);
  }
  return k;
}

StiffCoeffs stiff_coeffs(const SchemeParams& params) {
  return stiff_coeffs(params.h, params.eps);
}

double implicit_fixman_coeff(double h, double eps) {
  if (std::isinf(eps)) return h;
  const double u = h / eps;
  const double t = -std::expm1(-2.0 * u);
  return std::sqrt(2.0 * eps * h * t) - 0.5 * eps * t;
}

// ---------------------------------------------------------------------------
// Force fields
// ---------------------------------------------------------------------------

ForceField zero_force() {
  ForceField f;
  f.name = "zero";
  f.eval = [](const Vector& x, Vector& out) { out.setZero(x.size()); };
  return f;
}

ForceField spring_force(Vector center, double stiffness, std::string name) {
  ForceField f;
  f.name = std::move(name);
  f.eval = [c = std::move(center), stiffness](const Vector& x, Vector& out) {
    out = -stiffness * (x - c);
  };
  return f;
}

ForceField torus_restoring_force(double major_radius, double minor_radius) {
  Vector center(3);
  center << major_radius - minor_radius, 0.0, 0.0;
  return spring_force(std::move(center), 25.0, "torus");
}

ForceField orthogonal_well_force(int m) {
  Matrix I = Matrix::Identity(m, m);
  Vector center = Eigen::Map<const Vector>(I.data(), m * m);
  return spring_force(std::move(center), 100.0, "orth-well");
}

// ---------------------------------------------------------------------------
// Scheme ids
// ---------------------------------------------------------------------------

SchemeId parse_scheme(const std::string& name) {
  if (name == "euler-rd") return SchemeId::EulerRd;
  if (name == "euler-constrained") return SchemeId::EulerConstrained;
  if (name == "euler-constrained-implicit")
    return SchemeId::EulerConstrainedImplicit;
  if (name == "ua") return SchemeId::Ua;
  if (name == "ua-implicit") return SchemeId::UaImplicit;
  if (name == "ua-expansion") return SchemeId::UaExpansion;
  throw std::invalid_argument("unknown scheme: " + name);
}

std::string scheme_name(SchemeId id) {
  switch (id) {
    case SchemeId::EulerRd: return "euler-rd";
    case SchemeId::EulerConstrained: return "euler-constrained";
    case SchemeId::EulerConstrainedImplicit:
      return "euler-constrained-implicit";
    case SchemeId::Ua: return "ua";
    case SchemeId::UaImplicit: return "ua-implicit";
    case SchemeId::UaExpansion: return "ua-expansion";
  }
  throw std::logic_error("unreachable");
}

bool scheme_respects_manifold(SchemeId id) {
  return id != SchemeId::EulerRd && id != SchemeId::UaExpansion;
}

// ---------------------------------------------------------------------------
// Per-point geometry cache (thread-local scratch: the one-step maps stay pure
// and allocation-free in steady state)
// ---------------------------------------------------------------------------

namespace {

struct Geometry {
  Vector zeta;    // q
  Matrix g;       // d x q
  Matrix G;       // q x q
  GramFactorization fact;
  Matrix Y;       // q x d  = G^{-1} g^T
  Vector w;       // q      = G^{-1} zeta
  Vector u;       // d      = g w
  Vector fixman;  // d      = grad ln det G
  Vector S1, S2;  // q      mix sums
  Vector divg;    // q
  Vector fx;      // d
  Matrix gp;      // d x q scratch for g'(v)
  Vector ei, pi;  // d scratch
  Vector xhat;    // d
  Vector target;  // q
  Vector tq;      // q scratch

  void base(const ConstraintModel& m, const Vector& x) {
    m.zeta(x, zeta);
    m.grad(x, g);
    G.noalias() = g.transpose() * g;
    fact.compute(G);
  }

  void penalty_direction() {
    w = zeta;
    fact.solve_in_place(w);
    u.noalias() = g * w;
  }

  void inverse_rows() {
    Y = g.transpose();
    fact.solve_in_place(Y);
  }

  // fixman = 2 sum_i g'(e_i) Y_i; S2 = sum_i (g'(e_i))^T p_i;
  // S1 = sum_i (g'(p_i))^T p_i with p_i = g Y_i. Requires inverse_rows().
  void fixman_sum(const ConstraintModel& m, const Vector& x, bool with_mix) {
    const int d = m.dim_ambient();
    const int q = m.codim();
    fixman.setZero(d);
    if (with_mix) {
      S1.setZero(q);
      S2.setZero(q);
    }
    ei.setZero(d);
    for (int i = 0; i < d; ++i) {
      ei(i) = 1.0;
      m.grad_dir(x, ei, gp);
      fixman.noalias() += gp * Y.col(i);
      if (with_mix) {
        pi.noalias() = g * Y.col(i);
        S2.noalias() += gp.transpose() * pi;
        m.grad_dir(x, pi, gp);
        S1.noalias() += gp.transpose() * pi;
      }
      ei(i) = 0.0;
    }
    fixman *= 2.0;
  }
};

thread_local Geometry geo;

double scaled_tolerance(const SchemeParams& params, const Vector& zeta_x) {
  return params.solver_tol * (1.0 + zeta_x.norm());
}

}  // namespace

// ---------------------------------------------------------------------------
// One-step maps
// ---------------------------------------------------------------------------

void euler_unconstrained_step(const ConstraintModel& model,
                              const ForceField& f, const SchemeParams& params,
                              const Vector& x, const Vector& xi,
                              StepOutcome& out) {
  auto& s = geo;
  s.base(model, x);
  s.penalty_direction();
  s.inverse_rows();
  s.fixman_sum(model, x, /*with_mix=*/false);
  f(x, s.fx);

  const double sq_h = std::sqrt(params.h);
  const double sig2 = params.sigma * params.sigma;
  out.state = x;
  out.state.noalias() += (sq_h * params.sigma) * xi;
  out.state.noalias() += params.h * s.fx;
  out.state.noalias() += (params.h * 0.25 * sig2) * s.fixman;
  out.state.noalias() -= (params.h / params.eps) * s.u;
  out.lambda.setZero(model.codim());
  out.solver_iterations = 0;
  out.constraint_residual = 0.0;
}

namespace {

void constrained_euler_step(const ConstraintModel& model, const ForceField& f,
                            const SchemeParams& params, const Vector& x,
                            const Vector& xi, DirectionMode mode,
                            StepOutcome& out) {
  auto& s = geo;
  model.zeta(x, s.zeta);
  model.grad(x, s.g);
  f(x, s.fx);
  s.xhat = x;
  s.xhat.noalias() += (std::sqrt(params.h) * params.sigma) * xi;
  s.xhat.noalias() += params.h * s.fx;
  s.target.setZero(model.codim());
  out.solver_iterations = project(
      model, mode, s.xhat, s.g, s.target, scaled_tolerance(params, s.zeta),
      params.max_solver_iterations, out.state, out.lambda,
      out.constraint_residual);
}

}  // namespace

void constrained_euler_explicit_step(const ConstraintModel& model,
                                     const ForceField& f,
                                     const SchemeParams& params,
                                     const Vector& x, const Vector& xi,
                                     StepOutcome& out) {
  constrained_euler_step(model, f, params, x, xi, DirectionMode::Frozen, out);
}

void constrained_euler_implicit_step(const ConstraintModel& model,
                                     const ForceField& f,
                                     const SchemeParams& params,
                                     const Vector& x, const Vector& xi,
                                     StepOutcome& out) {
  constrained_euler_step(model, f, params, x, xi, DirectionMode::Reevaluated,
                         out);
}

namespace {

// Shared assembly of the uniform one-step map. The two variants differ in the
// sign of the curvature term, the Fixman weight, and the projection direction;
// the constraint target is identical.
void ua_step_impl(const ConstraintModel& model, const ForceField& f,
                  const SchemeParams& params, const Vector& x,
                  const Vector& xi, bool implicit_direction, StepOutcome& out) {
  auto& s = geo;
  s.base(model, x);
  s.penalty_direction();
  s.inverse_rows();
  s.fixman_sum(model, x, /*with_mix=*/true);
  model.div_grad(x, s.divg);
  f(x, s.fx);

  const StiffCoeffs k = stiff_coeffs(params);
  const double sq_h = std::sqrt(params.h);
  const double sig2 = params.sigma * params.sigma;

  // Drift line: curvature term g'(g G^{-1} zeta) G^{-1} zeta and Fixman term.
  model.grad_dir(x, s.u, s.gp);
  const double curvature_weight =
      implicit_direction ? -k.k_om_sq_half : k.k_om_sq_half;
  const double fixman_weight =
      implicit_direction ? 0.25 * sig2 * implicit_fixman_coeff(params.h, params.eps)
                         : sig2 * k.k_fix;
  s.xhat = x;
  s.xhat.noalias() += (sq_h * params.sigma) * xi;
  s.xhat.noalias() += params.h * s.fx;
  s.xhat.noalias() += curvature_weight * (s.gp * s.w);
  s.xhat.noalias() += fixman_weight * s.fixman;

  // Constraint line, all right-hand functions at x.
  s.target = k.k_exp * s.zeta;
  s.target.noalias() += (params.sigma * k.k_noise) * (s.g.transpose() * xi);
  s.tq.noalias() = s.g.transpose() * s.fx;
  s.tq.noalias() += (0.25 * sig2) * (s.g.transpose() * s.fixman);
  s.tq.noalias() += (0.5 * sig2) * s.divg;
  s.target.noalias() += k.k_eps_om * s.tq;
  s.target.noalias() += (sig2 * k.k_mix) * (s.S1 - s.S2);

  out.solver_iterations = project(
      model,
      implicit_direction ? DirectionMode::Reevaluated : DirectionMode::Frozen,
      s.xhat, s.g, s.target, scaled_tolerance(params, s.zeta),
      params.max_solver_iterations, out.state, out.lambda,
      out.constraint_residual);
}

}  // namespace

void ua_step(const ConstraintModel& model, const ForceField& f,
             const SchemeParams& params, const Vector& x, const Vector& xi,
             StepOutcome& out) {
  ua_step_impl(model, f, params, x, xi, /*implicit_direction=*/false, out);
}

void ua_step_implicit_direction(const ConstraintModel& model,
                                const ForceField& f,
                                const SchemeParams& params, const Vector& x,
                                const Vector& xi, StepOutcome& out) {
  ua_step_impl(model, f, params, x, xi, /*implicit_direction=*/true, out);
}

void ua_step_codim1(const ConstraintModel& model, const ForceField& f,
                    const SchemeParams& params, const Vector& x,
                    const Vector& xi, StepOutcome& out) {
  if (model.codim() != 1) {
    throw std::invalid_argument("ua_step_codim1 requires codimension 1");
  }
  auto& s = geo;
  s.base(model, x);
  f(x, s.fx);
  model.div_grad(x, s.divg);
  model.grad_dir(x, s.g.col(0), s.gp);  // g'(g)

  const StiffCoeffs k = stiff_coeffs(params);
  const double sq_h = std::sqrt(params.h);
  const double sig2 = params.sigma * params.sigma;
  const double G = s.G(0, 0);
  const double z = s.zeta(0);

  s.xhat = x;
  s.xhat.noalias() += (sq_h * params.sigma) * xi;
  s.xhat.noalias() += params.h * s.fx;
  s.xhat.noalias() += (k.k_om_sq_half * z * z / (G * G)) * s.gp.col(0);
  // sigma^2 eps/4 (1 - e^{-2h/eps}) = 2 sigma^2 k_fix
  s.xhat.noalias() += (2.0 * sig2 * k.k_fix / G) * s.gp.col(0);

  const double gtf = s.g.col(0).dot(s.fx);
  const double gt_gpg = s.g.col(0).dot(s.gp.col(0));
  s.target.resize(1);
  s.target(0) = k.k_exp * z +
                params.sigma * k.k_noise * s.g.col(0).dot(xi) +
                k.k_eps_om * (gtf + 0.5 * sig2 * gt_gpg / G +
                              0.5 * sig2 * s.divg(0));

  out.solver_iterations =
      project(model, DirectionMode::Frozen, s.xhat, s.g, s.target,
              scaled_tolerance(params, s.zeta), params.max_solver_iterations,
              out.state, out.lambda, out.constraint_residual);
}

void explicit_expansion_step(const ConstraintModel& model, const ForceField& f,
                             const SchemeParams& params, const Vector& x,
                             const Vector& xi, Vector& out) {
  auto& s = geo;
  s.base(model, x);
  s.penalty_direction();
  s.inverse_rows();
  s.fixman_sum(model, x, /*with_mix=*/true);
  model.div_grad(x, s.divg);
  f(x, s.fx);

  const StiffCoeffs k = stiff_coeffs(params);
  const double h = params.h;
  const double sq_h = std::sqrt(h);
  const double sigma = params.sigma;
  const double sig2 = sigma * sigma;

  // A = sigma xi + ((e^{-h/eps} - 1)/sqrt(h)) g G^{-1} zeta
  //   + sigma (k_noise/sqrt(h) - 1) g G^{-1} g^T xi
  out = sigma * xi;
  out.noalias() += (-k.k_om / sq_h) * s.u;
  out.noalias() += (sigma * (k.k_noise / sq_h - 1.0)) * (s.g * (s.Y * xi));
  out *= sq_h;
  out += x;

  // B, term by term; every coefficient is grouped through k_eps_om so the
  // eps = +inf sentinel stays finite.
  const double beta_tan = k.k_eps_om / h - 1.0;
  const double beta_fix = sig2 * k.k_fix / h;
  const double beta_fix_proj = sig2 * k.k_eps_om * k.k_om / (8.0 * h);
  const double beta_curv = k.k_om_sq_half / h;
  const double beta_basis_sum = sig2 * (1.0 - k.k_eps_om / h);
  const double beta_proj_sum =
      0.25 * sig2 * ((k.k_eps_om / h) * (2.0 + k.k_om) - 2.0);

  model.grad_dir(x, s.u, s.gp);  // g'(g G^{-1} zeta)
  Vector& B = s.xhat;            // reuse scratch
  B = s.fx;
  B.noalias() += beta_tan * (s.g * (s.Y * s.fx));
  B.noalias() += (0.5 * sig2 * beta_tan) * (s.g * s.fact.solve(s.divg));
  B.noalias() += beta_fix * s.fixman;
  B.noalias() += beta_fix_proj * (s.g * (s.Y * s.fixman));
  B.noalias() += beta_curv * (s.gp * s.w);
  B.noalias() -= beta_curv * (s.g * (s.Y * (s.gp * s.w)));
  B.noalias() -= beta_curv * (s.g * s.fact.solve(Vector(s.gp.transpose() * s.u)));
  B.noalias() += beta_basis_sum * (s.g * s.fact.solve(s.S2));
  B.noalias() += beta_proj_sum * (s.g * s.fact.solve(s.S1));
  out.noalias() += h * B;
}

StepOutcome euler_unconstrained_step(const ConstraintModel& m,
                                     const ForceField& f,
                                     const SchemeParams& p, const Vector& x,
                                     const Vector& xi) {
  StepOutcome out;
  euler_unconstrained_step(m, f, p, x, xi, out);
  return out;
}

StepOutcome constrained_euler_explicit_step(const ConstraintModel& m,
                                            const ForceField& f,
                                            const SchemeParams& p,
                                            const Vector& x, const Vector& xi) {
  StepOutcome out;
  constrained_euler_explicit_step(m, f, p, x, xi, out);
  return out;
}

StepOutcome constrained_euler_implicit_step(const ConstraintModel& m,
                                            const ForceField& f,
                                            const SchemeParams& p,
                                            const Vector& x, const Vector& xi) {
  StepOutcome out;
  constrained_euler_implicit_step(m, f, p, x, xi, out);
  return out;
}

StepOutcome ua_step(const ConstraintModel& m, const ForceField& f,
                    const SchemeParams& p, const Vector& x, const Vector& xi) {
  StepOutcome out;
  ua_step(m, f, p, x, xi, out);
  return out;
}

StepOutcome ua_step_codim1(const ConstraintModel& m, const ForceField& f,
                           const SchemeParams& p, const Vector& x,
                           const Vector& xi) {
  StepOutcome out;
  ua_step_codim1(m, f, p, x, xi, out);
  return out;
}

StepOutcome ua_step_implicit_direction(const ConstraintModel& m,
                                       const ForceField& f,
                                       const SchemeParams& p, const Vector& x,
                                       const Vector& xi) {
  StepOutcome out;
  ua_step_implicit_direction(m, f, p, x, xi, out);
  return out;
}

Vector explicit_expansion_step(const ConstraintModel& m, const ForceField& f,
                               const SchemeParams& p, const Vector& x,
                               const Vector& xi) {
  Vector out;
  explicit_expansion_step(m, f, p, x, xi, out);
  return out;
}

void scheme_step(SchemeId id, const ConstraintModel& model,
                 const ForceField& f, const SchemeParams& params,
                 const Vector& x, const Vector& xi, StepOutcome& out) {
  switch (id) {
    case SchemeId::EulerRd:
      euler_unconstrained_step(model, f, params, x, xi, out);
      return;
    case SchemeId::EulerConstrained:
      constrained_euler_explicit_step(model, f, params, x, xi, out);
      return;
    case SchemeId::EulerConstrainedImplicit:
      constrained_euler_implicit_step(model, f, params, x, xi, out);
      return;
    case SchemeId::Ua:
      ua_step(model, f, params, x, xi, out);
      return;
    case SchemeId::UaImplicit:
      ua_step_implicit_direction(model, f, params, x, xi, out);
      return;
    case SchemeId::UaExpansion:
      explicit_expansion_step(model, f, params, x, xi, out.state);
      out.lambda.setZero(model.codim());
      out.solver_iterations = 0;
      out.constraint_residual = 0.0;
      return;
  }
  throw std::logic_error("unreachable");
}

}  // namespace langevin
