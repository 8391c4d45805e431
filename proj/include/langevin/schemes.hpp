#ifndef LANGEVIN_SCHEMES_HPP
#define LANGEVIN_SCHEMES_HPP

#include <functional>
#include <string>

#include "langevin/common.hpp"
#include "langevin/manifold.hpp"
#include "langevin/solver.hpp"

namespace langevin {

struct SchemeParams {
  double h;             ///< timestep, > 0
  double eps;           ///< penalization parameter, > 0 (+inf sentinel allowed
                        ///< for unpenalized coefficient limits in tests)
  double sigma;         ///< noise amplitude, >= 0
  double solver_tol = 1e-12;  ///< scaled by (1 + |zeta(x)|) at each step
  int max_solver_iterations = 50;
};

/// Every exponential coefficient of the uniform one-step map, evaluated
/// without cancellation for all h/eps in (0, 1e300]:
///
///   k_exp        e^{-h/eps}                      (flushed to 0 for h/eps > 745)
///   k_om         1 - e^{-h/eps}
///   k_eps_om     eps (1 - e^{-h/eps})
///   k_noise      sqrt(eps/2 (1 - e^{-2h/eps}))
///   k_om_sq_half (1 - e^{-h/eps})^2 / 2
///   k_fix        eps/8 (1 - e^{-2h/eps})
///   k_mix        eps (1 - e^{-h/eps}) - sqrt(eps h/2 (1 - e^{-2h/eps}))
struct StiffCoeffs {
  double k_exp;
  double k_om;
  double k_eps_om;
  double k_noise;
  double k_om_sq_half;
  double k_fix;
  double k_mix;
};

StiffCoeffs stiff_coeffs(double h, double eps);
StiffCoeffs stiff_coeffs(const SchemeParams& params);

/// Fixman drift weight of the implicit-projection-direction variant:
/// sqrt(2 eps h (1 - e^{-2h/eps})) - eps/2 (1 - e^{-2h/eps}).
double implicit_fixman_coeff(double h, double eps);

struct StepOutcome {
  Vector state;
  Vector lambda;               ///< zero for unconstrained schemes
  int solver_iterations = 0;
  double constraint_residual = 0.0;  ///< |zeta(state) - target| after solve
};

struct ForceField {
  std::string name = "zero";
  std::function<void(const Vector&, Vector&)> eval;
  void operator()(const Vector& x, Vector& out) const { eval(x, out); }
};

ForceField zero_force();
/// f(x) = -stiffness * (x - center).
ForceField spring_force(Vector center, double stiffness, std::string name);
/// Torus confinement f(x) = -25 (x1 - R + r, x2, x3).
ForceField torus_restoring_force(double major_radius, double minor_radius);
/// Orthogonal-group well f = -grad V, V(x) = 50 Tr((x - I)^T (x - I)).
ForceField orthogonal_well_force(int m);

enum class SchemeId {
  EulerRd,                   // "euler-rd"
  EulerConstrained,          // "euler-constrained"
  EulerConstrainedImplicit,  // "euler-constrained-implicit"
  Ua,                        // "ua"
  UaImplicit,                // "ua-implicit"
  UaExpansion,               // "ua-expansion"
};

SchemeId parse_scheme(const std::string& name);
std::string scheme_name(SchemeId id);
/// Penalization-free schemes (no projection solve); their blowup is recorded
/// as divergence data rather than treated as estimator failure.
bool scheme_respects_manifold(SchemeId id);

// One-step maps. Each is a pure function of (model, f, params, x, xi); the
// in-place overloads reuse the outcome's storage across steps.

/// Explicit Euler in R^d with the stiff penalty term evaluated directly.
void euler_unconstrained_step(const ConstraintModel& model,
                              const ForceField& f, const SchemeParams& params,
                              const Vector& x, const Vector& xi,
                              StepOutcome& out);

/// Constrained Euler: projection direction g(x), target zeta = 0.
void constrained_euler_explicit_step(const ConstraintModel& model,
                                     const ForceField& f,
                                     const SchemeParams& params,
                                     const Vector& x, const Vector& xi,
                                     StepOutcome& out);

/// Constrained Euler with implicit projection direction g(X_{n+1}).
void constrained_euler_implicit_step(const ConstraintModel& model,
                                     const ForceField& f,
                                     const SchemeParams& params,
                                     const Vector& x, const Vector& xi,
                                     StepOutcome& out);

/// The uniform one-step map for penalized dynamics: modified Euler drift
/// projected in direction g(x) onto the modified constraint target.
void ua_step(const ConstraintModel& model, const ForceField& f,
             const SchemeParams& params, const Vector& x, const Vector& xi,
             StepOutcome& out);

/// Codimension-1 reduction of ua_step (requires q = 1).
void ua_step_codim1(const ConstraintModel& model, const ForceField& f,
                    const SchemeParams& params, const Vector& x,
                    const Vector& xi, StepOutcome& out);

/// Variant converging to the implicit-direction constrained Euler scheme:
/// sign-flipped curvature term, adjusted Fixman weight, direction g(X_{n+1}).
void ua_step_implicit_direction(const ConstraintModel& model,
                                const ForceField& f,
                                const SchemeParams& params, const Vector& x,
                                const Vector& xi, StepOutcome& out);

/// Explicit one-step weak expansion x + sqrt(h) A(x) + h B(x).
void explicit_expansion_step(const ConstraintModel& model, const ForceField& f,
                             const SchemeParams& params, const Vector& x,
                             const Vector& xi, Vector& out);

StepOutcome euler_unconstrained_step(const ConstraintModel&, const ForceField&,
                                     const SchemeParams&, const Vector& x,
                                     const Vector& xi);
StepOutcome constrained_euler_explicit_step(const ConstraintModel&,
                                            const ForceField&,
                                            const SchemeParams&,
                                            const Vector& x, const Vector& xi);
StepOutcome constrained_euler_implicit_step(const ConstraintModel&,
                                            const ForceField&,
                                            const SchemeParams&,
                                            const Vector& x, const Vector& xi);
StepOutcome ua_step(const ConstraintModel&, const ForceField&,
                    const SchemeParams&, const Vector& x, const Vector& xi);
StepOutcome ua_step_codim1(const ConstraintModel&, const ForceField&,
                           const SchemeParams&, const Vector& x,
                           const Vector& xi);
StepOutcome ua_step_implicit_direction(const ConstraintModel&,
                                       const ForceField&, const SchemeParams&,
                                       const Vector& x, const Vector& xi);
Vector explicit_expansion_step(const ConstraintModel&, const ForceField&,
                               const SchemeParams&, const Vector& x,
                               const Vector& xi);

/// Dispatch by scheme id; UaExpansion is wrapped into a StepOutcome with
/// lambda = 0 and no solver work.
void scheme_step(SchemeId id, const ConstraintModel& model, const ForceField& f,
                 const SchemeParams& params, const Vector& x, const Vector& xi,
                 StepOutcome& out);

}  // namespace langevin

#endif  // LANGEVIN_SCHEMES_HPP
