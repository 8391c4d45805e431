#ifndef LANGEVIN_SOLVER_HPP
#define LANGEVIN_SOLVER_HPP

#include "langevin/common.hpp"
#include "langevin/manifold.hpp"

namespace langevin {

/// Whether the projection direction stays frozen at the base point or is
/// re-evaluated at the current iterate (implicit-direction schemes).
enum class DirectionMode { Frozen, Reevaluated };

/// Root-find for (X, lambda) with X = xhat + D lambda and zeta(X) = target.
struct ProjectionProblem {
  Vector x;          ///< base point of the step
  Vector xhat;       ///< explicit part of the step
  Matrix direction;  ///< D in R^{d x q}; g(x) for both modes initially
  Vector target;     ///< constraint value c in R^q
  double tolerance = 1e-12;
  int max_iterations = 50;
  DirectionMode mode = DirectionMode::Frozen;
};

struct ProjectionResult {
  Vector state;
  Vector lambda;
  int iterations = 0;
  double residual = 0.0;
};

/// Newton on the q-dimensional residual r(lambda) = zeta(xhat + D lambda) -
/// target with Jacobian g^T(xhat + D lambda) D, starting from lambda = 0.
/// Falls back to the damped fixed-point map (half-stepping, preconditioned by
/// D^T D) when Newton stalls. Throws ProjectionFailure (carrying the last
/// residual, which is >= tolerance) when both phases exhaust the budget.
ProjectionResult solve_projection(const ProjectionProblem& problem,
                                  const ConstraintModel& model);

/// Allocation-free core shared with the scheme one-step maps. Writes the
/// solution into (state, lambda), returns the iteration count and the final
/// residual |zeta(state) - target|.
int project(const ConstraintModel& model, DirectionMode mode,
            const Vector& xhat, const Matrix& direction, const Vector& target,
            double tolerance, int max_iterations, Vector& state,
            Vector& lambda, double& residual);

/// Averaged Gram matrix G_y(x) = int_0^1 g^T(x + tau y) dtau  g(x), the
/// admissibility quantity behind the uniform Lagrange multiplier bounds.
struct AveragedGram {
  Vector base;
  Vector displacement;
  int quadrature_order = 16;
};

Matrix averaged_gram(const ConstraintModel& model, const AveragedGram& spec);
Matrix averaged_gram(const ConstraintModel& model, const Vector& x,
                     const Vector& y);

/// Smallest singular value of G_y(x); a value near zero flags an inadmissible
/// multiplier configuration. Diagnostic only.
double averaged_gram_min_singular_value(const ConstraintModel& model,
                                        const Vector& x, const Vector& y);

/// Cross-check of a solved projection against the explicit multiplier formula
///   lambda = G_y(x)^{-1} [zeta(X) - zeta(x) - int_0^1 g^T(x + tau y) dtau
///   (xhat - x)],  y = X - x.
/// Returns |lambda_solver - lambda_formula| / (1 + |lambda_solver|).
double lagrange_identity_residual(const ConstraintModel& model,
                                  const Vector& x, const Vector& xhat,
                                  const Vector& state, const Vector& lambda);

}  // namespace langevin

#endif  // LANGEVIN_SOLVER_HPP
