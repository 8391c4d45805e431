#ifndef LANGEVIN_ORACLE_HPP
#define LANGEVIN_ORACLE_HPP

#include <vector>

#include "langevin/common.hpp"
#include "langevin/manifold.hpp"
#include "langevin/mc.hpp"
#include "langevin/schemes.hpp"

namespace langevin {

/// The 3^d outcomes of the discrete increment law, enumerated in mixed-radix
/// order with exact integer weights: outcome probabilities are 4^z / 6^d where
/// z counts zero components.
class OutcomeEnumeration {
 public:
  explicit OutcomeEnumeration(int dim);

  int dim() const { return dim_; }
  long long size() const { return size_; }

  /// Writes outcome `index` into xi and returns its integer weight numerator
  /// 4^z; the common denominator is 6^dim.
  double outcome(long long index, Vector& xi) const;
  double denominator() const { return denominator_; }

 private:
  int dim_;
  long long size_;
  double denominator_;
};

/// Exact one-step expectation  E[phi(step(x, xi))]  by enumeration of the
/// discrete noise law; zero Monte Carlo error. Requires dim <= 7.
double exact_expectation(const ConstraintModel& model, SchemeId scheme,
                         const ForceField& f, const SchemeParams& params,
                         const Vector& x, const TestFunction& phi);

struct DerivativeAudit {
  double grad_mismatch = 0.0;      ///< analytic g vs central differences
  double grad_dir_mismatch = 0.0;  ///< g'(x)(v) vs central differences
  double div_grad_mismatch = 0.0;  ///< div g vs the definitional g' sum
  double fixman_mismatch = 0.0;    ///< fixman_grad vs differences of ln det G
};

/// Max relative mismatch of the analytic derivative evaluators against
/// central finite differences with step 1e-5 (1 + |x|) over the given points.
DerivativeAudit derivative_audit(const ConstraintModel& model,
                                 const std::vector<Vector>& points);

}  // namespace langevin

#endif  // LANGEVIN_ORACLE_HPP
