#include "langevin/oracle.hpp"

#include <cmath>
#include <stdexcept>

namespace langevin {

namespace {

constexpr double kSqrt3 = 1.7320508075688772935;

}  // namespace

OutcomeEnumeration::OutcomeEnumeration(int dim) : dim_(dim) {
  if (dim < 1 || dim > 7) {
    throw std::invalid_argument(
        "OutcomeEnumeration: dimension must be in [1, 7]");
  }
  size_ = 1;
  denominator_ = 1.0;
  for (int i = 0; i < dim; ++i) {
    size_ *= 3;
    denominator_ *= 6.0;
  }
}

double OutcomeEnumeration::outcome(long long index, Vector& xi) const {
  xi.resize(dim_);
  double weight = 1.0;  // 4^z, exact in double for dim <= 7
  for (int i = 0; i < dim_; ++i) {
    const int digit = static_cast<int>(index % 3);
    index /= 3;
    if (digit == 0) {
      xi(i) = 0.0;
      weight *= 4.0;
    } else {
      xi(i) = digit == 1 ? kSqrt3 : -kSqrt3;
    }
  }
  return weight;
}

double exact_expectation(const ConstraintModel& model, SchemeId scheme,
                         const ForceField& f, const SchemeParams& params,
                         const Vector& x, const TestFunction& phi) {
  const OutcomeEnumeration law(model.dim_ambient());
  Vector xi(law.dim());
  StepOutcome out;
  double weighted_sum = 0.0;
  for (long long k = 0; k < law.size(); ++k) {
    const double weight = law.outcome(k, xi);
    scheme_step(scheme, model, f, params, x, xi, out);
    weighted_sum += weight * phi(out.state);
  }
  return weighted_sum / law.denominator();
}

DerivativeAudit derivative_audit(const ConstraintModel& model,
                                 const std::vector<Vector>& points) {
  const int d = model.dim_ambient();
  const int q = model.codim();
  DerivativeAudit audit;

  Matrix g(d, q), g_fd(d, q), gp(d, q), gp_fd(d, q), gsum(d, q);
  Vector zp(q), zm(q), divg(q), divg_sum(q), fixman(d), fixman_fd(d);
  Vector xp(d), xm(d), v(d), ei(d);

  for (const Vector& x : points) {
    const double step = 1e-5 * (1.0 + x.norm());

    // g against central differences of zeta.
    model.grad(x, g);
    for (int i = 0; i < d; ++i) {
      xp = x;
      xm = x;
      xp(i) += step;
      xm(i) -= step;
      model.zeta(xp, zp);
      model.zeta(xm, zm);
      g_fd.row(i) = ((zp - zm) / (2.0 * step)).transpose();
    }
    audit.grad_mismatch = std::max(
        audit.grad_mismatch, (g_fd - g).norm() / (1.0 + g.norm()));

    // g'(v) against central differences of g, along the coordinate
    // directions and one mixed direction.
    for (int k = 0; k <= d; ++k) {
      if (k < d) {
        v.setZero(d);
        v(k) = 1.0;
      } else {
        v.setConstant(d, 1.0 / std::sqrt(static_cast<double>(d)));
      }
      model.grad_dir(x, v, gp);
      xp = x + step * v;
      xm = x - step * v;
      model.grad(xp, g_fd);
      model.grad(xm, gp_fd);
      gp_fd = (g_fd - gp_fd) / (2.0 * step);
      audit.grad_dir_mismatch =
          std::max(audit.grad_dir_mismatch,
                   (gp_fd - gp).norm() / (1.0 + gp.norm()));
    }

    // div g against the definitional sum over g'(e_i).
    model.div_grad(x, divg);
    divg_sum.setZero(q);
    ei.setZero(d);
    for (int i = 0; i < d; ++i) {
      ei(i) = 1.0;
      model.grad_dir(x, ei, gp);
      divg_sum += gp.row(i).transpose();
      ei(i) = 0.0;
    }
    audit.div_grad_mismatch =
        std::max(audit.div_grad_mismatch,
                 (divg_sum - divg).norm() / (1.0 + divg.norm()));

    // fixman_grad against central differences of ln det G.
    fixman = fixman_grad(model, x);
    for (int i = 0; i < d; ++i) {
      xp = x;
      xm = x;
      xp(i) += step;
      xm(i) -= step;
      const Matrix gp1 = model.grad(xp);
      const Matrix gm1 = model.grad(xm);
      GramFactorization Fp(gp1.transpose() * gp1);
      GramFactorization Fm(gm1.transpose() * gm1);
      fixman_fd(i) = (Fp.log_det() - Fm.log_det()) / (2.0 * step);
    }
    audit.fixman_mismatch =
        std::max(audit.fixman_mismatch,
                 (fixman_fd - fixman).norm() / (1.0 + fixman.norm()));
  }
  return audit;
}

}  // namespace langevin
