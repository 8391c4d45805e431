#ifndef LANGEVIN_COMMON_HPP
#define LANGEVIN_COMMON_HPP

#include <Eigen/Dense>

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace langevin {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Thrown when the Gram matrix G = g^T g cannot be factorized (rank-deficient
/// constraints at the evaluation point).
class SingularGram : public std::runtime_error {
 public:
  explicit SingularGram(const std::string& what) : std::runtime_error(what) {}
};

/// Thrown when the projection root-find does not converge within the iteration
/// budget. Carries the last constraint residual, which is >= the requested
/// tolerance by construction.
class ProjectionFailure : public std::runtime_error {
 public:
  ProjectionFailure(const std::string& what, double residual)
      : std::runtime_error(what), residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_;
};

/// Pairwise (cascade) summation. Order-deterministic: depends only on the
/// element order, never on thread scheduling.
inline double pairwise_sum(std::span<const double> values) {
  const std::size_t n = values.size();
  if (n <= 8) {
    double s = 0.0;
    for (double v : values) s += v;
    return s;
  }
  const std::size_t half = n / 2;
  return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

/// Ordinary least squares slope of y against x.
inline double ols_slope(std::span<const double> x, std::span<const double> y) {
  const std::size_t n = x.size();
  if (n < 2 || y.size() != n) {
    throw std::invalid_argument("ols_slope: need >= 2 matching points");
  }
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  return sxy / sxx;
}

}  // namespace langevin

#endif  // LANGEVIN_COMMON_HPP
