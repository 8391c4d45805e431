#ifndef LANGEVIN_STOCHASTIC_HPP
#define LANGEVIN_STOCHASTIC_HPP

#include <cstdint>

#include "langevin/common.hpp"

namespace langevin {

/// Reproducible per-trajectory noise stream. Every draw is a pure function of
/// (seed, trajectory, step, component), so concurrent trajectory workers and
/// arbitrary execution orders always see identical sequences. Streams are
/// value-like; each trajectory owns the stream for its own trajectory index.
///
/// The default increment is the bounded discrete vector xi with independent
/// components distributed as
///   P(xi_i = 0) = 2/3,  P(xi_i = +sqrt(3)) = P(xi_i = -sqrt(3)) = 1/6,
/// which matches the standard Gaussian moments up to order four
/// (m1..m4 = 0, 1, 0, 3) but not beyond (m6 = 9 instead of 15).
class NoiseStream {
 public:
  NoiseStream(std::uint64_t seed, std::uint64_t trajectory, int dim,
              std::uint64_t step = 0)
      : seed_(seed), trajectory_(trajectory), step_(step), dim_(dim) {}

  std::uint64_t seed() const { return seed_; }
  std::uint64_t trajectory() const { return trajectory_; }
  std::uint64_t step() const { return step_; }
  int dim() const { return dim_; }

  void set_step(std::uint64_t step) { step_ = step; }
  void advance() { ++step_; }

  /// Discrete bounded increment; one 64-bit counter word per component.
  void fill_xi(Vector& out) const;
  Vector sample_xi() const;

  /// Standard normal increment (opt-in diagnostics); two words per component.
  void fill_gaussian(Vector& out) const;
  Vector sample_gaussian() const;

 private:
  std::uint64_t seed_;
  std::uint64_t trajectory_;
  std::uint64_t step_;
  int dim_;
};

namespace detail {

/// Philox2x64-10 counter-based generator: one output word for counter
/// (c0, c1) under the given key.
std::uint64_t philox2x64(std::uint64_t c0, std::uint64_t c1,
                         std::uint64_t key);

}  // namespace detail

/// Exact moments of a single xi component, by enumeration of the three-point
/// law. moments[k] = E[xi^(k+1)] for k = 0..max_order-1.
std::vector<double> xi_moments_by_enumeration(int max_order);

}  // namespace langevin

#endif  // LANGEVIN_STOCHASTIC_HPP
