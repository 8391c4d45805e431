#ifndef LANGEVIN_MC_HPP
#define LANGEVIN_MC_HPP

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "langevin/common.hpp"
#include "langevin/manifold.hpp"
#include "langevin/schemes.hpp"
#include "langevin/stochastic.hpp"

namespace langevin {

struct TestFunction {
  std::string name;
  std::function<double(const Vector&)> eval;
  double operator()(const Vector& x) const { return eval(x); }
};

TestFunction abs2_test_function();
/// Trace of the m x m matrix stored column-major in the state vector.
TestFunction trace_test_function(int m);

/// Full description of one estimator run. T/h must be a positive integer.
struct ExperimentConfig {
  std::string manifold = "torus";  // torus | sphere | hyperplane | orth
  double torus_major = 3.0;
  double torus_minor = 1.0;
  double sphere_radius = 1.0;
  int sphere_dim = 3;
  int hyperplane_dim = 3;
  int orth_m = 2;

  std::string force = "auto";  // auto | zero | torus | orth-well
  double sigma = 1.4142135623730951;  // sqrt(2)
  double T = 10.0;
  double h = 10.0 / 512.0;  // 2^-9 T
  double eps = 1.0;
  long long trajectories = 100000;
  std::string scheme = "ua";
  std::string phi = "abs2";  // abs2 | trace
  std::uint64_t seed = 42;
  double h_ref = 10.0 / 4096.0;  // 2^-12 T

  double solver_tol = 1e-12;
  int max_solver_iterations = 50;
  double divergence_guard = 1e8;

  /// Optional initial condition; empty selects the manifold preset point
  /// (torus: (R - r, 0, 0); orthogonal group: the identity).
  std::vector<double> x0_override;

  long long num_steps() const;
  long long num_ref_steps() const;
  void validate() const;
};

/// Torus invariant-measure experiment at desk scale.
ExperimentConfig torus_preset();
/// Orthogonal-group weak experiment.
ExperimentConfig orth_preset(int m);

std::unique_ptr<ConstraintModel> make_model(const ExperimentConfig& config);
ForceField make_force(const ExperimentConfig& config,
                      const ConstraintModel& model);
TestFunction make_test_function(const ExperimentConfig& config,
                                const ConstraintModel& model);
Vector initial_state(const ExperimentConfig& config,
                     const ConstraintModel& model);

struct TrajectoryResult {
  Vector final_state;
  double max_abs_zeta = 0.0;
  long long solver_iterations = 0;
  long long steps_completed = 0;
  bool diverged = false;
  bool failed = false;
  long long failure_step = -1;
};

/// N steps of the selected scheme from the preset initial condition;
/// deterministic per (seed, trajectory index).
TrajectoryResult run_trajectory(const ExperimentConfig& config,
                                const std::string& scheme,
                                long long trajectory_index);

struct EstimatorResult {
  double mean = 0.0;
  double std_error = 0.0;
  long long samples = 0;      ///< trajectories included in the mean
  long long requested = 0;    ///< configured trajectory count M
  double wall_seconds = 0.0;
  double mean_solver_iterations = 0.0;  ///< per step, over included paths
  long long diverged = 0;     ///< norm-guard blowups (excluded and counted)
  long long failed = 0;       ///< projection failures (excluded and counted);
                              ///< the admissibility signal, not instability
  double max_abs_zeta = 0.0;  ///< max over included paths
};

/// Monte Carlo mean of phi(X_N) over M independent trajectories. Throws if
/// more than 0.1% of trajectories blow past the norm guard under a
/// manifold-respecting scheme; projection failures are excluded and counted.
EstimatorResult weak_estimate(const ExperimentConfig& config, int threads = 0);

struct SweepRow {
  double eps = 0.0;
  double h = 0.0;
  std::string scheme;
  double estimate = 0.0;
  double std_error = 0.0;
  double error_vs_ref = 0.0;
  long long trajectories = 0;
  double mean_fp_iters = 0.0;
  long long diverged = 0;
  double wall_seconds = 0.0;
  double ref_estimate = 0.0;
  double ref_std_error = 0.0;
};

/// One row per (eps, scheme); the reference is recomputed per eps with the
/// uniform scheme at h_ref. Per-cell instability is recorded, not thrown.
std::vector<SweepRow> sweep_eps(const ExperimentConfig& config,
                                const std::vector<double>& eps_list,
                                const std::vector<std::string>& schemes,
                                int threads = 0);

/// One row per (h, scheme) at fixed eps, against the h_ref reference.
std::vector<SweepRow> sweep_h(const ExperimentConfig& config,
                              const std::vector<double>& h_list,
                              const std::vector<std::string>& schemes,
                              int threads = 0);

struct SlopeFit {
  std::vector<double> abscissa;
  std::vector<double> values;
  double slope = 0.0;  ///< OLS slope of log10(values) against log10(abscissa)
};

/// Mean over trajectories of max_n |zeta(X_n)| per eps, with the fitted
/// log-log slope. Requires a uniform scheme in the config.
SlopeFit zeta_decay_vs_eps(const ExperimentConfig& config,
                           const std::vector<double>& eps_list,
                           int threads = 0);

struct GapStats {
  double mean_final_gap = 0.0;
  double mean_sq_final_gap = 0.0;
  double mean_max_gap = 0.0;
  long long samples = 0;
};

/// Runs two schemes in lockstep on identical noise and measures the state gap.
GapStats coupled_gap(const ExperimentConfig& config,
                     const std::string& scheme_a, const std::string& scheme_b,
                     int threads = 0);

struct GapSweep {
  std::vector<double> eps;
  std::vector<GapStats> stats;
  double slope_sq_final = 0.0;  ///< E|X^eps_N - X^0_N|^2: slope ~ 1
  double slope_final = 0.0;     ///< mean final gap: slope ~ 1/2
  double slope_max = 0.0;       ///< mean max_n gap: slope ~ 1/2
};

/// Coupled-noise gap between the uniform scheme at each eps and the
/// constrained Euler scheme, with fitted slopes against eps.
GapSweep strong_gap_vs_eps(const ExperimentConfig& config,
                           const std::vector<double>& eps_list,
                           int threads = 0);

struct InvariantError {
  EstimatorResult run;
  EstimatorResult ref;
  double error = 0.0;
  double pooled_std_error = 0.0;
};

/// |J(scheme, h) - J(ua, h_ref)| for the long-time average.
InvariantError invariant_measure_error(const ExperimentConfig& config,
                                       int threads = 0);

struct OrthRow {
  int m = 0;
  int dim_manifold = 0;
  int codim = 0;
  double J_ref = 0.0;
  double J_ua = 0.0;
  double err_ua = 0.0;
  double J_ec = 0.0;
  double err_ec = 0.0;
  double se_ref = 0.0;
  double se_ua = 0.0;
  double se_ec = 0.0;
};

/// Weak approximation of E[Tr(X(T))] on Or(m) for each m, uniform scheme and
/// constrained Euler against the self-computed h_ref reference.
std::vector<OrthRow> orth_group_table(const std::vector<int>& m_list,
                                      const ExperimentConfig& config,
                                      int threads = 0);

/// Static-chunk parallel loop; work items must write to disjoint slots so the
/// result is independent of the worker count.
void parallel_for(long long n, int threads,
                  const std::function<void(long long, long long)>& body);

}  // namespace langevin

#endif  // LANGEVIN_MC_HPP
