#include "langevin/mc.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <thread>

namespace langevin {

namespace {

double now_seconds() {
  using clock = std::chrono::steady_clock;
  return std::chrono::duration<double>(clock::now().time_since_epoch()).count();
}

}  // namespace

// ---------------------------------------------------------------------------
// Test functions, presets, factories
// ---------------------------------------------------------------------------

TestFunction abs2_test_function() {
  return {"abs2", [](const Vector& x) { return x.squaredNorm(); }};
}

TestFunction trace_test_function(int m) {
  return {"trace", [m](const Vector& x) {
            double tr = 0.0;
            for (int k = 0; k < m; ++k) tr += x(k * m + k);
            return tr;
          }};
}

long long ExperimentConfig::num_steps() const {
  const long long n = std::llround(T / h);
  if (n < 1 || std::abs(static_cast<double>(n) * h - T) > 1e-9 * std::max(T, 1.0)) {
    throw std::invalid_argument(
        "config: h must divide the final time T into a positive integer "
        "number of steps");
  }
  return n;
}

long long ExperimentConfig::num_ref_steps() const {
  const long long n = std::llround(T / h_ref);
  if (n < 1 ||
      std::abs(static_cast<double>(n) * h_ref - T) > 1e-9 * std::max(T, 1.0)) {
    throw std::invalid_argument(
        "config: h_ref must divide the final time T into a positive integer "
        "number of steps");
  }
  return n;
}

void ExperimentConfig::validate() const {
  if (manifold != "torus" && manifold != "sphere" && manifold != "hyperplane" &&
      manifold != "orth") {
    throw std::invalid_argument("config: unknown manifold '" + manifold + "'");
  }
  if (force != "auto" && force != "zero" && force != "torus" &&
      force != "orth-well") {
    throw std::invalid_argument("config: unknown force '" + force + "'");
  }
  if (phi != "abs2" && phi != "trace") {
    throw std::invalid_argument("config: unknown phi '" + phi + "'");
  }
  parse_scheme(scheme);  // throws with the offending name
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) {
    throw std::invalid_argument("config: sigma must be finite and >= 0");
  }
  if (!(T > 0.0)) throw std::invalid_argument("config: T must be > 0");
  if (!(h > 0.0)) throw std::invalid_argument("config: h must be > 0");
  if (!(eps > 0.0)) throw std::invalid_argument("config: eps must be > 0");
  if (trajectories < 1) {
    throw std::invalid_argument("config: trajectories must be >= 1");
  }
  if (!(solver_tol > 0.0)) {
    throw std::invalid_argument("config: solver_tol must be > 0");
  }
  (void)num_steps();
}

ExperimentConfig torus_preset() {
  ExperimentConfig cfg;
  cfg.manifold = "torus";
  cfg.force = "torus";
  cfg.sigma = std::sqrt(2.0);
  cfg.T = 10.0;
  cfg.h = 10.0 / 512.0;       // 2^-9 T
  cfg.h_ref = 10.0 / 4096.0;  // 2^-12 T
  cfg.eps = 1.0;
  cfg.trajectories = 100000;
  cfg.scheme = "ua";
  cfg.phi = "abs2";
  return cfg;
}

ExperimentConfig orth_preset(int m) {
  ExperimentConfig cfg;
  cfg.manifold = "orth";
  cfg.orth_m = m;
  cfg.force = "orth-well";
  cfg.sigma = std::sqrt(2.0);
  cfg.T = 1.0;
  cfg.h = 1.0 / 128.0;      // 2^-7
  cfg.h_ref = 1.0 / 512.0;  // 2^-9
  cfg.eps = 0.005;
  cfg.trajectories = 100000;
  cfg.scheme = "ua";
  cfg.phi = "trace";
  return cfg;
}

std::unique_ptr<ConstraintModel> make_model(const ExperimentConfig& config) {
  if (config.manifold == "torus") {
    return std::make_unique<Torus>(config.torus_major, config.torus_minor);
  }
  if (config.manifold == "sphere") {
    return std::make_unique<Sphere>(config.sphere_dim, config.sphere_radius);
  }
  if (config.manifold == "hyperplane") {
    return std::make_unique<Hyperplane>(config.hyperplane_dim);
  }
  if (config.manifold == "orth") {
    return std::make_unique<OrthogonalGroup>(config.orth_m);
  }
  throw std::invalid_argument("config: unknown manifold '" + config.manifold +
                              "'");
}

ForceField make_force(const ExperimentConfig& config,
                      const ConstraintModel& model) {
  std::string choice = config.force;
  if (choice == "auto") {
    if (config.manifold == "torus") {
      choice = "torus";
    } else if (config.manifold == "orth") {
      choice = "orth-well";
    } else {
      choice = "zero";
    }
  }
  if (choice == "zero") return zero_force();
  if (choice == "torus") {
    return torus_restoring_force(config.torus_major, config.torus_minor);
  }
  if (choice == "orth-well") return orthogonal_well_force(config.orth_m);
  (void)model;
  throw std::invalid_argument("config: unknown force '" + config.force + "'");
}

TestFunction make_test_function(const ExperimentConfig& config,
                                const ConstraintModel& model) {
  if (config.phi == "abs2") return abs2_test_function();
  if (config.phi == "trace") {
    if (config.manifold != "orth") {
      throw std::invalid_argument(
          "config: phi 'trace' requires the orth manifold");
    }
    (void)model;
    return trace_test_function(config.orth_m);
  }
  throw std::invalid_argument("config: unknown phi '" + config.phi + "'");
}

Vector initial_state(const ExperimentConfig& config,
                     const ConstraintModel& model) {
  if (config.x0_override.empty()) return model.reference_point();
  if (static_cast<int>(config.x0_override.size()) != model.dim_ambient()) {
    throw std::invalid_argument(
        "config: x0_override dimension does not match the manifold");
  }
  return Eigen::Map<const Vector>(config.x0_override.data(),
                                  config.x0_override.size());
}

// ---------------------------------------------------------------------------
// Trajectory driver
// ---------------------------------------------------------------------------

namespace {

struct RunContext {
  ExperimentConfig cfg;
  std::unique_ptr<ConstraintModel> model;
  ForceField force;
  TestFunction phi;
  SchemeParams params;
  SchemeId scheme;
  Vector x0;
  long long steps = 0;
};

RunContext make_context(const ExperimentConfig& config) {
  config.validate();
  RunContext ctx;
  ctx.cfg = config;
  ctx.model = make_model(config);
  ctx.force = make_force(config, *ctx.model);
  ctx.phi = make_test_function(config, *ctx.model);
  ctx.params = SchemeParams{config.h, config.eps, config.sigma,
                            config.solver_tol, config.max_solver_iterations};
  ctx.scheme = parse_scheme(config.scheme);
  ctx.x0 = initial_state(config, *ctx.model);
  ctx.steps = config.num_steps();
  return ctx;
}

struct PathScratch {
  Vector x, xi, zeta;
  StepOutcome out;
};

// One full trajectory; pure function of (ctx, index). `res.final_state` and
// the scratch buffers are reused across calls without reallocation.
void run_path(const RunContext& ctx, long long index, PathScratch& ps,
              TrajectoryResult& res) {
  const int d = ctx.model->dim_ambient();
  ps.x = ctx.x0;
  res.max_abs_zeta = 0.0;
  res.solver_iterations = 0;
  res.steps_completed = 0;
  res.diverged = false;
  res.failed = false;
  res.failure_step = -1;

  NoiseStream noise(ctx.cfg.seed, static_cast<std::uint64_t>(index), d);
  for (long long n = 0; n < ctx.steps; ++n) {
    noise.set_step(static_cast<std::uint64_t>(n));
    noise.fill_xi(ps.xi);
    try {
      scheme_step(ctx.scheme, *ctx.model, ctx.force, ctx.params, ps.x, ps.xi,
                  ps.out);
    } catch (const ProjectionFailure&) {
      res.failed = true;
      res.failure_step = n;
      break;
    } catch (const SingularGram&) {
      res.failed = true;
      res.failure_step = n;
      break;
    }
    ps.x.swap(ps.out.state);
    res.solver_iterations += ps.out.solver_iterations;
    ++res.steps_completed;
    if (!ps.x.allFinite() || ps.x.norm() > ctx.cfg.divergence_guard) {
      res.diverged = true;
      res.failure_step = n;
      break;
    }
    ctx.model->zeta(ps.x, ps.zeta);
    res.max_abs_zeta = std::max(res.max_abs_zeta, ps.zeta.norm());
  }
  res.final_state = ps.x;
}

}  // namespace

void parallel_for(long long n, int threads,
                  const std::function<void(long long, long long)>& body) {
  if (threads <= 0) {
    threads = static_cast<int>(std::thread::hardware_concurrency());
    if (threads <= 0) threads = 1;
  }
  threads = static_cast<int>(
      std::min<long long>(threads, std::max<long long>(n, 1)));
  if (threads <= 1) {
    body(0, n);
    return;
  }
  const long long block = (n + threads - 1) / threads;
  std::vector<std::thread> pool;
  std::exception_ptr error;
  std::mutex error_mutex;
  for (int t = 0; t < threads; ++t) {
    const long long begin = t * block;
    const long long end = std::min(n, begin + block);
    if (begin >= end) break;
    pool.emplace_back([&, begin, end] {
      try {
        body(begin, end);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

TrajectoryResult run_trajectory(const ExperimentConfig& config,
                                const std::string& scheme,
                                long long trajectory_index) {
  ExperimentConfig cfg = config;
  cfg.scheme = scheme;
  const RunContext ctx = make_context(cfg);
  PathScratch ps;
  TrajectoryResult res;
  run_path(ctx, trajectory_index, ps, res);
  return res;
}

// ---------------------------------------------------------------------------
// Estimators
// ---------------------------------------------------------------------------

namespace {

EstimatorResult estimate_impl(const ExperimentConfig& config, int threads) {
  const RunContext ctx = make_context(config);
  const long long M = config.trajectories;

  std::vector<double> value(M, 0.0);
  std::vector<double> maxz(M, 0.0);
  std::vector<long long> iters(M, 0);
  std::vector<long long> steps(M, 0);
  std::vector<unsigned char> status(M, 0);  // 1 ok, 2 diverged, 3 failed

  const double t0 = now_seconds();
  parallel_for(M, threads, [&](long long begin, long long end) {
    PathScratch ps;
    TrajectoryResult res;
    for (long long i = begin; i < end; ++i) {
      run_path(ctx, i, ps, res);
      if (res.diverged) {
        status[i] = 2;
      } else if (res.failed) {
        status[i] = 3;
      } else {
        status[i] = 1;
        value[i] = ctx.phi(res.final_state);
        maxz[i] = res.max_abs_zeta;
        iters[i] = res.solver_iterations;
        steps[i] = res.steps_completed;
      }
    }
  });
  const double t1 = now_seconds();

  EstimatorResult out;
  out.requested = M;
  out.wall_seconds = t1 - t0;

  long long n_ok = 0;
  long long total_iters = 0;
  long long total_steps = 0;
  double max_abs_zeta = 0.0;
  std::vector<double> included;
  included.reserve(M);
  for (long long i = 0; i < M; ++i) {
    if (status[i] == 2) ++out.diverged;
    if (status[i] == 3) ++out.failed;
    if (status[i] != 1) continue;
    ++n_ok;
    included.push_back(value[i]);
    total_iters += iters[i];
    total_steps += steps[i];
    max_abs_zeta = std::max(max_abs_zeta, maxz[i]);
  }
  out.samples = n_ok;
  out.max_abs_zeta = max_abs_zeta;
  if (total_steps > 0) {
    out.mean_solver_iterations =
        static_cast<double>(total_iters) / static_cast<double>(total_steps);
  }
  if (n_ok == 0) {
    out.mean = std::numeric_limits<double>::quiet_NaN();
    out.std_error = std::numeric_limits<double>::quiet_NaN();
    return out;
  }
  out.mean = pairwise_sum(included) / static_cast<double>(n_ok);
  if (n_ok > 1) {
    for (double& v : included) {
      const double c = v - out.mean;
      v = c * c;
    }
    const double var =
        pairwise_sum(included) / static_cast<double>(n_ok - 1);
    out.std_error = std::sqrt(var / static_cast<double>(n_ok));
  }
  return out;
}

}  // namespace

EstimatorResult weak_estimate(const ExperimentConfig& config, int threads) {
  EstimatorResult out = estimate_impl(config, threads);
  if (scheme_respects_manifold(parse_scheme(config.scheme)) &&
      static_cast<double>(out.diverged) >
          0.001 * static_cast<double>(out.requested)) {
    throw std::runtime_error(
        "weak_estimate: more than 0.1% of trajectories diverged under a "
        "manifold-respecting scheme (" +
        config.scheme + ")");
  }
  return out;
}

// ---------------------------------------------------------------------------
// Sweeps
// ---------------------------------------------------------------------------

namespace {

SweepRow make_row(const ExperimentConfig& run_cfg, const EstimatorResult& est,
                  const EstimatorResult& ref) {
  SweepRow row;
  row.eps = run_cfg.eps;
  row.h = run_cfg.h;
  row.scheme = run_cfg.scheme;
  row.estimate = est.mean;
  row.std_error = est.std_error;
  row.error_vs_ref = std::abs(est.mean - ref.mean);
  row.trajectories = est.requested;
  row.mean_fp_iters = est.mean_solver_iterations;
  row.diverged = est.diverged + est.failed;
  row.wall_seconds = est.wall_seconds;
  row.ref_estimate = ref.mean;
  row.ref_std_error = ref.std_error;
  return row;
}

}  // namespace

std::vector<SweepRow> sweep_eps(const ExperimentConfig& config,
                                const std::vector<double>& eps_list,
                                const std::vector<std::string>& schemes,
                                int threads) {
  std::vector<SweepRow> rows;
  for (double eps : eps_list) {
    ExperimentConfig ref_cfg = config;
    ref_cfg.eps = eps;
    ref_cfg.scheme = "ua";
    ref_cfg.h = config.h_ref;
    const EstimatorResult ref = estimate_impl(ref_cfg, threads);
    for (const std::string& scheme : schemes) {
      ExperimentConfig run_cfg = config;
      run_cfg.eps = eps;
      run_cfg.scheme = scheme;
      rows.push_back(make_row(run_cfg, estimate_impl(run_cfg, threads), ref));
    }
  }
  return rows;
}

std::vector<SweepRow> sweep_h(const ExperimentConfig& config,
                              const std::vector<double>& h_list,
                              const std::vector<std::string>& schemes,
                              int threads) {
  ExperimentConfig ref_cfg = config;
  ref_cfg.scheme = "ua";
  ref_cfg.h = config.h_ref;
  const EstimatorResult ref = estimate_impl(ref_cfg, threads);
  std::vector<SweepRow> rows;
  for (double h : h_list) {
    for (const std::string& scheme : schemes) {
      ExperimentConfig run_cfg = config;
      run_cfg.h = h;
      run_cfg.scheme = scheme;
      rows.push_back(make_row(run_cfg, estimate_impl(run_cfg, threads), ref));
    }
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Convergence diagnostics
// ---------------------------------------------------------------------------

namespace {

SlopeFit fit_log_log(std::vector<double> abscissa, std::vector<double> values) {
  SlopeFit fit;
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < abscissa.size(); ++i) {
    lx.push_back(std::log10(abscissa[i]));
    ly.push_back(std::log10(values[i]));
  }
  fit.slope = ols_slope(lx, ly);
  fit.abscissa = std::move(abscissa);
  fit.values = std::move(values);
  return fit;
}

}  // namespace

SlopeFit zeta_decay_vs_eps(const ExperimentConfig& config,
                           const std::vector<double>& eps_list, int threads) {
  const SchemeId id = parse_scheme(config.scheme);
  if (id != SchemeId::Ua && id != SchemeId::UaImplicit) {
    throw std::invalid_argument(
        "zeta_decay_vs_eps requires a uniform scheme (ua or ua-implicit)");
  }
  std::vector<double> means;
  for (double eps : eps_list) {
    ExperimentConfig cfg = config;
    cfg.eps = eps;
    const RunContext ctx = make_context(cfg);
    const long long M = cfg.trajectories;
    std::vector<double> maxz(M, 0.0);
    std::vector<unsigned char> ok(M, 0);
    parallel_for(M, threads, [&](long long begin, long long end) {
      PathScratch ps;
      TrajectoryResult res;
      for (long long i = begin; i < end; ++i) {
        run_path(ctx, i, ps, res);
        if (!res.diverged && !res.failed) {
          ok[i] = 1;
          maxz[i] = res.max_abs_zeta;
        }
      }
    });
    double sum = 0.0;
    long long n_ok = 0;
    for (long long i = 0; i < M; ++i) {
      if (ok[i]) {
        sum += maxz[i];
        ++n_ok;
      }
    }
    if (n_ok == 0) {
      throw std::runtime_error("zeta_decay_vs_eps: all trajectories failed");
    }
    means.push_back(sum / static_cast<double>(n_ok));
  }
  return fit_log_log(eps_list, means);
}

GapStats coupled_gap(const ExperimentConfig& config,
                     const std::string& scheme_a, const std::string& scheme_b,
                     int threads) {
  ExperimentConfig cfg_a = config;
  cfg_a.scheme = scheme_a;
  ExperimentConfig cfg_b = config;
  cfg_b.scheme = scheme_b;
  const RunContext ctx_a = make_context(cfg_a);
  const RunContext ctx_b = make_context(cfg_b);
  const long long M = config.trajectories;
  const int d = ctx_a.model->dim_ambient();

  std::vector<double> final_gap(M, 0.0), max_gap(M, 0.0);
  std::vector<unsigned char> ok(M, 0);
  parallel_for(M, threads, [&](long long begin, long long end) {
    Vector xa(d), xb(d), xi(d);
    StepOutcome oa, ob;
    for (long long i = begin; i < end; ++i) {
      xa = ctx_a.x0;
      xb = ctx_b.x0;
      NoiseStream noise(config.seed, static_cast<std::uint64_t>(i), d);
      double gmax = 0.0;
      bool good = true;
      for (long long n = 0; n < ctx_a.steps; ++n) {
        noise.set_step(static_cast<std::uint64_t>(n));
        noise.fill_xi(xi);
        try {
          scheme_step(ctx_a.scheme, *ctx_a.model, ctx_a.force, ctx_a.params,
                      xa, xi, oa);
          scheme_step(ctx_b.scheme, *ctx_b.model, ctx_b.force, ctx_b.params,
                      xb, xi, ob);
        } catch (const std::exception&) {
          good = false;
          break;
        }
        xa.swap(oa.state);
        xb.swap(ob.state);
        if (!xa.allFinite() || !xb.allFinite()) {
          good = false;
          break;
        }
        gmax = std::max(gmax, (xa - xb).norm());
      }
      if (good) {
        ok[i] = 1;
        final_gap[i] = (xa - xb).norm();
        max_gap[i] = gmax;
      }
    }
  });

  GapStats out;
  double sf = 0.0, ssq = 0.0, sm = 0.0;
  for (long long i = 0; i < M; ++i) {
    if (!ok[i]) continue;
    ++out.samples;
    sf += final_gap[i];
    ssq += final_gap[i] * final_gap[i];
    sm += max_gap[i];
  }
  if (out.samples > 0) {
    out.mean_final_gap = sf / static_cast<double>(out.samples);
    out.mean_sq_final_gap = ssq / static_cast<double>(out.samples);
    out.mean_max_gap = sm / static_cast<double>(out.samples);
  }
  return out;
}

GapSweep strong_gap_vs_eps(const ExperimentConfig& config,
                           const std::vector<double>& eps_list, int threads) {
  GapSweep sweep;
  sweep.eps = eps_list;
  std::vector<double> sq, fin, mx;
  for (double eps : eps_list) {
    ExperimentConfig cfg = config;
    cfg.eps = eps;
    const GapStats stats = coupled_gap(cfg, "ua", "euler-constrained", threads);
    sweep.stats.push_back(stats);
    sq.push_back(stats.mean_sq_final_gap);
    fin.push_back(stats.mean_final_gap);
    mx.push_back(stats.mean_max_gap);
  }
  sweep.slope_sq_final = fit_log_log(eps_list, sq).slope;
  sweep.slope_final = fit_log_log(eps_list, fin).slope;
  sweep.slope_max = fit_log_log(eps_list, mx).slope;
  return sweep;
}

InvariantError invariant_measure_error(const ExperimentConfig& config,
                                       int threads) {
  InvariantError out;
  out.run = weak_estimate(config, threads);
  ExperimentConfig ref_cfg = config;
  ref_cfg.scheme = "ua";
  ref_cfg.h = config.h_ref;
  out.ref = weak_estimate(ref_cfg, threads);
  out.error = std::abs(out.run.mean - out.ref.mean);
  out.pooled_std_error = std::hypot(out.run.std_error, out.ref.std_error);
  return out;
}

std::vector<OrthRow> orth_group_table(const std::vector<int>& m_list,
                                      const ExperimentConfig& config,
                                      int threads) {
  std::vector<OrthRow> rows;
  for (int m : m_list) {
    ExperimentConfig base = config;
    base.manifold = "orth";
    base.orth_m = m;
    base.phi = "trace";
    if (base.force == "auto" || base.force == "torus") base.force = "orth-well";

    ExperimentConfig ref_cfg = base;
    ref_cfg.scheme = "ua";
    ref_cfg.h = base.h_ref;
    const EstimatorResult ref = weak_estimate(ref_cfg, threads);

    ExperimentConfig ua_cfg = base;
    ua_cfg.scheme = "ua";
    const EstimatorResult ua = weak_estimate(ua_cfg, threads);

    ExperimentConfig ec_cfg = base;
    ec_cfg.scheme = "euler-constrained";
    const EstimatorResult ec = weak_estimate(ec_cfg, threads);

    OrthRow row;
    row.m = m;
    row.dim_manifold = m * (m - 1) / 2;
    row.codim = m * (m + 1) / 2;
    row.J_ref = ref.mean;
    row.J_ua = ua.mean;
    row.err_ua = std::abs(ua.mean - ref.mean);
    row.J_ec = ec.mean;
    row.err_ec = std::abs(ec.mean - ref.mean);
    row.se_ref = ref.std_error;
    row.se_ua = ua.std_error;
    row.se_ec = ec.std_error;
    rows.push_back(row);
  }
  return rows;
}

}  // namespace langevin
