#pragma once

// Scenario runners: dynamic and static noise sweeps, the three-objective
// robustness comparison, and the propagator convergence check. Runners
// return tabulated records with enough provenance to be re-run
// bit-identically; serialization lives in io.hpp.

#include "toffoli/noise.hpp"
#include "toffoli/optimizer.hpp"

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace toffoli {

struct SweepPoint {
  double abscissa = 0.0;
  EnsembleStats stats;
};

struct SweepProvenance {
  SystemConfig config;
  NoiseSpec noise_template;
  std::string schedule_id;
  std::uint64_t seed = 0;
  std::size_t n_realizations = 0;
};

struct SweepResult {
  std::string scenario;
  std::string abscissa_name;
  std::vector<SweepPoint> points;
  SweepProvenance provenance;

  const SweepPoint& at(double x, double tol = 1e-9) const {
    for (const auto& p : points) {
      if (std::abs(p.abscissa - x) <= tol) return p;
    }
    throw std::out_of_range("SweepResult: abscissa not on grid");
  }
};

/// start, start + step, ..., stop (inclusive), computed by index to avoid drift.
inline std::vector<double> linear_grid(double start, double stop, double step) {
  if (!(step > 0.0)) throw std::invalid_argument("linear_grid: step must be > 0");
  const auto count = static_cast<std::size_t>(std::floor((stop - start) / step + 1e-9)) + 1;
  std::vector<double> g(count);
  for (std::size_t k = 0; k < count; ++k) g[k] = start + static_cast<double>(k) * step;
  return g;
}

inline std::vector<double> default_sigma_grid() { return linear_grid(0.0, 2.0, 0.05); }
inline std::vector<double> default_tgfc_list() { return {1, 2, 5, 10, 20, 40, 100, 200}; }
inline std::vector<double> default_delta_grid() { return linear_grid(0.0, 0.5, 0.01); }
inline std::vector<double> default_coupling_grid() { return linear_grid(0.8, 1.2, 0.005); }

/// Average fidelity against sigma, one result per t_g f_c. Every point uses
/// the same master seed (common random numbers across the grid).
inline std::vector<SweepResult> run_dynamic_sweep(const SystemConfig& cfg, const ControlSchedule& u,
                                                  const std::vector<double>& sigma_grid,
                                                  const std::vector<double>& tgfc_list, std::size_t n,
                                                  std::uint64_t seed, unsigned threads = 0, int n_sources = 1,
                                                  const std::string& schedule_id = "schedule") {
  std::vector<SweepResult> out;
  for (double tgfc : tgfc_list) {
    SweepResult r;
    r.scenario = "dynamic";
    r.abscissa_name = "sigma";
    r.provenance = {cfg, NoiseSpec::dynamic(0.0, tgfc, cfg.gate_time, seed, n_sources), schedule_id, seed, n};
    for (double sigma : sigma_grid) {
      const NoiseSpec spec = NoiseSpec::dynamic(sigma, tgfc, cfg.gate_time, seed, n_sources);
      r.points.push_back({sigma, average_fidelity(cfg, u, spec, n, threads)});
    }
    out.push_back(std::move(r));
  }
  return out;
}

/// t_g f_c of a dynamic sweep result.
inline double sweep_tgfc(const SweepResult& r) { return r.provenance.noise_template.fc * r.provenance.config.gate_time; }

/// Average fidelity against the static half-width delta, one result per schedule.
inline std::vector<SweepResult> run_static_sweep(const SystemConfig& cfg,
                                                 const std::vector<std::pair<std::string, ControlSchedule>>& schedules,
                                                 const std::vector<double>& delta_grid, std::size_t n,
                                                 std::uint64_t seed, unsigned threads = 0, int n_sources = 1) {
  std::vector<SweepResult> out;
  for (const auto& [name, u] : schedules) {
    SweepResult r;
    r.scenario = "static";
    r.abscissa_name = "delta";
    r.provenance = {cfg, NoiseSpec::uniform_static(0.0, seed, n_sources), name, seed, n};
    for (double delta : delta_grid) {
      r.points.push_back({delta, average_fidelity(cfg, u, NoiseSpec::uniform_static(delta, seed, n_sources), n, threads)});
    }
    out.push_back(std::move(r));
  }
  return out;
}

struct RobustnessOptions {
  RobustObjectiveSpec weighted = RobustObjectiveSpec::weighted_default();
  RobustObjectiveSpec smoothed = RobustObjectiveSpec::smoothed_default();
  int standard_starts = 200;
  int weighted_starts = 200;
  std::uint64_t standard_seed = 1;
  std::uint64_t weighted_seed = 2;
  std::uint64_t noise_seed = 3;
  /// Reuse a known standard solution instead of re-optimizing.
  std::optional<ControlSchedule> standard_schedule;
  double delta = 0.1;
  std::size_t n_realizations = 10000;
  std::vector<double> coupling_grid = default_coupling_grid();
  unsigned threads = 0;
};

struct RobustnessRow {
  std::string name;
  double nominal_fidelity = 0.0;
  EnsembleStats at_delta;
};

struct RobustnessComparison {
  OptimizationReport standard;
  OptimizationReport weighted;
  OptimizationReport smoothed;
  std::vector<std::vector<std::pair<double, double>>> curves;  // standard, weighted, smoothed
  std::vector<RobustnessRow> rows;                              // same order
  double delta = 0.1;
};

/// standard -> weighted (random starts) -> smoothed (warm-started from the
/// weighted optimum), then fidelity-vs-coupling curves and the static
/// comparison at `delta`.
inline RobustnessComparison run_robustness_comparison(const SystemConfig& cfg, const RobustnessOptions& opts) {
  RobustnessComparison out;
  out.delta = opts.delta;

  if (opts.standard_schedule) {
    out.standard.best_schedule = *opts.standard_schedule;
    out.standard.best_objective = objective_standard(cfg, *opts.standard_schedule);
    out.standard.best_fidelity_at_nominal = out.standard.best_objective;
    out.standard.n_starts = 0;
  } else {
    OptimizeOptions o;
    o.n_starts = opts.standard_starts;
    o.seed = opts.standard_seed;
    o.threads = opts.threads;
    out.standard = optimize(cfg, o);
  }

  OptimizeOptions w;
  w.kind = ObjectiveKind::Weighted;
  w.robust = opts.weighted;
  w.n_starts = opts.weighted_starts;
  w.seed = opts.weighted_seed;
  w.threads = opts.threads;
  out.weighted = optimize(cfg, w);

  OptimizeOptions s;
  s.kind = ObjectiveKind::Smoothed;
  s.robust = opts.smoothed;
  s.n_starts = 1;
  s.warm_start = out.weighted.best_schedule;
  s.threads = opts.threads;
  out.smoothed = optimize(cfg, s);

  const std::pair<const char*, const OptimizationReport*> named[] = {
      {"standard", &out.standard}, {"weighted", &out.weighted}, {"smoothed", &out.smoothed}};
  for (const auto& [name, report] : named) {
    out.curves.push_back(fidelity_vs_coupling(cfg, report->best_schedule, opts.coupling_grid));
    const NoiseSpec spec = NoiseSpec::uniform_static(opts.delta, opts.noise_seed);
    out.rows.push_back({name, report->best_fidelity_at_nominal,
                        average_fidelity(cfg, report->best_schedule, spec, opts.n_realizations, opts.threads)});
  }
  return out;
}

struct ConvergenceTable {
  std::vector<ConvergencePoint> points;
  double slope = 0.0;  // least-squares slope of log median distance vs log N
};

/// Least-squares slope of log(y) against log(x).
inline double log_log_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("log_log_slope: need >= 2 points");
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += std::log(x[i]);
    my += std::log(y[i]);
  }
  mx /= static_cast<double>(x.size());
  my /= static_cast<double>(x.size());
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = std::log(x[i]) - mx;
    sxy += dx * (std::log(y[i]) - my);
    sxx += dx * dx;
  }
  return sxy / sxx;
}

inline ConvergenceTable run_convergence_check(double sigma, double total_time, const std::vector<std::size_t>& n_list,
                                              std::size_t trials, const ConvergenceOptions& opts = {}) {
  ConvergenceTable t;
  t.points = propagator_convergence(sigma, total_time, n_list, trials, opts);
  std::vector<double> xs, ys;
  for (const auto& p : t.points) {
    if (p.median > 0.0) {
      xs.push_back(static_cast<double>(p.n_steps));
      ys.push_back(p.median);
    }
  }
  t.slope = xs.size() >= 2 ? log_log_slope(xs, ys) : 0.0;
  return t;
}

}  // namespace toffoli
