#pragma once

// Pulse design: the nominal fidelity objective, the band-weighted coupling
// interval objective, the derivative-smoothed interval objective, and a
// multistart projected L-BFGS maximizer over the 3 N_t amplitudes.

#include "toffoli/noise.hpp"
#include "toffoli/parallel.hpp"
#include "toffoli/propagation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace toffoli {

enum class ObjectiveKind { Standard, Weighted, Smoothed };

inline std::string to_string(ObjectiveKind k) {
  switch (k) {
    case ObjectiveKind::Standard: return "standard";
    case ObjectiveKind::Weighted: return "weighted";
    case ObjectiveKind::Smoothed: return "smoothed";
  }
  return "unknown";
}

inline ObjectiveKind objective_kind_from_string(const std::string& s) {
  if (s == "standard") return ObjectiveKind::Standard;
  if (s == "weighted") return ObjectiveKind::Weighted;
  if (s == "smoothed") return ObjectiveKind::Smoothed;
  throw std::invalid_argument("unknown objective kind '" + s + "'");
}

/// Parameters of the coupling-interval objectives. The interval is
/// J in [Jbar - delta_j, Jbar + delta_j] sampled at grid_points uniform nodes.
struct RobustObjectiveSpec {
  double delta_j = 0.15;
  double delta1 = 0.05;  // weight is 0 for |J/Jbar - 1| <= delta1
  double delta2 = 0.15;  // weight is 1 for delta1 < |J/Jbar - 1| <= delta2
  double alpha = 0.0;    // penalty on |dF/dJ|
  double beta = 0.0;     // coefficient of |d2F/dJ2|
  int grid_points = 31;

  static RobustObjectiveSpec weighted_default() { return {}; }

  static RobustObjectiveSpec smoothed_default() {
    RobustObjectiveSpec r;
    r.delta_j = 0.1;
    r.delta1 = 0.0;
    r.delta2 = 0.1;
    r.alpha = 0.001;
    r.beta = 0.003;
    return r;
  }

  void validate() const {
    if (!(delta_j > 0.0) || !std::isfinite(delta_j)) throw std::invalid_argument("RobustObjectiveSpec: delta_j must be > 0");
    if (grid_points < 3 || grid_points % 2 == 0) {
      throw std::invalid_argument("RobustObjectiveSpec: grid_points must be odd and >= 3");
    }
    if (alpha < 0.0 || beta < 0.0) throw std::invalid_argument("RobustObjectiveSpec: alpha and beta must be >= 0");
  }

  /// Node positions as multiples of Jbar, symmetric about 1 with 1 exactly on the grid.
  std::vector<double> nodes() const {
    std::vector<double> x(static_cast<std::size_t>(grid_points));
    const int half = grid_points / 2;
    for (int m = 0; m < grid_points; ++m) x[static_cast<std::size_t>(m)] = 1.0 + delta_j * (m - half) / half;
    return x;
  }

  double spacing() const { return 2.0 * delta_j / (grid_points - 1); }
};

/// Band weight w(J) at the node `offset` = m - (M-1)/2 grid steps from Jbar.
/// A zero-width band (delta1 == 0) excludes nothing.
inline double band_weight(const RobustObjectiveSpec& r, int offset) {
  const double dist = std::abs(offset) * r.spacing();
  const double eps = 1e-12;
  if (r.delta1 > 0.0 && dist <= r.delta1 + eps) return 0.0;
  return dist <= r.delta2 + eps ? 1.0 : 0.0;
}

/// Trapezoid weights of the grid (spacing included).
inline std::vector<double> trapezoid_weights(const RobustObjectiveSpec& r) {
  std::vector<double> w(static_cast<std::size_t>(r.grid_points), r.spacing());
  w.front() *= 0.5;
  w.back() *= 0.5;
  return w;
}

/// Noise-free fidelity with every coupling scaled by J/Jbar.
inline std::vector<std::pair<double, double>> fidelity_vs_coupling(const SystemConfig& cfg, const ControlSchedule& u,
                                                                   std::span<const double> j_over_jbar) {
  std::vector<std::pair<double, double>> curve;
  curve.reserve(j_over_jbar.size());
  for (double j : j_over_jbar) {
    if (!std::isfinite(j)) throw std::invalid_argument("fidelity_vs_coupling: grid value not finite");
    curve.emplace_back(j, fidelity_at(cfg, u, cfg.couplings.scaled(j)));
  }
  return curve;
}

namespace detail {

/// Every objective is a combination sum_m c_m F(u, J_m) whose coefficients
/// are locally constant in u; `combine` returns the value and fills c.
struct ObjectivePlan {
  std::vector<double> factors;  // J_m / Jbar
  std::function<double(std::span<const double>, std::span<double>)> combine;
};

inline ObjectivePlan make_plan(ObjectiveKind kind, const RobustObjectiveSpec& r) {
  ObjectivePlan plan;
  if (kind == ObjectiveKind::Standard) {
    plan.factors = {1.0};
    plan.combine = [](std::span<const double> f, std::span<double> c) {
      c[0] = 1.0;
      return f[0];
    };
    return plan;
  }

  r.validate();
  plan.factors = r.nodes();
  const std::vector<double> trap = trapezoid_weights(r);
  const int half = r.grid_points / 2;

  if (kind == ObjectiveKind::Weighted) {
    // Bands thinner than this carry no resolvable weight; treat them as empty.
    constexpr double kMinBandWidth = 1e-6;
    if (!(r.delta2 - r.delta1 >= kMinBandWidth)) {
      throw std::invalid_argument("objective_weighted: degenerate weight band (need delta2 - delta1 >= 1e-6)");
    }
    std::vector<double> coeff(trap.size());
    double norm = 0.0;
    for (std::size_t m = 0; m < trap.size(); ++m) {
      coeff[m] = trap[m] * band_weight(r, static_cast<int>(m) - half);
      norm += coeff[m];
    }
    if (!(norm > 0.0)) {
      throw std::invalid_argument("objective_weighted: weight function vanishes on every grid node (delta1 >= delta2?)");
    }
    for (double& c : coeff) c /= norm;
    plan.combine = [coeff](std::span<const double> f, std::span<double> c) {
      double value = 0.0;
      for (std::size_t m = 0; m < coeff.size(); ++m) {
        c[m] = coeff[m];
        value += coeff[m] * f[m];
      }
      return value;
    };
    return plan;
  }

  if (r.grid_points < 5) throw std::invalid_argument("objective_smoothed: grid_points must be >= 5");
  const double h = r.spacing();
  const double length = 2.0 * r.delta_j;
  const double alpha = r.alpha;
  const double beta = r.beta;
  plan.combine = [trap, h, length, alpha, beta](std::span<const double> f, std::span<double> c) {
    const std::size_t n = f.size();
    std::fill(c.begin(), c.end(), 0.0);
    double value = 0.0;
    const auto sign = [](double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); };
    for (std::size_t m = 0; m < n; ++m) {
      const double w = trap[m] / length;
      // First derivative: central inside, one-sided at the ends.
      std::size_t lo = m == 0 ? 0 : m - 1;
      std::size_t hi = m + 1 == n ? m : m + 1;
      const double d1 = (f[hi] - f[lo]) / (static_cast<double>(hi - lo) * h);
      // Second derivative: the nearest interior stencil.
      const std::size_t mid = std::clamp<std::size_t>(m, 1, n - 2);
      const double d2 = (f[mid + 1] - 2.0 * f[mid] + f[mid - 1]) / (h * h);
      value += w * (f[m] - alpha * std::abs(d1) + beta * std::abs(d2));

      c[m] += w;
      const double k1 = -w * alpha * sign(d1) / (static_cast<double>(hi - lo) * h);
      c[hi] += k1;
      c[lo] -= k1;
      const double k2 = w * beta * sign(d2) / (h * h);
      c[mid + 1] += k2;
      c[mid] -= 2.0 * k2;
      c[mid - 1] += k2;
    }
    return value;
  };
  return plan;
}

}  // namespace detail

/// F(u, Jbar).
inline double objective_standard(const SystemConfig& cfg, const ControlSchedule& u) {
  return gate_fidelity(evolve(cfg, u), cfg.target);
}

inline double evaluate_objective(const SystemConfig& cfg, const ControlSchedule& u, ObjectiveKind kind,
                                 const RobustObjectiveSpec& r) {
  if (kind == ObjectiveKind::Standard) return objective_standard(cfg, u);
  const detail::ObjectivePlan plan = detail::make_plan(kind, r);
  std::vector<double> f(plan.factors.size());
  std::vector<double> c(plan.factors.size());
  for (std::size_t m = 0; m < f.size(); ++m) f[m] = fidelity_at(cfg, u, cfg.couplings.scaled(plan.factors[m]));
  return plan.combine(f, c);
}

/// Normalized trapezoid average of F(u, J) w(J) over the coupling interval.
inline double objective_weighted(const SystemConfig& cfg, const ControlSchedule& u, const RobustObjectiveSpec& r) {
  return evaluate_objective(cfg, u, ObjectiveKind::Weighted, r);
}

/// Interval average of F - alpha |dF/dJ| + beta |d2F/dJ2| with w = 1.
inline double objective_smoothed(const SystemConfig& cfg, const ControlSchedule& u, const RobustObjectiveSpec& r) {
  return evaluate_objective(cfg, u, ObjectiveKind::Smoothed, r);
}

enum class GradientMethod { Analytic, FiniteDifference };

/// Objective value and gradient over the flattened amplitudes. The finite
/// difference route uses central differences with step 1e-6 u_max.
inline double objective_with_gradient(const SystemConfig& cfg, const ControlSchedule& u, ObjectiveKind kind,
                                      const RobustObjectiveSpec& r, std::span<double> grad,
                                      GradientMethod method = GradientMethod::Analytic) {
  const std::size_t dim = 3 * u.pulses.size();
  if (grad.size() != dim) throw std::invalid_argument("objective_with_gradient: gradient size mismatch");

  if (method == GradientMethod::FiniteDifference) {
    const double step = 1e-6 * cfg.u_max;
    std::vector<double> x = u.flat();
    for (std::size_t i = 0; i < dim; ++i) {
      const double saved = x[i];
      x[i] = saved + step;
      const double up = evaluate_objective(cfg, ControlSchedule::from_flat(x), kind, r);
      x[i] = saved - step;
      const double down = evaluate_objective(cfg, ControlSchedule::from_flat(x), kind, r);
      x[i] = saved;
      grad[i] = (up - down) / (2.0 * step);
    }
    return evaluate_objective(cfg, u, kind, r);
  }

  const detail::ObjectivePlan plan = detail::make_plan(kind, r);
  const std::size_t nodes = plan.factors.size();
  std::vector<double> f(nodes);
  std::vector<double> node_grads(nodes * dim);
  for (std::size_t m = 0; m < nodes; ++m) {
    f[m] = fidelity_with_gradient(cfg, u, cfg.couplings.scaled(plan.factors[m]),
                                  std::span<double>(node_grads).subspan(m * dim, dim));
  }
  std::vector<double> coeff(nodes);
  const double value = plan.combine(f, coeff);
  std::fill(grad.begin(), grad.end(), 0.0);
  for (std::size_t m = 0; m < nodes; ++m) {
    if (coeff[m] == 0.0) continue;
    for (std::size_t i = 0; i < dim; ++i) grad[i] += coeff[m] * node_grads[m * dim + i];
  }
  return value;
}

struct LocalSearchOptions {
  int max_iterations = 2000;
  double objective_tolerance = 1e-10;  // stop when one iteration improves less than this...
  double stationarity_tolerance = 1e-6;  // ...and the projected gradient is already this small
  double gradient_tolerance = 1e-8;    // stop when the projected gradient inf-norm is below this
  int memory = 10;
  bool record_history = false;
};

struct LocalSearchResult {
  std::vector<double> x;
  double value = 0.0;
  int iterations = 0;
  std::string stop_reason;
  std::vector<double> history;  // objective after each accepted step
};

/// Components of the gradient that can move x without leaving [lo, hi]
/// (ascent direction for a maximization).
inline std::vector<double> projected_gradient(std::span<const double> x, std::span<const double> g, double lo,
                                              double hi) {
  std::vector<double> pg(g.begin(), g.end());
  for (std::size_t i = 0; i < x.size(); ++i) {
    if ((x[i] <= lo && g[i] < 0.0) || (x[i] >= hi && g[i] > 0.0)) pg[i] = 0.0;
  }
  return pg;
}

/// Maximizes f over the box [lo, hi]^n by projected L-BFGS with a
/// backtracking Armijo search along the projection arc. Accepted iterates
/// never decrease the objective.
inline LocalSearchResult maximize_in_box(const std::function<double(std::span<const double>, std::span<double>)>& f,
                                         std::vector<double> x, double lo, double hi,
                                         const LocalSearchOptions& opts = {}) {
  const std::size_t n = x.size();
  const auto project = [&](std::vector<double>& v) {
    for (double& a : v) a = std::clamp(a, lo, hi);
  };
  const auto dot = [](std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
  };
  const auto inf_norm = [](std::span<const double> a) {
    double m = 0.0;
    for (double v : a) m = std::max(m, std::abs(v));
    return m;
  };

  project(x);
  std::vector<double> g(n);
  double value = f(x, g);

  struct Pair {
    std::vector<double> s, y;
    double rho;
  };
  std::deque<Pair> memory;

  LocalSearchResult result;
  if (opts.record_history) result.history.push_back(value);
  result.stop_reason = "max_iterations";

  std::vector<double> x_new(n), g_new(n), d(n), q(n);
  int it = 0;
  for (; it < opts.max_iterations; ++it) {
    const std::vector<double> pg = projected_gradient(x, g, lo, hi);
    if (inf_norm(pg) < opts.gradient_tolerance) {
      result.stop_reason = "gradient";
      break;
    }

    // Two-loop recursion on the ascent direction, restricted to free variables.
    q = pg;
    std::vector<double> a(memory.size());
    for (std::size_t k = memory.size(); k-- > 0;) {
      a[k] = memory[k].rho * dot(memory[k].s, q);
      for (std::size_t i = 0; i < n; ++i) q[i] -= a[k] * memory[k].y[i];
    }
    double gamma = 1.0;
    if (!memory.empty()) gamma = dot(memory.back().s, memory.back().y) / dot(memory.back().y, memory.back().y);
    for (std::size_t i = 0; i < n; ++i) q[i] *= gamma;
    for (std::size_t k = 0; k < memory.size(); ++k) {
      const double b = memory[k].rho * dot(memory[k].y, q);
      for (std::size_t i = 0; i < n; ++i) q[i] += (a[k] - b) * memory[k].s[i];
    }
    for (std::size_t i = 0; i < n; ++i) d[i] = pg[i] == 0.0 ? 0.0 : q[i];
    if (dot(d, pg) <= 0.0) {
      memory.clear();
      d = pg;
    }

    double step = 1.0;
    if (memory.empty()) step = std::min(1.0, 0.1 * (hi - lo) / std::max(inf_norm(d), 1e-300));

    bool accepted = false;
    double value_new = value;
    for (int ls = 0; ls < 60; ++ls) {
      for (std::size_t i = 0; i < n; ++i) x_new[i] = x[i] + step * d[i];
      project(x_new);
      double moved = 0.0;
      for (std::size_t i = 0; i < n; ++i) moved += g[i] * (x_new[i] - x[i]);
      value_new = f(x_new, g_new);
      if (value_new > value && value_new >= value + 1e-4 * moved) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      result.stop_reason = "line_search";
      break;
    }

    Pair p{std::vector<double>(n), std::vector<double>(n), 0.0};
    for (std::size_t i = 0; i < n; ++i) {
      p.s[i] = x_new[i] - x[i];
      p.y[i] = g[i] - g_new[i];  // curvature of -f
    }
    const double sy = dot(p.s, p.y);
    if (sy > 1e-12 * std::sqrt(dot(p.s, p.s) * dot(p.y, p.y))) {
      p.rho = 1.0 / sy;
      memory.push_back(std::move(p));
      if (static_cast<int>(memory.size()) > opts.memory) memory.pop_front();
    }

    const double improvement = value_new - value;
    x.swap(x_new);
    g.swap(g_new);
    value = value_new;
    if (opts.record_history) result.history.push_back(value);
    if (improvement < opts.objective_tolerance &&
        inf_norm(projected_gradient(x, g, lo, hi)) <= opts.stationarity_tolerance) {
      result.stop_reason = "objective";
      ++it;
      break;
    }
  }
  result.iterations = it;
  result.x = std::move(x);
  result.value = value;
  return result;
}

struct OptimizeOptions {
  ObjectiveKind kind = ObjectiveKind::Standard;
  RobustObjectiveSpec robust{};
  int n_starts = 1;
  std::uint64_t seed = 0;
  std::optional<ControlSchedule> warm_start;
  GradientMethod gradient = GradientMethod::Analytic;
  LocalSearchOptions local{};
  unsigned threads = 0;
};

struct OptimizationReport {
  ControlSchedule best_schedule;
  double best_objective = 0.0;
  double best_fidelity_at_nominal = 0.0;
  int n_starts = 0;
  std::size_t best_start = 0;
  std::vector<double> start_objectives;
  std::uint64_t seed = 0;
  ObjectiveKind kind = ObjectiveKind::Standard;
};

/// Initial point of start `s`: the warm start for s == 0 if given, otherwise
/// uniform in [-u_max, u_max]^(3 N_t) from the (seed, s) stream.
inline ControlSchedule initial_guess(const SystemConfig& cfg, std::uint64_t seed, std::size_t s,
                                     const std::optional<ControlSchedule>& warm_start) {
  if (s == 0 && warm_start) return *warm_start;
  auto engine = detail::realization_engine(seed, s);
  std::uniform_real_distribution<double> dist(-cfg.u_max, cfg.u_max);
  std::vector<double> x(3 * static_cast<std::size_t>(cfg.n_pulses));
  for (double& v : x) v = dist(engine);
  return ControlSchedule::from_flat(x);
}

/// Multistart bounded maximization. Starts are independent and reduced in
/// start order (lowest index wins ties), so the report does not depend on
/// the thread count.
inline OptimizationReport optimize(const SystemConfig& cfg, const OptimizeOptions& opts) {
  cfg.validate();
  if (opts.n_starts < 1) throw std::invalid_argument("optimize: n_starts must be >= 1");
  if (opts.kind != ObjectiveKind::Standard) {
    (void)detail::make_plan(opts.kind, opts.robust);  // surfaces spec errors before any work
  }
  if (opts.warm_start) {
    if (opts.warm_start->n_pulses() != cfg.n_pulses) throw std::invalid_argument("optimize: warm start has wrong size");
  }

  const auto n_starts = static_cast<std::size_t>(opts.n_starts);
  std::vector<LocalSearchResult> results(n_starts);
  parallel_for(n_starts, opts.threads, [&](std::size_t s) {
    const ControlSchedule start = initial_guess(cfg, opts.seed, s, opts.warm_start);
    const auto fn = [&](std::span<const double> x, std::span<double> g) {
      return objective_with_gradient(cfg, ControlSchedule::from_flat(x), opts.kind, opts.robust, g, opts.gradient);
    };
    results[s] = maximize_in_box(fn, start.flat(), -cfg.u_max, cfg.u_max, opts.local);
  });

  OptimizationReport report;
  report.n_starts = opts.n_starts;
  report.seed = opts.seed;
  report.kind = opts.kind;
  report.start_objectives.reserve(n_starts);
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t s = 0; s < n_starts; ++s) {
    report.start_objectives.push_back(results[s].value);
    if (results[s].value > best) {
      best = results[s].value;
      report.best_start = s;
    }
  }
  report.best_objective = best;
  report.best_schedule = ControlSchedule::from_flat(results[report.best_start].x);
  report.best_fidelity_at_nominal = objective_standard(cfg, report.best_schedule);
  return report;
}

}  // namespace toffoli
