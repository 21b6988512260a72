#pragma once

// Stochastic coupling models and Monte Carlo fidelity averages.
//
// Dynamic noise: J_ij(t) = Jbar_ij (1 + eps(t)) with eps piecewise constant
// on windows of length tau_c = 1/f_c, iid Normal(0, sigma^2) per window.
// Static noise: one eps ~ Uniform[-delta, delta] held for the whole gate.

#include "toffoli/parallel.hpp"
#include "toffoli/propagation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace toffoli {

enum class NoiseMode { Dynamic, Static };

struct NoiseSpec {
  NoiseMode mode = NoiseMode::Dynamic;
  double sigma = 0.0;   // dynamic: std-dev of eps
  double fc = 1.0;      // dynamic: switching frequency in units of Jbar
  double delta = 0.0;   // static: half-width of eps
  int n_sources = 1;    // 1, 3 or 6 independent eps streams
  std::uint64_t seed = 0;

  static NoiseSpec dynamic(double sigma, double tgfc, double gate_time, std::uint64_t seed, int n_sources = 1) {
    NoiseSpec s;
    s.mode = NoiseMode::Dynamic;
    s.sigma = sigma;
    s.fc = tgfc / gate_time;
    s.n_sources = n_sources;
    s.seed = seed;
    return s;
  }

  static NoiseSpec uniform_static(double delta, std::uint64_t seed, int n_sources = 1) {
    NoiseSpec s;
    s.mode = NoiseMode::Static;
    s.delta = delta;
    s.n_sources = n_sources;
    s.seed = seed;
    return s;
  }

  void validate() const {
    if (n_sources != 1 && n_sources != 3 && n_sources != 6) {
      throw std::invalid_argument("NoiseSpec: n_sources must be 1, 3 or 6");
    }
    if (mode == NoiseMode::Dynamic) {
      if (!std::isfinite(sigma) || sigma < 0.0) throw std::invalid_argument("NoiseSpec: sigma must be finite and >= 0");
      if (!std::isfinite(fc) || !(fc > 0.0)) throw std::invalid_argument("NoiseSpec: fc must be finite and > 0");
    } else {
      if (!std::isfinite(delta) || delta < 0.0) throw std::invalid_argument("NoiseSpec: delta must be finite and >= 0");
    }
  }
};

/// Mean and standard error of the mean over n realizations.
struct EnsembleStats {
  double mean = 0.0;
  double std_error = 0.0;
  std::size_t n_realizations = 0;
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Independent stream for one realization, a pure function of (seed, index).
inline std::mt19937_64 realization_engine(std::uint64_t seed, std::uint64_t index) {
  const std::uint64_t key = splitmix64(splitmix64(seed) ^ splitmix64(index + 0x632be59bd9b4e019ULL));
  std::seed_seq seq{static_cast<std::uint32_t>(key), static_cast<std::uint32_t>(key >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
  return std::mt19937_64(seq);
}

/// Applies one draw per source to the reference couplings.
inline Couplings perturb(const Couplings& ref, int n_sources, const std::array<double, 6>& eps) {
  Couplings c = ref;
  for (std::size_t p = 0; p < 3; ++p) {
    switch (n_sources) {
      case 1:
        c.x[p] *= 1.0 + eps[0];
        c.y[p] *= 1.0 + eps[0];
        break;
      case 3:
        c.x[p] *= 1.0 + eps[p];
        c.y[p] *= 1.0 + eps[p];
        break;
      default:
        c.x[p] *= 1.0 + eps[p];
        c.y[p] *= 1.0 + eps[3 + p];
        break;
    }
  }
  return c;
}

}  // namespace detail

/// Number of noise windows covering [0, t_g]; a trailing window shorter than
/// 1e-9 tau_c is treated as rounding and dropped.
inline std::size_t noise_segment_count(double gate_time, double fc) {
  const double windows = gate_time * fc;
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(windows - 1e-9)));
}

/// Realization `index` of the coupling process. The draw depends only on
/// (spec.seed, index), so any realization can be replayed on its own.
inline CouplingTrajectory sample_trajectory(const NoiseSpec& spec, const SystemConfig& cfg, std::uint64_t index) {
  spec.validate();
  cfg.validate();
  auto engine = detail::realization_engine(spec.seed, index);
  const double tg = cfg.gate_time;

  CouplingTrajectory traj;
  std::array<double, 6> eps{};
  const auto n_src = static_cast<std::size_t>(spec.n_sources);

  if (spec.mode == NoiseMode::Static) {
    std::uniform_real_distribution<double> dist(-spec.delta, spec.delta);
    for (std::size_t s = 0; s < n_src; ++s) eps[s] = spec.delta == 0.0 ? 0.0 : dist(engine);
    traj.boundaries = {0.0, tg};
    traj.values = {detail::perturb(cfg.couplings, spec.n_sources, eps)};
    return traj;
  }

  const std::size_t segments = noise_segment_count(tg, spec.fc);
  const double tau_c = 1.0 / spec.fc;
  std::normal_distribution<double> dist(0.0, 1.0);
  traj.boundaries.reserve(segments + 1);
  traj.values.reserve(segments);
  for (std::size_t k = 0; k < segments; ++k) {
    traj.boundaries.push_back(static_cast<double>(k) * tau_c);
    for (std::size_t s = 0; s < n_src; ++s) eps[s] = spec.sigma * dist(engine);
    traj.values.push_back(detail::perturb(cfg.couplings, spec.n_sources, eps));
  }
  traj.boundaries.push_back(tg);
  return traj;
}

/// Power spectral density of the telegraph-like process:
/// S(w) = sigma^2 tau_c / sqrt(2 pi) * sinc^2(w tau_c / 2).
inline double psd(double omega, double sigma, double tau_c) {
  if (!(tau_c > 0.0)) throw std::invalid_argument("psd: tau_c must be > 0");
  const double x = 0.5 * omega * tau_c;
  const double sinc = x == 0.0 ? 1.0 : std::sin(x) / x;
  return sigma * sigma * tau_c / std::sqrt(2.0 * std::numbers::pi) * sinc * sinc;
}

/// Autocorrelation <eps(t) eps(t + tau)> = sigma^2 (1 - |tau| / tau_c) on
/// |tau| <= tau_c, zero outside (stationary, randomly phased grid).
inline double autocorrelation(double tau, double sigma, double tau_c) {
  const double a = std::abs(tau);
  return a >= tau_c ? 0.0 : sigma * sigma * (1.0 - a / tau_c);
}

/// Fixed-order mean and standard error.
inline EnsembleStats summarize(std::span<const double> values) {
  EnsembleStats s;
  s.n_realizations = values.size();
  if (values.empty()) return s;
  double sum = 0.0;
  for (double v : values) sum += v;
  s.mean = sum / static_cast<double>(values.size());
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    const double var = ss / static_cast<double>(values.size() - 1);
    s.std_error = std::sqrt(var / static_cast<double>(values.size()));
  }
  return s;
}

/// Monte Carlo average of the gate fidelity over n realizations 0..n-1.
/// Bit-identical for a fixed (spec, n) at any thread count.
inline EnsembleStats average_fidelity(const SystemConfig& cfg, const ControlSchedule& u, const NoiseSpec& spec,
                                      std::size_t n, unsigned threads = 0) {
  if (n == 0) throw std::invalid_argument("average_fidelity: n must be positive");
  spec.validate();
  cfg.validate();
  std::vector<double> fidelities(n);
  parallel_for(n, threads, [&](std::size_t r) {
    const CouplingTrajectory traj = sample_trajectory(spec, cfg, r);
    fidelities[r] = gate_fidelity(evolve(cfg, u, traj), cfg.target);
  });
  return summarize(fidelities);
}

/// Distance statistics for one step count N.
struct ConvergencePoint {
  std::size_t n_steps = 0;
  double median = 0.0;
  double p90 = 0.0;
};

struct ConvergenceOptions {
  Couplings couplings{};
  /// Representative control term added to the drift; zero by default.
  Operator control = Operator::Zero();
  std::uint64_t seed = 0;
  unsigned threads = 0;
};

/// For each N: U_N(T) = prod_k exp(-i (Hbar + eps_k Hbar0) T/N) with
/// eps_k ~ Normal(0, sigma^2), compared in Frobenius norm to exp(-i Hbar T).
inline std::vector<ConvergencePoint> propagator_convergence(double sigma, double total_time,
                                                            std::span<const std::size_t> n_steps_list,
                                                            std::size_t n_trials,
                                                            const ConvergenceOptions& opts = {}) {
  if (!(total_time > 0.0)) throw std::invalid_argument("propagator_convergence: T must be > 0");
  if (n_trials == 0) throw std::invalid_argument("propagator_convergence: n_trials must be positive");
  const Operator h0 = drift_hamiltonian(opts.couplings);
  const Operator hbar = h0 + opts.control;
  const Operator reference = expm_propagator(hbar, total_time);

  std::vector<ConvergencePoint> out;
  for (std::size_t list_index = 0; list_index < n_steps_list.size(); ++list_index) {
    const std::size_t steps = n_steps_list[list_index];
    if (steps == 0) throw std::invalid_argument("propagator_convergence: N must be >= 1");
    const double tau = total_time / static_cast<double>(steps);
    std::vector<double> dist(n_trials);
    parallel_for(n_trials, opts.threads, [&](std::size_t trial) {
      auto engine = detail::realization_engine(opts.seed ^ detail::splitmix64(steps), trial);
      std::normal_distribution<double> normal(0.0, 1.0);
      Operator u = Operator::Identity();
      for (std::size_t k = 0; k < steps; ++k) {
        const double eps = sigma * normal(engine);
        u = expm_propagator(Operator(hbar + eps * h0), tau) * u;
      }
      dist[trial] = (u - reference).norm();
    });
    const auto quantile = [&](double q) {
      std::vector<double> sorted = dist;
      std::sort(sorted.begin(), sorted.end());
      const double pos = q * static_cast<double>(sorted.size() - 1);
      const auto lo = static_cast<std::size_t>(std::floor(pos));
      const auto hi = std::min(lo + 1, sorted.size() - 1);
      return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
    };
    out.push_back({steps, quantile(0.5), quantile(0.9)});
  }
  return out;
}

}  // namespace toffoli
