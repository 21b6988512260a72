#pragma once

// Piecewise-constant propagation of the controlled XY chain and the
// trace fidelity against a target gate.

#include "toffoli/hamiltonian.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace toffoli {

/// The three-qubit Toffoli gate: identity on |000>..|101>, swaps |110> and |111>.
inline Operator toffoli_target() {
  Operator u = Operator::Identity();
  u(6, 6) = 0.0;
  u(7, 7) = 0.0;
  u(6, 7) = 1.0;
  u(7, 6) = 1.0;
  return u;
}

/// Deterministic problem instance. Defaults are the 140 ns Toffoli
/// realization: t_g = 4.18, N_t = 20, u_max = 130/30, J12 = J23 = 6 J13 = 1.
struct SystemConfig {
  Couplings couplings{};
  double gate_time = 4.18;
  int n_pulses = 20;
  double u_max = 13.0 / 3.0;
  Operator target = toffoli_target();

  double interval() const { return gate_time / n_pulses; }

  void validate() const {
    if (n_pulses <= 0 || n_pulses % 2 != 0) {
      throw std::invalid_argument("SystemConfig: n_pulses must be a positive even number, got " +
                                  std::to_string(n_pulses));
    }
    if (!(gate_time > 0.0) || !std::isfinite(gate_time)) {
      throw std::invalid_argument("SystemConfig: gate_time must be positive and finite");
    }
    if (!(u_max > 0.0) || !std::isfinite(u_max)) {
      throw std::invalid_argument("SystemConfig: u_max must be positive and finite");
    }
    if (!couplings.is_finite()) throw std::invalid_argument("SystemConfig: couplings not finite");
  }
};

/// Drive axis of 0-based control interval `n`: x, y, x, y, ...
inline Axis pulse_axis(std::size_t n) { return n % 2 == 0 ? Axis::X : Axis::Y; }

/// N_t rows of three amplitudes, one per qubit. Row n drives `pulse_axis(n)`.
struct ControlSchedule {
  std::vector<std::array<double, 3>> pulses;

  static ControlSchedule zeros(int n_pulses) {
    return ControlSchedule{std::vector<std::array<double, 3>>(static_cast<std::size_t>(n_pulses), {0.0, 0.0, 0.0})};
  }

  /// Row-major flat view [u_1^(1), u_1^(2), u_1^(3), u_2^(1), ...].
  static ControlSchedule from_flat(std::span<const double> flat) {
    if (flat.size() % 3 != 0) throw std::invalid_argument("ControlSchedule: flat size not a multiple of 3");
    ControlSchedule s;
    s.pulses.resize(flat.size() / 3);
    for (std::size_t n = 0; n < s.pulses.size(); ++n) {
      for (std::size_t i = 0; i < 3; ++i) s.pulses[n][i] = flat[3 * n + i];
    }
    return s;
  }

  std::vector<double> flat() const {
    std::vector<double> out;
    out.reserve(3 * pulses.size());
    for (const auto& row : pulses) out.insert(out.end(), row.begin(), row.end());
    return out;
  }

  int n_pulses() const { return static_cast<int>(pulses.size()); }

  double max_abs() const {
    double m = 0.0;
    for (const auto& row : pulses)
      for (double a : row) m = std::max(m, std::abs(a));
    return m;
  }

  /// Index of the first row with an amplitude outside [-u_max, u_max] or not finite.
  std::optional<std::size_t> first_violation(double u_max) const {
    for (std::size_t n = 0; n < pulses.size(); ++n) {
      for (double a : pulses[n]) {
        if (!std::isfinite(a) || std::abs(a) > u_max) return n;
      }
    }
    return std::nullopt;
  }

  friend bool operator==(const ControlSchedule&, const ControlSchedule&) = default;
};

/// One realization of J(t): segment k spans [boundaries[k], boundaries[k+1])
/// and carries values[k].
struct CouplingTrajectory {
  std::vector<double> boundaries;
  std::vector<Couplings> values;

  std::size_t size() const { return values.size(); }

  static CouplingTrajectory constant(const Couplings& c, double gate_time) {
    return CouplingTrajectory{{0.0, gate_time}, {c}};
  }
};

/// Eigendecomposition of a Hermitian generator, kept for reuse by gradients.
template <typename Matrix>
struct Spectrum {
  Matrix vectors;
  Eigen::Matrix<double, Matrix::RowsAtCompileTime, 1> values;
};

template <typename Derived>
Spectrum<typename Derived::PlainObject> hermitian_spectrum(const Eigen::MatrixBase<Derived>& h) {
  using Plain = typename Derived::PlainObject;
  const double scale = 1.0 + h.cwiseAbs().maxCoeff();
  if (h.rows() != h.cols()) throw std::invalid_argument("expm_propagator: matrix not square");
  if (!h.allFinite()) throw std::domain_error("expm_propagator: non-finite generator");
  if (hermiticity_defect(h) > 1e-10 * scale) {
    throw std::domain_error("expm_propagator: generator is not Hermitian");
  }
  Eigen::SelfAdjointEigenSolver<Plain> solver(h.derived());
  if (solver.info() != Eigen::Success) {
    throw std::domain_error("expm_propagator: eigendecomposition failed");
  }
  return {solver.eigenvectors(), solver.eigenvalues()};
}

template <typename Matrix>
Matrix propagator_from_spectrum(const Spectrum<Matrix>& s, double dt) {
  const auto phases = s.values.unaryExpr([dt](double l) { return std::polar(1.0, -l * dt); });
  return s.vectors * phases.asDiagonal() * s.vectors.adjoint();
}

/// exp(-i h dt) for Hermitian h, assembled from an orthonormal eigenbasis so
/// the result is unitary to rounding.
template <typename Derived>
typename Derived::PlainObject expm_propagator(const Eigen::MatrixBase<Derived>& h, double dt) {
  if (!std::isfinite(dt)) throw std::invalid_argument("expm_propagator: dt not finite");
  return propagator_from_spectrum(hermitian_spectrum(h), dt);
}

/// |Tr(U^dagger target)| / dim, clamped to [0, 1].
template <typename A, typename B>
double gate_fidelity(const Eigen::MatrixBase<A>& u, const Eigen::MatrixBase<B>& target) {
  if (u.rows() != target.rows() || u.cols() != target.cols() || u.rows() != u.cols()) {
    throw std::invalid_argument("gate_fidelity: dimension mismatch");
  }
  const Complex overlap = u.conjugate().cwiseProduct(target).sum();
  return std::min(1.0, std::abs(overlap) / static_cast<double>(u.rows()));
}

template <typename Derived>
double unitarity_defect(const Eigen::MatrixBase<Derived>& u) {
  using Plain = typename Derived::PlainObject;
  return (u.adjoint() * u - Plain::Identity(u.rows(), u.cols())).norm();
}

/// Hamiltonian of control interval n under couplings c.
inline Operator interval_hamiltonian(const Couplings& c, const ControlSchedule& u, std::size_t n) {
  return drift_hamiltonian(c) + control_hamiltonian(u.pulses[n], pulse_axis(n));
}

namespace detail {

inline void check_schedule(const SystemConfig& cfg, const ControlSchedule& u) {
  if (u.n_pulses() != cfg.n_pulses) {
    throw std::invalid_argument("evolve: schedule has " + std::to_string(u.n_pulses()) +
                                " rows, config expects " + std::to_string(cfg.n_pulses));
  }
}

}  // namespace detail

/// Total propagator U(t_g). The time axis is split at the union of the
/// control boundaries {nT} and the trajectory boundaries; the Hamiltonian is
/// constant on every resulting segment. Without a trajectory the couplings
/// are cfg.couplings throughout.
inline Operator evolve(const SystemConfig& cfg, const ControlSchedule& u,
                       const CouplingTrajectory* traj = nullptr) {
  cfg.validate();
  detail::check_schedule(cfg, u);
  const double tg = cfg.gate_time;
  const double T = cfg.interval();
  const double tol = 1e-12 * tg;

  if (traj == nullptr) {
    const Operator h0 = drift_hamiltonian(cfg.couplings);
    Operator total = Operator::Identity();
    for (std::size_t n = 0; n < u.pulses.size(); ++n) {
      const Operator h = h0 + control_hamiltonian(u.pulses[n], pulse_axis(n));
      total = expm_propagator(h, T) * total;
    }
    return total;
  }

  const auto& nb = traj->boundaries;
  if (nb.size() < 2 || traj->values.size() + 1 != nb.size()) {
    throw std::invalid_argument("evolve: malformed coupling trajectory");
  }
  if (std::abs(nb.front()) > tol || nb.back() < tg - tol) {
    throw std::invalid_argument("evolve: coupling trajectory does not cover [0, t_g]");
  }
  for (std::size_t k = 1; k < nb.size(); ++k) {
    if (!(nb[k] > nb[k - 1])) throw std::invalid_argument("evolve: trajectory boundaries not ascending");
  }

  std::vector<Operator> drift(traj->values.size());
  for (std::size_t k = 0; k < drift.size(); ++k) drift[k] = drift_hamiltonian(traj->values[k]);

  const auto n_ctrl = static_cast<std::size_t>(cfg.n_pulses);
  const auto ctrl_edge = [&](std::size_t c) { return c == n_ctrl ? tg : static_cast<double>(c) * T; };

  Operator total = Operator::Identity();
  std::size_t c = 0;  // current control interval
  std::size_t k = 0;  // current noise segment
  double t = 0.0;
  while (c < n_ctrl) {
    const double next_ctrl = ctrl_edge(c + 1);
    const double next_noise = k + 1 < nb.size() - 1 ? nb[k + 1] : tg;
    const double next = std::min(next_ctrl, next_noise);
    const double dt = next - t;
    if (dt > 0.0) {
      const Operator h = drift[k] + control_hamiltonian(u.pulses[c], pulse_axis(c));
      total = expm_propagator(h, dt) * total;
    }
    t = next;
    if (next_ctrl - t <= tol) ++c;
    if (next_noise - t <= tol && k + 1 < drift.size()) ++k;
  }
  return total;
}

inline Operator evolve(const SystemConfig& cfg, const ControlSchedule& u, const CouplingTrajectory& traj) {
  return evolve(cfg, u, &traj);
}

/// Noise-free fidelity of u under the given couplings.
inline double fidelity_at(const SystemConfig& cfg, const ControlSchedule& u, const Couplings& c) {
  SystemConfig local = cfg;
  local.couplings = c;
  return gate_fidelity(evolve(local, u), cfg.target);
}

/// Fidelity and its exact gradient with respect to the row-major flattened
/// amplitudes, for constant couplings c. Derivatives of each interval
/// propagator use the divided-difference (Daleckii-Krein) formula in the
/// eigenbasis of the interval Hamiltonian.
inline double fidelity_with_gradient(const SystemConfig& cfg, const ControlSchedule& u, const Couplings& c,
                                     std::span<double> grad) {
  cfg.validate();
  detail::check_schedule(cfg, u);
  const auto n = static_cast<std::size_t>(cfg.n_pulses);
  if (grad.size() != 3 * n) throw std::invalid_argument("fidelity_with_gradient: gradient size mismatch");
  const double T = cfg.interval();
  const Operator h0 = drift_hamiltonian(c);

  std::vector<Spectrum<Operator>> spectra(n);
  std::vector<Operator> steps(n);
  std::vector<Operator> prefix(n + 1);  // prefix[k] = U_k ... U_1
  prefix[0] = Operator::Identity();
  for (std::size_t k = 0; k < n; ++k) {
    spectra[k] = hermitian_spectrum(h0 + control_hamiltonian(u.pulses[k], pulse_axis(k)));
    steps[k] = propagator_from_spectrum(spectra[k], T);
    prefix[k + 1] = steps[k] * prefix[k];
  }

  const Complex z = cfg.target.conjugate().cwiseProduct(prefix[n]).sum();  // Tr(target^dagger U)
  const double abs_z = std::abs(z);
  const double fidelity = std::min(1.0, abs_z / kDim);
  if (abs_z == 0.0) {
    std::fill(grad.begin(), grad.end(), 0.0);
    return fidelity;
  }

  Operator back = cfg.target.adjoint();  // target^dagger U_N ... U_{k+1}
  for (std::size_t k = n; k-- > 0;) {
    const auto& s = spectra[k];
    // dz/du = Tr(B dU_k) with B = P_{k-1} target^dagger S_{k+1}.
    const Operator b_eig = s.vectors.adjoint() * (prefix[k] * back) * s.vectors;
    Operator kernel;
    for (int j = 0; j < kDim; ++j) {
      for (int l = 0; l < kDim; ++l) {
        const double mid = 0.5 * (s.values(j) + s.values(l));
        const double half_gap = 0.5 * T * (s.values(j) - s.values(l));
        const double sinc = std::abs(half_gap) < 1e-8 ? 1.0 - half_gap * half_gap / 6.0 : std::sin(half_gap) / half_gap;
        const Complex g = Complex{0.0, -T} * std::polar(1.0, -T * mid) * sinc;
        kernel(j, l) = b_eig(l, j) * g;
      }
    }
    const Axis axis = pulse_axis(k);
    for (int q = 1; q <= kQubits; ++q) {
      const Operator sigma_eig = s.vectors.adjoint() * detail::cached_pauli(q, axis) * s.vectors;
      const Complex dz = kernel.cwiseProduct(sigma_eig).sum();
      grad[3 * k + static_cast<std::size_t>(q - 1)] = (std::conj(z) * dz).real() / (kDim * abs_z);
    }
    back = back * steps[k];
  }
  return fidelity;
}

}  // namespace toffoli
