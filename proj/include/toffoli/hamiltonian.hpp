#pragma once

// Operators of the three-qubit XY chain: embedded Pauli matrices, the
// flip-flop drift Hamiltonian and the Zeeman-like control Hamiltonian.
//
// Units: hbar = 1 and the reference coupling Jbar = 1, so couplings are
// ratios to Jbar and times are measured in 1/Jbar.
//
// Basis convention: index b in {0..7} encodes |q1 q2 q3> with q1 the most
// significant bit, i.e. qubit 1 is the leftmost Kronecker factor.

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <stdexcept>

namespace toffoli {

using Complex = std::complex<double>;

inline constexpr int kQubits = 3;
inline constexpr int kDim = 8;

/// Dense operator on the three-qubit space.
using Operator = Eigen::Matrix<Complex, kDim, kDim>;
/// Dense operator of runtime dimension, used by the dimension-generic helpers.
using DynamicOperator = Eigen::MatrixXcd;

enum class Axis { X, Y, Z };

/// Unordered qubit pairs in the fixed order (1,2), (1,3), (2,3).
inline constexpr std::array<std::array<int, 2>, 3> kPairs{{{1, 2}, {1, 3}, {2, 3}}};

/// Interqubit couplings in units of Jbar. `x` multiplies sigma_x sigma_x and
/// `y` multiplies sigma_y sigma_y for each pair in `kPairs` order; the
/// isotropic model has x == y.
struct Couplings {
  std::array<double, 3> x{1.0, 1.0 / 6.0, 1.0};
  std::array<double, 3> y{1.0, 1.0 / 6.0, 1.0};

  static Couplings isotropic(double j12, double j13, double j23) {
    return Couplings{{j12, j13, j23}, {j12, j13, j23}};
  }
  static Couplings anisotropic(const std::array<double, 3>& jx, const std::array<double, 3>& jy) {
    return Couplings{jx, jy};
  }
  static Couplings zero() { return isotropic(0.0, 0.0, 0.0); }

  double j12() const { return x[0]; }
  double j13() const { return x[1]; }
  double j23() const { return x[2]; }

  bool is_isotropic() const { return x == y; }

  bool is_finite() const {
    for (std::size_t k = 0; k < 3; ++k) {
      if (!std::isfinite(x[k]) || !std::isfinite(y[k])) return false;
    }
    return true;
  }

  /// Ratio-preserving rescale, J_ij -> factor * J_ij.
  Couplings scaled(double factor) const {
    Couplings c = *this;
    for (std::size_t k = 0; k < 3; ++k) {
      c.x[k] *= factor;
      c.y[k] *= factor;
    }
    return c;
  }

  friend bool operator==(const Couplings&, const Couplings&) = default;
};

namespace detail {

inline Eigen::Matrix2cd pauli_2x2(Axis axis) {
  const Complex i{0.0, 1.0};
  Eigen::Matrix2cd s;
  switch (axis) {
    case Axis::X: s << 0.0, 1.0, 1.0, 0.0; break;
    case Axis::Y: s << 0.0, -i, i, 0.0; break;
    case Axis::Z: s << 1.0, 0.0, 0.0, -1.0; break;
  }
  return s;
}

inline DynamicOperator kron(const DynamicOperator& a, const DynamicOperator& b) {
  DynamicOperator out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index r = 0; r < a.rows(); ++r) {
    for (Eigen::Index c = 0; c < a.cols(); ++c) {
      out.block(r * b.rows(), c * b.cols(), b.rows(), b.cols()) = a(r, c) * b;
    }
  }
  return out;
}

}  // namespace detail

/// I (x) ... (x) sigma_axis (x) ... (x) I on an n-qubit register, with the
/// nontrivial factor at 1-based position `qubit` counted from the left.
inline DynamicOperator embedded_pauli(int n_qubits, int qubit, Axis axis) {
  if (n_qubits < 1) throw std::invalid_argument("embedded_pauli: n_qubits must be >= 1");
  if (qubit < 1 || qubit > n_qubits) {
    throw std::invalid_argument("embedded_pauli: qubit index out of range");
  }
  DynamicOperator out = DynamicOperator::Identity(1, 1);
  for (int q = 1; q <= n_qubits; ++q) {
    const DynamicOperator factor =
        q == qubit ? DynamicOperator(detail::pauli_2x2(axis)) : DynamicOperator::Identity(2, 2);
    out = detail::kron(out, factor);
  }
  return out;
}

/// Pauli operator on qubit 1, 2 or 3 of the three-qubit register.
inline Operator pauli_operator(int qubit, Axis axis) {
  if (axis != Axis::X && axis != Axis::Y && axis != Axis::Z) {
    throw std::invalid_argument("pauli_operator: invalid axis");
  }
  return embedded_pauli(kQubits, qubit, axis);
}

namespace detail {

// Built once; indexed [qubit-1][axis].
struct PauliTable {
  std::array<std::array<Operator, 3>, kQubits> ops;
  PauliTable() {
    for (int q = 1; q <= kQubits; ++q) {
      ops[q - 1][0] = pauli_operator(q, Axis::X);
      ops[q - 1][1] = pauli_operator(q, Axis::Y);
      ops[q - 1][2] = pauli_operator(q, Axis::Z);
    }
  }
};

inline const PauliTable& pauli_table() {
  static const PauliTable table;
  return table;
}

inline const Operator& cached_pauli(int qubit, Axis axis) {
  return pauli_table().ops[qubit - 1][static_cast<int>(axis)];
}

}  // namespace detail

/// sigma_ix sigma_jx + sigma_iy sigma_jy for pair index `p` in `kPairs`, with
/// separate x and y weights.
inline Operator pair_flip_flop(std::size_t p, double jx, double jy) {
  const int i = kPairs[p][0];
  const int j = kPairs[p][1];
  return jx * (detail::cached_pauli(i, Axis::X) * detail::cached_pauli(j, Axis::X)) +
         jy * (detail::cached_pauli(i, Axis::Y) * detail::cached_pauli(j, Axis::Y));
}

/// H0 = sum_{i<j} J_ij (sigma_ix sigma_jx + sigma_iy sigma_jy).
inline Operator drift_hamiltonian(const Couplings& c) {
  if (!c.is_finite()) throw std::invalid_argument("drift_hamiltonian: couplings must be finite");
  Operator h = Operator::Zero();
  for (std::size_t p = 0; p < kPairs.size(); ++p) h += pair_flip_flop(p, c.x[p], c.y[p]);
  return h;
}

/// Hc = sum_i u_i sigma_{i,axis}. Only the x and y drives exist physically
/// but any axis is accepted.
inline Operator control_hamiltonian(const std::array<double, 3>& amplitudes, Axis axis) {
  Operator h = Operator::Zero();
  for (int q = 1; q <= kQubits; ++q) {
    const double a = amplitudes[static_cast<std::size_t>(q - 1)];
    if (!std::isfinite(a)) throw std::invalid_argument("control_hamiltonian: amplitude not finite");
    if (a != 0.0) h += a * detail::cached_pauli(q, axis);
  }
  return h;
}

/// Total excitation number sum_i (1 + sigma_iz) / 2.
inline Operator excitation_number() {
  Operator n = Operator::Zero();
  for (int q = 1; q <= kQubits; ++q) {
    n += 0.5 * (Operator::Identity() + detail::cached_pauli(q, Axis::Z));
  }
  return n;
}

template <typename Derived>
double hermiticity_defect(const Eigen::MatrixBase<Derived>& h) {
  return (h - h.adjoint()).cwiseAbs().maxCoeff();
}

}  // namespace toffoli
