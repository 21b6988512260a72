#pragma once

// Reference implementations used only by tests. They share no code with the
// library: operators are built entry-by-entry from basis bits and the
// exponential is a scaled-and-squared Taylor series.

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <complex>
#include <vector>

namespace oracle {

using Complex = std::complex<double>;
using Mat = Eigen::MatrixXcd;

/// Single-qubit Pauli entry <a|sigma|b>, axis 0=x, 1=y, 2=z.
inline Complex pauli_entry(int axis, int a, int b) {
  switch (axis) {
    case 0: return a != b ? Complex{1, 0} : Complex{0, 0};
    case 1: return a == b ? Complex{0, 0} : (a == 0 ? Complex{0, -1} : Complex{0, 1});
    default: return a == b ? Complex{a == 0 ? 1.0 : -1.0, 0} : Complex{0, 0};
  }
}

/// Bit of qubit q (1-based, qubit 1 = most significant) in basis index b.
inline int bit(int b, int q, int n) { return (b >> (n - q)) & 1; }

/// Product of single-qubit Paulis: axes[q-1] in {-1 (identity), 0, 1, 2}.
inline Mat pauli_string(const std::vector<int>& axes) {
  const int n = static_cast<int>(axes.size());
  const int d = 1 << n;
  Mat m = Mat::Zero(d, d);
  for (int r = 0; r < d; ++r) {
    for (int c = 0; c < d; ++c) {
      Complex v{1, 0};
      for (int q = 1; q <= n && v != Complex{0, 0}; ++q) {
        const int a = bit(r, q, n), b = bit(c, q, n);
        v *= axes[q - 1] < 0 ? Complex{a == b ? 1.0 : 0.0, 0} : pauli_entry(axes[q - 1], a, b);
      }
      m(r, c) = v;
    }
  }
  return m;
}

inline Mat sigma(int qubit, int axis) {
  std::vector<int> axes(3, -1);
  axes[qubit - 1] = axis;
  return pauli_string(axes);
}

inline Mat sigma_pair(int i, int j, int axis) {
  std::vector<int> axes(3, -1);
  axes[i - 1] = axis;
  axes[j - 1] = axis;
  return pauli_string(axes);
}

/// Flip-flop Hamiltonian from pair products built entry-wise.
inline Mat drift(double j12, double j13, double j23) {
  return j12 * (sigma_pair(1, 2, 0) + sigma_pair(1, 2, 1)) + j13 * (sigma_pair(1, 3, 0) + sigma_pair(1, 3, 1)) +
         j23 * (sigma_pair(2, 3, 0) + sigma_pair(2, 3, 1));
}

inline Mat control(const std::array<double, 3>& u, int axis) {
  return u[0] * sigma(1, axis) + u[1] * sigma(2, axis) + u[2] * sigma(3, axis);
}

/// exp(a) by scaling to norm < 0.5, a `terms`-term Taylor series, then squaring.
inline Mat expm_taylor(const Mat& a, int terms = 30) {
  const double norm = a.cwiseAbs().colwise().sum().maxCoeff();
  int squarings = 0;
  while (norm / std::pow(2.0, squarings) > 0.5) ++squarings;
  const Mat scaled = a / std::pow(2.0, squarings);
  Mat result = Mat::Identity(a.rows(), a.cols());
  Mat term = Mat::Identity(a.rows(), a.cols());
  for (int k = 1; k < terms; ++k) {
    term = term * scaled / static_cast<double>(k);
    result += term;
  }
  for (int s = 0; s < squarings; ++s) result = result * result;
  return result;
}

/// exp(-i h dt).
inline Mat propagator(const Mat& h, double dt) { return expm_taylor(Complex{0, -dt} * h); }

/// Toffoli as an explicit permutation: |b> -> |b> except 6 <-> 7.
inline Mat toffoli() {
  Mat m = Mat::Zero(8, 8);
  for (int b = 0; b < 8; ++b) {
    const int image = b == 6 ? 7 : (b == 7 ? 6 : b);
    m(image, b) = 1.0;
  }
  return m;
}

/// Alternating x/y piecewise-constant evolution with constant couplings.
inline Mat evolve(double j12, double j13, double j23, const std::vector<std::array<double, 3>>& pulses, double tg) {
  const double T = tg / static_cast<double>(pulses.size());
  Mat u = Mat::Identity(8, 8);
  const Mat h0 = drift(j12, j13, j23);
  for (std::size_t n = 0; n < pulses.size(); ++n) u = propagator(h0 + control(pulses[n], n % 2 == 0 ? 0 : 1), T) * u;
  return u;
}

inline double fidelity(const Mat& u, const Mat& target) {
  return std::abs((u.adjoint() * target).trace()) / static_cast<double>(u.rows());
}

}  // namespace oracle
