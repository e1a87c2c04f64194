#pragma once

// Dense statevector simulation: states, gates, inner products, expectations.
//
// Qubit ordering is little-endian: qubit 0 is the least significant bit of
// the amplitude index.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace qite {

using cplx = std::complex<double>;
using CVector = Eigen::VectorXcd;
using CMatrix = Eigen::MatrixXcd;
using RVector = Eigen::VectorXd;
using RMatrix = Eigen::MatrixXd;

inline constexpr int kMaxQubits = 12;
inline constexpr double kNormTolerance = 1e-12;

inline std::size_t dimension_of(int n) { return std::size_t{1} << n; }

class StateVector {
 public:
  /// |0...0> on n qubits.
  explicit StateVector(int n) : n_(check_qubits(n)), amps_(CVector::Zero(dimension_of(n))) {
    amps_(0) = 1.0;
  }

  /// Wraps raw amplitudes. Length must be 2^n. When `normalize` is set the
  /// vector is rescaled to unit norm; otherwise it is taken as-is.
  StateVector(int n, CVector amplitudes, bool normalize = true)
      : n_(check_qubits(n)), amps_(std::move(amplitudes)) {
    if (static_cast<std::size_t>(amps_.size()) != dimension_of(n_)) {
      throw std::invalid_argument("StateVector: amplitude length " + std::to_string(amps_.size()) +
                                  " is not 2^" + std::to_string(n_));
    }
    if (normalize) {
      const double nrm = amps_.norm();
      if (!(nrm > 0.0) || !std::isfinite(nrm)) {
        throw std::invalid_argument("StateVector: cannot normalize zero or non-finite vector");
      }
      amps_ /= nrm;
    }
  }

  static StateVector basis(int n, std::size_t index) {
    StateVector s(n);
    if (index >= s.dim()) throw std::out_of_range("StateVector::basis: index out of range");
    s.amps_(0) = 0.0;
    s.amps_(static_cast<Eigen::Index>(index)) = 1.0;
    return s;
  }

  int num_qubits() const { return n_; }
  std::size_t dim() const { return static_cast<std::size_t>(amps_.size()); }
  const CVector& amplitudes() const { return amps_; }
  cplx operator[](std::size_t i) const { return amps_(static_cast<Eigen::Index>(i)); }
  double norm() const { return amps_.norm(); }

 private:
  static int check_qubits(int n) {
    if (n < 1 || n > kMaxQubits) {
      throw std::invalid_argument("StateVector: qubit count must be in [1, " +
                                  std::to_string(kMaxQubits) + "], got " + std::to_string(n));
    }
    return n;
  }

  int n_;
  CVector amps_;
};

/// A unitary acting on an ordered list of qubits. Row/column index bit k of
/// the local matrix corresponds to support[k].
class Gate {
 public:
  Gate(CMatrix unitary, std::vector<int> support, std::string name = {})
      : unitary_(std::move(unitary)), support_(std::move(support)), name_(std::move(name)) {
    const std::size_t k = support_.size();
    if (k == 0 || k > static_cast<std::size_t>(kMaxQubits)) {
      throw std::invalid_argument("Gate: support must be non-empty");
    }
    if (unitary_.rows() != unitary_.cols() ||
        static_cast<std::size_t>(unitary_.rows()) != dimension_of(static_cast<int>(k))) {
      throw std::invalid_argument("Gate: matrix must be 2^k x 2^k for k support qubits");
    }
    for (std::size_t a = 0; a < k; ++a) {
      if (support_[a] < 0) throw std::invalid_argument("Gate: negative qubit index");
      for (std::size_t b = a + 1; b < k; ++b) {
        if (support_[a] == support_[b]) throw std::invalid_argument("Gate: repeated qubit in support");
      }
    }
    const CMatrix defect = unitary_.adjoint() * unitary_ - CMatrix::Identity(unitary_.rows(), unitary_.cols());
    if (defect.norm() > kNormTolerance) {
      throw std::invalid_argument("Gate: matrix is not unitary (|U^dag U - I|_F = " +
                                  std::to_string(defect.norm()) + ")");
    }
  }

  const CMatrix& unitary() const { return unitary_; }
  const std::vector<int>& support() const { return support_; }
  const std::string& name() const { return name_; }

 private:
  CMatrix unitary_;
  std::vector<int> support_;
  std::string name_;
};

namespace gates {

inline Gate identity(int q) { return Gate(CMatrix::Identity(2, 2), {q}, "I"); }

inline Gate pauli_x(int q) {
  CMatrix m(2, 2);
  m << 0, 1, 1, 0;
  return Gate(m, {q}, "X");
}

inline Gate pauli_y(int q) {
  CMatrix m(2, 2);
  m << 0, cplx(0, -1), cplx(0, 1), 0;
  return Gate(m, {q}, "Y");
}

inline Gate pauli_z(int q) {
  CMatrix m(2, 2);
  m << 1, 0, 0, -1;
  return Gate(m, {q}, "Z");
}

inline Gate hadamard(int q) {
  const double s = 1.0 / std::sqrt(2.0);
  CMatrix m(2, 2);
  m << s, s, s, -s;
  return Gate(m, {q}, "H");
}

/// CNOT with control on support[0], target on support[1].
inline Gate cnot(int control, int target) {
  // local index bit0 = control, bit1 = target
  CMatrix m = CMatrix::Zero(4, 4);
  m(0, 0) = 1;  // c=0,t=0
  m(2, 2) = 1;  // c=0,t=1
  m(3, 1) = 1;  // c=1,t=0 -> c=1,t=1
  m(1, 3) = 1;
  return Gate(m, {control, target}, "CNOT");
}

}  // namespace gates

namespace detail {

// In-place application on a raw amplitude vector.
inline void apply_gate_inplace(CVector& amps, int n, const Gate& gate) {
  const auto& support = gate.support();
  const int k = static_cast<int>(support.size());
  for (int q : support) {
    if (q >= n) {
      throw std::out_of_range("apply_gate: support qubit " + std::to_string(q) + " >= n = " +
                              std::to_string(n));
    }
  }
  const std::size_t dim = dimension_of(n);
  const std::size_t local = dimension_of(k);
  std::size_t mask = 0;
  for (int q : support) mask |= std::size_t{1} << q;

  const CMatrix& u = gate.unitary();
  std::vector<std::size_t> idx(local);
  std::vector<cplx> in(local);
  for (std::size_t base = 0; base < dim; ++base) {
    if (base & mask) continue;
    for (std::size_t j = 0; j < local; ++j) {
      std::size_t full = base;
      for (int b = 0; b < k; ++b) {
        if ((j >> b) & 1U) full |= std::size_t{1} << support[b];
      }
      idx[j] = full;
      in[j] = amps(static_cast<Eigen::Index>(full));
    }
    for (std::size_t r = 0; r < local; ++r) {
      cplx acc = 0.0;
      for (std::size_t c = 0; c < local; ++c) acc += u(r, c) * in[c];
      amps(static_cast<Eigen::Index>(idx[r])) = acc;
    }
  }
}

inline void check_same_dim(Eigen::Index a, Eigen::Index b, const char* what) {
  if (a != b) {
    throw std::invalid_argument(std::string(what) + ": dimension mismatch (" + std::to_string(a) +
                                " vs " + std::to_string(b) + ")");
  }
}

}  // namespace detail

inline StateVector apply_gate(const StateVector& state, const Gate& gate) {
  CVector amps = state.amplitudes();
  detail::apply_gate_inplace(amps, state.num_qubits(), gate);
  return StateVector(state.num_qubits(), std::move(amps), false);
}

/// <a|b>, conjugate-linear in the first argument.
inline cplx inner(const StateVector& a, const StateVector& b) {
  detail::check_same_dim(a.amplitudes().size(), b.amplitudes().size(), "inner");
  return a.amplitudes().dot(b.amplitudes());
}

/// Real part of <psi|O|psi> for a dense Hermitian matrix.
inline double expectation(const StateVector& state, const CMatrix& op) {
  detail::check_same_dim(op.rows(), state.amplitudes().size(), "expectation");
  detail::check_same_dim(op.cols(), state.amplitudes().size(), "expectation");
  const cplx v = state.amplitudes().dot(op * state.amplitudes());
  if (std::abs(v.imag()) >= 1e-10) {
    throw std::domain_error("expectation: imaginary part " + std::to_string(v.imag()) +
                            " exceeds 1e-10; operator is not Hermitian");
  }
  return v.real();
}

/// Embeds a gate as a full 2^n x 2^n matrix. Used by tests and small-n oracles.
inline CMatrix dense_gate(const Gate& gate, int n) {
  const std::size_t dim = dimension_of(n);
  CMatrix out(dim, dim);
  for (std::size_t c = 0; c < dim; ++c) {
    CVector col = CVector::Zero(static_cast<Eigen::Index>(dim));
    col(static_cast<Eigen::Index>(c)) = 1.0;
    detail::apply_gate_inplace(col, n, gate);
    out.col(static_cast<Eigen::Index>(c)) = col;
  }
  return out;
}

}  // namespace qite
