#pragma once

// Layered parameterized circuits U(theta) = prod_l W_l exp(-i theta_l X_l)
// and exact parameter derivatives of the prepared state.
//
// Slot l applies the rotation exp(-i theta_l X_l) followed by its fixed
// block W_l (possibly empty). Derivatives insert (-i X_l) at the rotation.

#include "qite/pauli.hpp"
#include "qite/simcore.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace qite {

class ParameterVector {
 public:
  ParameterVector() = default;
  explicit ParameterVector(RVector values) : values_(std::move(values)) {
    for (Eigen::Index i = 0; i < values_.size(); ++i) {
      if (!std::isfinite(values_(i))) {
        throw std::invalid_argument("ParameterVector: non-finite entry at index " + std::to_string(i));
      }
    }
  }
  static ParameterVector zeros(std::size_t size) {
    return ParameterVector(RVector::Zero(static_cast<Eigen::Index>(size)));
  }

  std::size_t size() const { return static_cast<std::size_t>(values_.size()); }
  const RVector& values() const { return values_; }
  double operator[](std::size_t i) const { return values_(static_cast<Eigen::Index>(i)); }

 private:
  RVector values_;
};

/// i.i.d. Uniform[0, 2pi) initialization.
template <class Rng>
ParameterVector random_parameters(std::size_t size, Rng& rng) {
  std::uniform_real_distribution<double> dist(0.0, 2.0 * std::numbers::pi);
  RVector v(static_cast<Eigen::Index>(size));
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = dist(rng);
  return ParameterVector(std::move(v));
}

struct Slot {
  PauliString generator;
  std::vector<Gate> fixed_after;
};

/// Which nearest-neighbour pairs each entangling layer touches.
enum class BrickworkOrder {
  EvenThenOdd,       ///< every layer: pairs (i,i+1) for even i, then odd i
  AlternatePerLayer  ///< even pairs on even layers, odd pairs on odd layers
};

class Ansatz {
 public:
  Ansatz(int n, int depth, std::vector<Slot> slots) : n_(n), depth_(depth), slots_(std::move(slots)) {
    if (n_ < 1 || n_ > kMaxQubits) throw std::invalid_argument("Ansatz: bad qubit count");
    for (const auto& s : slots_) {
      if (s.generator.num_qubits() != n_) {
        throw std::invalid_argument("Ansatz: generator width differs from register size");
      }
      if (s.generator.is_identity()) {
        throw std::invalid_argument("Ansatz: generator must be a non-identity (traceless) Pauli string");
      }
      for (const auto& g : s.fixed_after) {
        for (int q : g.support()) {
          if (q >= n_) throw std::out_of_range("Ansatz: fixed gate acts outside register");
        }
      }
    }
  }

  int num_qubits() const { return n_; }
  int depth() const { return depth_; }
  std::size_t dim() const { return dimension_of(n_); }
  std::size_t param_count() const { return slots_.size(); }
  const std::vector<Slot>& slots() const { return slots_; }

  std::size_t entangler_count() const {
    std::size_t c = 0;
    for (const auto& s : slots_) c += s.fixed_after.size();
    return c;
  }

  void check_params(const ParameterVector& theta) const {
    if (theta.size() != param_count()) {
      throw std::invalid_argument("Ansatz: parameter length " + std::to_string(theta.size()) +
                                  " != L = " + std::to_string(param_count()));
    }
  }

  void check_state(const StateVector& psi0) const {
    if (psi0.num_qubits() != n_) throw std::invalid_argument("Ansatz: input state width mismatch");
  }

  /// Applies slot l (rotation then fixed block) in place.
  void apply_slot(CVector& v, std::size_t l, double theta) const {
    slots_[l].generator.rotate_inplace(v, theta);
    apply_fixed(v, l);
  }

  void apply_fixed(CVector& v, std::size_t l) const {
    for (const auto& g : slots_[l].fixed_after) detail::apply_gate_inplace(v, n_, g);
  }

 private:
  int n_;
  int depth_;
  std::vector<Slot> slots_;
};

/// Hardware-efficient ansatz: per layer R_Y then R_Z on every qubit, then a
/// CNOT brickwall on nearest neighbours (open boundary). L = 2 n depth.
inline Ansatz build_hea(int n, int depth, BrickworkOrder order = BrickworkOrder::EvenThenOdd) {
  if (n < 1) throw std::invalid_argument("build_hea: n must be >= 1");
  if (depth < 1) throw std::invalid_argument("build_hea: depth must be >= 1");
  std::vector<Slot> slots;
  slots.reserve(static_cast<std::size_t>(2 * n * depth));
  for (int d = 0; d < depth; ++d) {
    for (int q = 0; q < n; ++q) slots.push_back({PauliString::single(n, q, 'Y'), {}});
    for (int q = 0; q < n; ++q) slots.push_back({PauliString::single(n, q, 'Z'), {}});
    auto& block = slots.back().fixed_after;
    const auto add_parity = [&](int parity) {
      for (int i = parity; i + 1 < n; i += 2) block.push_back(gates::cnot(i, i + 1));
    };
    if (order == BrickworkOrder::EvenThenOdd) {
      add_parity(0);
      add_parity(1);
    } else {
      add_parity(d % 2);
    }
  }
  return Ansatz(n, depth, std::move(slots));
}

/// U(theta)|psi0>.
inline StateVector prepare_state(const Ansatz& ansatz, const ParameterVector& theta, const StateVector& psi0) {
  ansatz.check_params(theta);
  ansatz.check_state(psi0);
  CVector v = psi0.amplitudes();
  for (std::size_t l = 0; l < ansatz.param_count(); ++l) ansatz.apply_slot(v, l, theta[l]);
  return StateVector(ansatz.num_qubits(), std::move(v), false);
}

inline StateVector prepare_state(const Ansatz& ansatz, const ParameterVector& theta) {
  return prepare_state(ansatz, theta, StateVector(ansatz.num_qubits()));
}

namespace detail {

inline void check_index(const Ansatz& a, std::size_t l) {
  if (l >= a.param_count()) {
    throw std::out_of_range("Ansatz: parameter index " + std::to_string(l) + " >= L = " +
                            std::to_string(a.param_count()));
  }
}

// v <- (-i X_l) v
inline void insert_generator(const Ansatz& a, CVector& v, std::size_t l) {
  CVector tmp = a.slots()[l].generator.apply(v);
  v = cplx(0.0, -1.0) * tmp;
}

}  // namespace detail

/// d|psi>/d theta_l (not normalized).
inline CVector state_derivative(const Ansatz& ansatz, const ParameterVector& theta, std::size_t l,
                                const StateVector& psi0) {
  ansatz.check_params(theta);
  ansatz.check_state(psi0);
  detail::check_index(ansatz, l);
  CVector v = psi0.amplitudes();
  for (std::size_t k = 0; k < ansatz.param_count(); ++k) {
    ansatz.slots()[k].generator.rotate_inplace(v, theta[k]);
    if (k == l) detail::insert_generator(ansatz, v, k);
    ansatz.apply_fixed(v, k);
  }
  return v;
}

/// d^2|psi>/d theta_l1 d theta_l2 (circuit-order insertion; symmetric).
inline CVector state_second_derivative(const Ansatz& ansatz, const ParameterVector& theta, std::size_t l1,
                                       std::size_t l2, const StateVector& psi0) {
  ansatz.check_params(theta);
  ansatz.check_state(psi0);
  detail::check_index(ansatz, l1);
  detail::check_index(ansatz, l2);
  CVector v = psi0.amplitudes();
  for (std::size_t k = 0; k < ansatz.param_count(); ++k) {
    ansatz.slots()[k].generator.rotate_inplace(v, theta[k]);
    if (k == l1) detail::insert_generator(ansatz, v, k);
    if (k == l2) detail::insert_generator(ansatz, v, k);
    ansatz.apply_fixed(v, k);
  }
  return v;
}

/// Forward/derivative cache for one (ansatz, theta, psi0): the prepared
/// state, all first derivatives, and optionally the second-derivative
/// overlaps <d_a d_b psi | w> against a fixed vector w. Built in O(L^2)
/// slot applications.
class StateJet {
 public:
  StateJet(const Ansatz& ansatz, const ParameterVector& theta, const StateVector& psi0)
      : ansatz_(&ansatz), theta_(theta) {
    ansatz.check_params(theta);
    ansatz.check_state(psi0);
    const std::size_t L = ansatz.param_count();
    after_rotation_.reserve(L);
    CVector v = psi0.amplitudes();
    for (std::size_t k = 0; k < L; ++k) {
      ansatz.slots()[k].generator.rotate_inplace(v, theta[k]);
      after_rotation_.push_back(v);
      ansatz.apply_fixed(v, k);
    }
    psi_ = std::move(v);

    derivs_.reserve(L);
    for (std::size_t a = 0; a < L; ++a) {
      CVector d = after_rotation_[a];
      detail::insert_generator(ansatz, d, a);
      ansatz.apply_fixed(d, a);
      for (std::size_t k = a + 1; k < L; ++k) ansatz.apply_slot(d, k, theta[k]);
      derivs_.push_back(std::move(d));
    }
  }

  const Ansatz& ansatz() const { return *ansatz_; }
  std::size_t param_count() const { return derivs_.size(); }
  const CVector& psi() const { return psi_; }
  const std::vector<CVector>& derivatives() const { return derivs_; }
  const CVector& derivative(std::size_t l) const { return derivs_.at(l); }

  /// M(a,b) = <d_a d_b psi | w>. Requires w on the full register.
  CMatrix second_derivative_overlaps(const CVector& w) const {
    const Ansatz& an = *ansatz_;
    const std::size_t L = param_count();
    // back[b] = (T_{>b} W_b)^dag w, the vector paired with the state just
    // after rotation b.
    std::vector<CVector> back(L);
    CVector lam = w;
    for (std::size_t bb = L; bb-- > 0;) {
      for (auto it = an.slots()[bb].fixed_after.rbegin(); it != an.slots()[bb].fixed_after.rend(); ++it) {
        detail::apply_gate_inplace(lam, an.num_qubits(), adjoint_of(*it));
      }
      back[bb] = lam;
      an.slots()[bb].generator.rotate_inplace(lam, -theta_[bb]);
    }

    CMatrix m(static_cast<Eigen::Index>(L), static_cast<Eigen::Index>(L));
    for (std::size_t a = 0; a < L; ++a) {
      // X^2 = I, so d_a d_a psi = -psi
      m(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(a)) = -psi_.dot(w);
      CVector xi = after_rotation_[a];
      detail::insert_generator(an, xi, a);
      an.apply_fixed(xi, a);
      for (std::size_t b = a + 1; b < L; ++b) {
        an.slots()[b].generator.rotate_inplace(xi, theta_[b]);
        CVector t = xi;
        detail::insert_generator(an, t, b);
        const cplx val = t.dot(back[b]);
        m(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) = val;
        m(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(a)) = val;
        an.apply_fixed(xi, b);
      }
    }
    return m;
  }

 private:
  static Gate adjoint_of(const Gate& g) { return Gate(g.unitary().adjoint(), g.support(), g.name() + "^dag"); }

  const Ansatz* ansatz_;
  ParameterVector theta_;
  std::vector<CVector> after_rotation_;
  CVector psi_;
  std::vector<CVector> derivs_;
};

}  // namespace qite
