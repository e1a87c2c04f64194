#pragma once

// Pauli strings in bit-mask form.
//
// Text form: character i acts on qubit i, so "XZI" is X_0 Z_1 I_2.

#include "qite/simcore.hpp"

#include <bit>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace qite {

class PauliString {
 public:
  PauliString() = default;

  explicit PauliString(std::string_view text) : n_(static_cast<int>(text.size())) {
    if (n_ < 1 || n_ > kMaxQubits) throw std::invalid_argument("PauliString: bad length");
    for (int q = 0; q < n_; ++q) {
      const std::uint64_t bit = std::uint64_t{1} << q;
      switch (text[static_cast<std::size_t>(q)]) {
        case 'I': break;
        case 'X': x_ |= bit; break;
        case 'Y': x_ |= bit; z_ |= bit; break;
        case 'Z': z_ |= bit; break;
        default:
          throw std::invalid_argument("PauliString: invalid character '" +
                                      std::string(1, text[static_cast<std::size_t>(q)]) + "' in \"" +
                                      std::string(text) + "\"");
      }
    }
  }

  /// Single-qubit Pauli `op` in {X,Y,Z,I} on qubit q of an n-qubit register.
  static PauliString single(int n, int q, char op) {
    if (q < 0 || q >= n) throw std::out_of_range("PauliString::single: qubit out of range");
    std::string s(static_cast<std::size_t>(n), 'I');
    s[static_cast<std::size_t>(q)] = op;
    return PauliString(s);
  }

  static PauliString pair(int n, int q1, char op1, int q2, char op2) {
    if (q1 == q2) throw std::invalid_argument("PauliString::pair: qubits must differ");
    std::string s(static_cast<std::size_t>(n), 'I');
    s.at(static_cast<std::size_t>(q1)) = op1;
    s.at(static_cast<std::size_t>(q2)) = op2;
    return PauliString(s);
  }

  int num_qubits() const { return n_; }
  std::uint64_t x_mask() const { return x_; }
  std::uint64_t z_mask() const { return z_; }
  bool is_identity() const { return x_ == 0 && z_ == 0; }
  int y_count() const { return std::popcount(x_ & z_); }

  std::string str() const {
    std::string s(static_cast<std::size_t>(n_), 'I');
    for (int q = 0; q < n_; ++q) {
      const bool x = (x_ >> q) & 1U;
      const bool z = (z_ >> q) & 1U;
      s[static_cast<std::size_t>(q)] = x ? (z ? 'Y' : 'X') : (z ? 'Z' : 'I');
    }
    return s;
  }

  friend bool operator==(const PauliString&, const PauliString&) = default;
  friend auto operator<=>(const PauliString& a, const PauliString& b) {
    return a.str() <=> b.str();
  }

  /// out = P * in. P|b> = i^{#Y} (-1)^{|b & z|} |b ^ x>.
  void apply(const CVector& in, CVector& out) const {
    const cplx phase = y_phase();
    const auto dim = static_cast<std::uint64_t>(in.size());
    for (std::uint64_t b = 0; b < dim; ++b) {
      const double sign = (std::popcount(b & z_) & 1) ? -1.0 : 1.0;
      out(static_cast<Eigen::Index>(b ^ x_)) = phase * sign * in(static_cast<Eigen::Index>(b));
    }
  }

  CVector apply(const CVector& in) const {
    CVector out(in.size());
    apply(in, out);
    return out;
  }

  /// v <- exp(-i theta P) v = cos(theta) v - i sin(theta) P v.
  void rotate_inplace(CVector& v, double theta) const {
    const double c = std::cos(theta);
    const cplx ms = cplx(0.0, -std::sin(theta)) * y_phase();
    const auto dim = static_cast<std::uint64_t>(v.size());
    if (x_ == 0) {
      for (std::uint64_t b = 0; b < dim; ++b) {
        const double sign = (std::popcount(b & z_) & 1) ? -1.0 : 1.0;
        v(static_cast<Eigen::Index>(b)) *= c + ms * sign;
      }
      return;
    }
    // amplitudes pair up as (b, b ^ x); visit each pair once from its lower member
    for (std::uint64_t b = 0; b < dim; ++b) {
      const std::uint64_t p = b ^ x_;
      if (p < b) continue;
      const cplx vb = v(static_cast<Eigen::Index>(b));
      const cplx vp = v(static_cast<Eigen::Index>(p));
      const double sb = (std::popcount(b & z_) & 1) ? -1.0 : 1.0;
      const double sp = (std::popcount(p & z_) & 1) ? -1.0 : 1.0;
      // (P v)_p = phase * sb * v_b ; (P v)_b = phase * sp * v_p
      v(static_cast<Eigen::Index>(b)) = c * vb + ms * sp * vp;
      v(static_cast<Eigen::Index>(p)) = c * vp + ms * sb * vb;
    }
  }

  CMatrix dense() const {
    const auto dim = dimension_of(n_);
    CMatrix m = CMatrix::Zero(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
    const cplx phase = y_phase();
    for (std::uint64_t b = 0; b < dim; ++b) {
      const double sign = (std::popcount(b & z_) & 1) ? -1.0 : 1.0;
      m(static_cast<Eigen::Index>(b ^ x_), static_cast<Eigen::Index>(b)) = phase * sign;
    }
    return m;
  }

 private:
  cplx y_phase() const {
    switch (y_count() & 3) {
      case 0: return {1.0, 0.0};
      case 1: return {0.0, 1.0};
      case 2: return {-1.0, 0.0};
      default: return {0.0, -1.0};
    }
  }

  int n_ = 0;
  std::uint64_t x_ = 0;
  std::uint64_t z_ = 0;
};

}  // namespace qite
