#pragma once

// Independent dense oracles shared by the unit tests. Nothing here calls the
// library's gate or Pauli kernels.

#include "qite/kernels.hpp"
#include "qite/simcore.hpp"

#include <cmath>
#include <complex>
#include <cstring>
#include <random>
#include <string>

namespace testutil {

using qite::CMatrix;
using qite::CVector;
using qite::RMatrix;
using qite::RVector;
using cplx = std::complex<double>;

inline CMatrix kron(const CMatrix& a, const CMatrix& b) {
  CMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  }
  return out;
}

inline CMatrix pauli2(char c) {
  CMatrix m = CMatrix::Zero(2, 2);
  switch (c) {
    case 'I': m << 1, 0, 0, 1; break;
    case 'X': m << 0, 1, 1, 0; break;
    case 'Y': m << 0, cplx(0, -1), cplx(0, 1), 0; break;
    case 'Z': m << 1, 0, 0, -1; break;
    default: throw std::invalid_argument("pauli2");
  }
  return m;
}

/// Dense Pauli string; character q acts on qubit q (qubit 0 least significant).
inline CMatrix dense_pauli(const std::string& s) {
  CMatrix out = CMatrix::Identity(1, 1);
  for (char c : s) out = kron(pauli2(c), out);
  return out;
}

/// Single-qubit matrix u on qubit q of n.
inline CMatrix embed1(const CMatrix& u, int q, int n) {
  CMatrix out = CMatrix::Identity(1, 1);
  for (int k = 0; k < n; ++k) out = kron(k == q ? u : CMatrix(CMatrix::Identity(2, 2)), out);
  return out;
}

inline CMatrix dense_cnot(int c, int t, int n) {
  const Eigen::Index N = Eigen::Index{1} << n;
  CMatrix m = CMatrix::Zero(N, N);
  for (Eigen::Index b = 0; b < N; ++b) {
    const Eigen::Index out = ((b >> c) & 1) ? (b ^ (Eigen::Index{1} << t)) : b;
    m(out, b) = 1.0;
  }
  return m;
}

/// exp(-i theta P) for a Pauli P (P^2 = I).
inline CMatrix rotation(const CMatrix& P, double theta) {
  return std::cos(theta) * CMatrix::Identity(P.rows(), P.cols()) - cplx(0, 1) * std::sin(theta) * P;
}

/// Hardware-efficient ansatz as a product of dense matrices: per layer
/// R_Y on every qubit, R_Z on every qubit, CNOTs on even pairs then odd pairs.
inline CMatrix dense_hea(int n, int depth, const RVector& theta) {
  const Eigen::Index N = Eigen::Index{1} << n;
  CMatrix U = CMatrix::Identity(N, N);
  int l = 0;
  for (int d = 0; d < depth; ++d) {
    for (int q = 0; q < n; ++q) U = embed1(rotation(pauli2('Y'), theta(l++)), q, n) * U;
    for (int q = 0; q < n; ++q) U = embed1(rotation(pauli2('Z'), theta(l++)), q, n) * U;
    for (int parity : {0, 1}) {
      for (int i = parity; i + 1 < n; i += 2) U = dense_cnot(i, i + 1, n) * U;
    }
  }
  return U;
}

/// XXZ Hamiltonian built term by term from Kronecker products.
inline CMatrix dense_xxz(int n, double J) {
  const Eigen::Index N = Eigen::Index{1} << n;
  CMatrix H = CMatrix::Zero(N, N);
  for (int i = 0; i < n; ++i) {
    const int k = (i + 1) % n;
    const auto two = [&](char a, char b) {
      return CMatrix(embed1(pauli2(a), i, n) * embed1(pauli2(b), k, n));
    };
    H -= two('X', 'X') + two('Y', 'Y') + J * two('Z', 'Z') + J * embed1(pauli2('Z'), i, n);
  }
  return H;
}

inline CVector random_state(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  CVector v(Eigen::Index{1} << n);
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = cplx(g(rng), g(rng));
  return v / v.norm();
}

inline RVector random_angles(std::size_t L, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 6.283185307179586);
  RVector v(static_cast<Eigen::Index>(L));
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = u(rng);
  return v;
}

inline RMatrix random_psd(Eigen::Index L, Eigen::Index rank, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  RMatrix A(L, rank);
  for (Eigen::Index i = 0; i < L; ++i) {
    for (Eigen::Index j = 0; j < rank; ++j) A(i, j) = g(rng);
  }
  return A * A.transpose();
}

/// Bitwise comparison of every recorded field; struct padding is ignored.
inline bool same_snapshot(const qite::KernelSnapshot& a, const qite::KernelSnapshot& b) {
  const auto eq = [](double x, double y) { return std::memcmp(&x, &y, sizeof x) == 0; };
  return a.step == b.step && eq(a.epsilon, b.epsilon) && eq(a.k_gd, b.k_gd) && eq(a.k_qite, b.k_qite) &&
         eq(a.mu_gd, b.mu_gd) && eq(a.mu_qite, b.mu_qite) && eq(a.lambda_gd, b.lambda_gd) &&
         eq(a.lambda_qite, b.lambda_qite) && eq(a.trace_g, b.trace_g) && eq(a.offdiag_fro, b.offdiag_fro) &&
         eq(a.energy, b.energy) && eq(a.trace_g_pinv, b.trace_g_pinv) && eq(a.diag_approx, b.diag_approx);
}

}  // namespace testutil
