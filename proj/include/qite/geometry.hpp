#pragma once

// Quantum geometric tensor, Fubini-Study metric and its pseudoinverse.

#include "qite/ansatz.hpp"
#include "qite/simcore.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace qite {

inline constexpr double kDefaultRcond = 1e-10;

/// G_ab = <d_a psi|d_b psi> - <d_a psi|psi><psi|d_b psi>.
inline CMatrix qgt(const StateJet& jet) {
  const auto L = static_cast<Eigen::Index>(jet.param_count());
  const auto dim = jet.psi().size();
  CMatrix D(dim, L);
  for (Eigen::Index a = 0; a < L; ++a) D.col(a) = jet.derivative(static_cast<std::size_t>(a));
  const CVector overlaps = D.adjoint() * jet.psi();  // <d_a|psi>
  CMatrix G = D.adjoint() * D;
  G -= overlaps * overlaps.adjoint();
  return G;
}

inline CMatrix qgt(const Ansatz& ansatz, const ParameterVector& theta, const StateVector& psi0) {
  return qgt(StateJet(ansatz, theta, psi0));
}

/// Moore-Penrose pseudoinverse of a symmetric matrix via eigendecomposition.
/// Eigenvalues with |lambda| <= rcond * max|lambda| are dropped. The zero
/// matrix maps to the zero matrix.
inline RMatrix pseudoinverse(const RMatrix& g, double rcond = kDefaultRcond) {
  if (g.rows() != g.cols()) throw std::invalid_argument("pseudoinverse: matrix must be square");
  if (!(rcond > 0.0 && rcond < 1.0)) throw std::invalid_argument("pseudoinverse: rcond must be in (0,1)");
  const double scale = std::max(1.0, g.cwiseAbs().maxCoeff());
  if ((g - g.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
    throw std::invalid_argument("pseudoinverse: matrix is not symmetric");
  }
  if (g.size() == 0) return g;
  Eigen::SelfAdjointEigenSolver<RMatrix> es(g);
  if (es.info() != Eigen::Success) throw std::runtime_error("pseudoinverse: eigensolver failed");
  const RVector& w = es.eigenvalues();
  const double wmax = w.cwiseAbs().maxCoeff();
  if (wmax == 0.0) return RMatrix::Zero(g.rows(), g.cols());
  RVector inv(w.size());
  for (Eigen::Index i = 0; i < w.size(); ++i) inv(i) = std::abs(w(i)) > rcond * wmax ? 1.0 / w(i) : 0.0;
  const RMatrix& V = es.eigenvectors();
  RMatrix p = V * inv.asDiagonal() * V.transpose();
  return 0.5 * (p + p.transpose());
}

struct MetricTensor {
  RMatrix g;
  RMatrix pinv;
  double rcond = kDefaultRcond;
  double trace = 0.0;
  double offdiag_fro = 0.0;
  double trace_pinv = 0.0;

  /// Quantum Fisher information matrix, 4 g.
  RMatrix qfim() const { return 4.0 * g; }
  RVector spectrum() const { return Eigen::SelfAdjointEigenSolver<RMatrix>(g, Eigen::EigenvaluesOnly).eigenvalues(); }
};

/// g = Re(G) plus diagnostics and pseudoinverse.
inline MetricTensor fubini_study(const CMatrix& G, double rcond = kDefaultRcond, double herm_tol = 1e-10) {
  if (G.rows() != G.cols()) throw std::invalid_argument("fubini_study: QGT must be square");
  if (G.size() > 0) {
    const double defect = (G - G.adjoint()).cwiseAbs().maxCoeff();
    if (defect > herm_tol) {
      throw std::invalid_argument("fubini_study: QGT not Hermitian (max defect " + std::to_string(defect) + ")");
    }
  }
  MetricTensor m;
  m.g = G.real();
  m.g = 0.5 * (m.g + m.g.transpose());
  m.rcond = rcond;
  m.trace = m.g.trace();
  RMatrix off = m.g;
  off.diagonal().setZero();
  m.offdiag_fro = off.norm();
  m.pinv = pseudoinverse(m.g, rcond);
  m.trace_pinv = m.pinv.trace();
  return m;
}

inline MetricTensor metric(const StateJet& jet, double rcond = kDefaultRcond) { return fubini_study(qgt(jet), rcond); }

}  // namespace qite
