#include "qite/geometry.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace qite;

namespace {

double rel_fro(const RMatrix& a, const RMatrix& b) { return (a - b).norm() / std::max(1e-300, b.norm()); }

}  // namespace

TEST(Qgt, DiagonalIsVarianceOfGenerator) {
  std::mt19937_64 rng(1);
  const Ansatz a = build_hea(3, 3);
  const ParameterVector th = random_parameters(a.param_count(), rng);
  const CMatrix G = qgt(a, th, StateVector(3));
  const StateJet jet(a, th, StateVector(3));
  for (std::size_t l = 0; l < a.param_count(); ++l) {
    const auto i = static_cast<Eigen::Index>(l);
    const double expect = 1.0 - std::norm(jet.psi().dot(jet.derivative(l)));
    EXPECT_NEAR(G(i, i).real(), expect, 1e-12);
    EXPECT_GE(G(i, i).real(), -1e-12);
    EXPECT_LE(G(i, i).real(), 1.0 + 1e-12);
  }
}

TEST(Qgt, SingleRotationBruteForce) {
  // |psi> = e^{-i theta Y}|0> = (cos, sin); d psi = (-sin, cos); <psi|d psi> = 0.
  const Ansatz a(1, 1, {Slot{PauliString("Y"), {}}});
  RVector t(1);
  t << 0.4;
  const CMatrix G = qgt(a, ParameterVector(t), StateVector(1));
  CVector psi(2), d(2);
  psi << std::cos(0.4), std::sin(0.4);
  d << -std::sin(0.4), std::cos(0.4);
  const cplx expect = d.dot(d) - d.dot(psi) * psi.dot(d);
  EXPECT_NEAR(std::abs(G(0, 0) - expect), 0.0, 1e-14);
  EXPECT_NEAR(G(0, 0).real(), 1.0, 1e-14);
}

TEST(Qgt, HermitianAndMatchesDefinition) {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 5; ++trial) {
    const Ansatz a = build_hea(3, 2);
    const ParameterVector th = random_parameters(a.param_count(), rng);
    const CMatrix G = qgt(a, th, StateVector(3));
    EXPECT_LT((G - G.adjoint()).cwiseAbs().maxCoeff(), 1e-10);
    const StateJet jet(a, th, StateVector(3));
    const auto L = static_cast<Eigen::Index>(a.param_count());
    for (Eigen::Index i = 0; i < L; ++i) {
      for (Eigen::Index j = 0; j < L; ++j) {
        const CVector& di = jet.derivative(static_cast<std::size_t>(i));
        const CVector& dj = jet.derivative(static_cast<std::size_t>(j));
        const cplx expect = di.dot(dj) - di.dot(jet.psi()) * jet.psi().dot(dj);
        EXPECT_LT(std::abs(G(i, j) - expect), 1e-12);
      }
    }
  }
}

TEST(FubiniStudy, RealInputKeptExactly) {
  std::mt19937_64 rng(3);
  const RMatrix g = testutil::random_psd(5, 5, rng);
  const MetricTensor m = fubini_study(g.cast<cplx>());
  EXPECT_EQ((m.g - g).cwiseAbs().maxCoeff(), 0.0);
  EXPECT_NEAR(m.trace, g.diagonal().sum(), 1e-12);
  EXPECT_LE((m.qfim() - 4.0 * g).cwiseAbs().maxCoeff(), 0.0);
}

TEST(FubiniStudy, RejectsNonHermitian) {
  CMatrix G = CMatrix::Identity(2, 2);
  G(0, 1) = 1e-6;
  EXPECT_THROW(fubini_study(G), std::invalid_argument);
}

TEST(FubiniStudy, MetricPsdAndDiagnostics) {
  std::mt19937_64 rng(4);
  const Ansatz a = build_hea(3, 6);
  for (int trial = 0; trial < 5; ++trial) {
    const StateJet jet(a, random_parameters(a.param_count(), rng), StateVector(3));
    const MetricTensor m = metric(jet);
    EXPECT_GE(m.spectrum().minCoeff(), -1e-10);
    EXPECT_NEAR(m.trace, m.g.diagonal().sum(), 1e-12);
    RMatrix off = m.g;
    off.diagonal().setZero();
    EXPECT_NEAR(m.offdiag_fro, off.norm(), 1e-12);
    EXPECT_NEAR(m.trace_pinv, m.pinv.trace(), 1e-12);
  }
}

TEST(FubiniStudy, HeaMetricRankBoundedByManifoldDimension) {
  // A pure state in C^N has 2N - 2 real tangent directions.
  std::mt19937_64 rng(5);
  const Ansatz a = build_hea(3, 6);
  const MetricTensor m = metric(StateJet(a, random_parameters(a.param_count(), rng), StateVector(3)));
  const RVector w = m.spectrum();
  int rank = 0;
  for (Eigen::Index i = 0; i < w.size(); ++i) rank += w(i) > 1e-10 * w.maxCoeff();
  EXPECT_LE(rank, 14);
}

TEST(Pseudoinverse, SimpleCases) {
  EXPECT_LE((pseudoinverse(RMatrix::Identity(4, 4)) - RMatrix::Identity(4, 4)).cwiseAbs().maxCoeff(), 1e-15);
  RMatrix d = RMatrix::Zero(2, 2);
  d(0, 0) = 2.0;
  const RMatrix p = pseudoinverse(d, 1e-10);
  EXPECT_NEAR(p(0, 0), 0.5, 1e-15);
  EXPECT_EQ(p(1, 1), 0.0);
  EXPECT_EQ(pseudoinverse(RMatrix::Zero(3, 3)).norm(), 0.0);
  const double c = 8.0 / 9.0;
  const RMatrix q = pseudoinverse(c * RMatrix::Identity(6, 6));
  for (Eigen::Index i = 0; i < 6; ++i) EXPECT_NEAR(q(i, i), 1.125, 1e-14);
}

TEST(Pseudoinverse, RejectsBadInput) {
  EXPECT_THROW(pseudoinverse(RMatrix::Zero(2, 3)), std::invalid_argument);
  RMatrix a = RMatrix::Identity(2, 2);
  a(0, 1) = 0.5;
  EXPECT_THROW(pseudoinverse(a), std::invalid_argument);
  EXPECT_THROW(pseudoinverse(RMatrix::Identity(2, 2), 0.0), std::invalid_argument);
  EXPECT_THROW(pseudoinverse(RMatrix::Identity(2, 2), 1.0), std::invalid_argument);
}

TEST(PseudoinverseProperty, PenroseConditions) {
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 30; ++trial) {
    const Eigen::Index L = 3 + trial % 10;
    const Eigen::Index rank = 1 + trial % L;
    const RMatrix g = testutil::random_psd(L, rank, rng);
    const RMatrix p = pseudoinverse(g);
    EXPECT_LT(rel_fro(g * p * g, g), 1e-8);
    EXPECT_LT(rel_fro(p * g * p, p), 1e-8);
    EXPECT_LT((p - p.transpose()).cwiseAbs().maxCoeff(), 1e-10 * std::max(1.0, p.cwiseAbs().maxCoeff()));
  }
}

TEST(PseudoinverseProperty, PenroseOnHeaMetrics) {
  std::mt19937_64 rng(7);
  const Ansatz a = build_hea(3, 6);
  for (int trial = 0; trial < 5; ++trial) {
    const MetricTensor m = metric(StateJet(a, random_parameters(a.param_count(), rng), StateVector(3)));
    EXPECT_LT(rel_fro(m.g * m.pinv * m.g, m.g), 1e-8);
    EXPECT_LT(rel_fro(m.pinv * m.g * m.pinv, m.pinv), 1e-8);
  }
}
