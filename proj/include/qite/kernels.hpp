#pragma once

// Residual error, its derivatives, and the tangent/meta kernels
// (K_GD, K_QITE, mu_GD, mu_QITE, lambda = mu / K).

#include "qite/ansatz.hpp"
#include "qite/geometry.hpp"
#include "qite/observables.hpp"

#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>

namespace qite {

enum class LossKind { Quadratic, Linear, General };

inline std::string to_string(LossKind k) {
  switch (k) {
    case LossKind::Quadratic: return "quadratic";
    case LossKind::Linear: return "linear";
    case LossKind::General: return "general";
  }
  return "?";
}

inline LossKind loss_kind_from_string(const std::string& s) {
  if (s == "quadratic") return LossKind::Quadratic;
  if (s == "linear") return LossKind::Linear;
  if (s == "general") return LossKind::General;
  throw std::invalid_argument("unknown loss kind \"" + s + "\"");
}

/// Loss L = f(<O>). Quadratic: f = (E - O0)^2 / 2, residual E - O0.
/// Linear and general: residual E - O_min.
struct LossSpec {
  LossKind kind = LossKind::Linear;
  double target = 0.0;
  std::function<double(double)> f;
  std::function<double(double)> fprime;

  static LossSpec quadratic(double target) {
    return {LossKind::Quadratic, target, nullptr, nullptr};
  }
  static LossSpec linear() { return {LossKind::Linear, 0.0, nullptr, nullptr}; }
  static LossSpec general(std::function<double(double)> f, std::function<double(double)> fprime) {
    if (!f || !fprime) throw std::invalid_argument("LossSpec::general: f and f' are required");
    return {LossKind::General, 0.0, std::move(f), std::move(fprime)};
  }

  double epsilon(double energy, const Observable& obs) const {
    return kind == LossKind::Quadratic ? energy - target : energy - obs.ground_energy();
  }

  double value(double energy, [[maybe_unused]] const Observable& obs) const {
    switch (kind) {
      case LossKind::Quadratic: {
        const double e = energy - target;
        return 0.5 * e * e;
      }
      case LossKind::Linear: return energy;
      case LossKind::General: return f(energy);
    }
    return std::numeric_limits<double>::quiet_NaN();
  }

  /// dL/dE at E = <O>.
  double slope(double energy) const {
    switch (kind) {
      case LossKind::Quadratic: return energy - target;
      case LossKind::Linear: return 1.0;
      case LossKind::General: return fprime(energy);
    }
    return std::numeric_limits<double>::quiet_NaN();
  }
};

/// Energy, gradient and (optionally) Hessian of <O> at one parameter point.
struct LocalModel {
  double energy = 0.0;
  RVector grad;
  std::optional<RMatrix> hessian;
};

namespace detail {

inline void check_obs(const Ansatz& a, const Observable& obs) {
  if (obs.num_qubits() != a.num_qubits()) {
    throw std::invalid_argument("observable acts on " + std::to_string(obs.num_qubits()) +
                                " qubits, ansatz on " + std::to_string(a.num_qubits()));
  }
}

}  // namespace detail

inline LocalModel local_model(const StateJet& jet, const Observable& obs, bool with_hessian) {
  detail::check_obs(jet.ansatz(), obs);
  const auto L = static_cast<Eigen::Index>(jet.param_count());
  const CVector o_psi = obs.dense() * jet.psi();
  LocalModel m;
  m.energy = jet.psi().dot(o_psi).real();
  m.grad.resize(L);
  for (Eigen::Index a = 0; a < L; ++a) {
    m.grad(a) = 2.0 * jet.derivative(static_cast<std::size_t>(a)).dot(o_psi).real();
  }
  if (with_hessian) {
    const CMatrix second = jet.second_derivative_overlaps(o_psi);
    CMatrix D(jet.psi().size(), L);
    for (Eigen::Index a = 0; a < L; ++a) D.col(a) = jet.derivative(static_cast<std::size_t>(a));
    const CMatrix cross = D.adjoint() * (obs.dense() * D);
    RMatrix h = 2.0 * (second + cross).real();
    m.hessian = 0.5 * (h + h.transpose());
  }
  return m;
}

/// d<O>/d theta, component a = 2 Re <d_a psi|O|psi>.
inline RVector grad_epsilon(const Ansatz& ansatz, const ParameterVector& theta, const Observable& obs,
                            const StateVector& psi0) {
  return local_model(StateJet(ansatz, theta, psi0), obs, false).grad;
}

inline RVector grad_epsilon(const Ansatz& ansatz, const ParameterVector& theta, const Observable& obs) {
  return grad_epsilon(ansatz, theta, obs, StateVector(ansatz.num_qubits()));
}

/// H_ab = 2 Re(<d_a d_b psi|O|psi> + <d_a psi|O|d_b psi>).
inline RMatrix hessian_epsilon(const Ansatz& ansatz, const ParameterVector& theta, const Observable& obs,
                               const StateVector& psi0) {
  return *local_model(StateJet(ansatz, theta, psi0), obs, true).hessian;
}

inline RMatrix hessian_epsilon(const Ansatz& ansatz, const ParameterVector& theta, const Observable& obs) {
  return hessian_epsilon(ansatz, theta, obs, StateVector(ansatz.num_qubits()));
}

inline double k_gd(const RVector& grad) { return grad.squaredNorm(); }

inline double k_qite(const RVector& grad, const RMatrix& g_pinv) {
  if (g_pinv.rows() != grad.size() || g_pinv.cols() != grad.size()) {
    throw std::invalid_argument("k_qite: dimension mismatch");
  }
  return grad.dot(g_pinv * grad);
}

inline double mu_gd(const RMatrix& hessian, const RVector& grad) {
  if (hessian.rows() != grad.size() || hessian.cols() != grad.size()) {
    throw std::invalid_argument("mu_gd: dimension mismatch");
  }
  return grad.dot(hessian * grad);
}

inline double mu_qite(const RMatrix& hessian, const RVector& grad, const RMatrix& g_pinv) {
  if (g_pinv.rows() != grad.size() || g_pinv.cols() != grad.size()) {
    throw std::invalid_argument("mu_qite: dimension mismatch");
  }
  const RVector v = g_pinv * grad;
  return mu_gd(hessian, v);
}

inline constexpr double kKernelFloor = 1e-14;

/// mu / K, NaN when K is below the floor.
inline double relative_kernel(double mu, double k) {
  return k < kKernelFloor ? std::numeric_limits<double>::quiet_NaN() : mu / k;
}

/// |K_QITE - sum_l grad_l^2 g+_ll| / K_QITE.
inline double diagonal_approx_error(const RVector& grad, const RMatrix& g_pinv) {
  const double full = k_qite(grad, g_pinv);
  const double diag = grad.cwiseAbs2().dot(g_pinv.diagonal());
  return full == 0.0 ? 0.0 : std::abs(full - diag) / std::abs(full);
}

struct KernelSnapshot {
  int step = 0;
  double epsilon = 0.0;
  double k_gd = 0.0;
  double k_qite = 0.0;
  double mu_gd = 0.0;
  double mu_qite = 0.0;
  double lambda_gd = 0.0;
  double lambda_qite = 0.0;
  double trace_g = 0.0;
  double offdiag_fro = 0.0;
  double energy = 0.0;
  double trace_g_pinv = 0.0;
  double diag_approx = 0.0;
};

/// Everything needed for one optimizer step and its diagnostics.
struct Evaluation {
  StateVector state;
  LocalModel model;
  MetricTensor metric;
  KernelSnapshot snapshot;
};

inline Evaluation evaluate(const Ansatz& ansatz, const ParameterVector& theta, const Observable& obs,
                           const LossSpec& loss, double rcond, const StateVector& psi0, bool with_meta = true,
                           int step = 0) {
  detail::check_obs(ansatz, obs);
  const StateJet jet(ansatz, theta, psi0);
  LocalModel model = local_model(jet, obs, with_meta);
  MetricTensor met = metric(jet, rcond);

  KernelSnapshot s;
  s.step = step;
  s.energy = model.energy;
  s.epsilon = loss.epsilon(model.energy, obs);
  s.k_gd = k_gd(model.grad);
  s.k_qite = k_qite(model.grad, met.pinv);
  if (with_meta) {
    s.mu_gd = mu_gd(*model.hessian, model.grad);
    s.mu_qite = mu_qite(*model.hessian, model.grad, met.pinv);
    s.lambda_gd = relative_kernel(s.mu_gd, s.k_gd);
    s.lambda_qite = relative_kernel(s.mu_qite, s.k_qite);
  } else {
    s.mu_gd = s.mu_qite = s.lambda_gd = s.lambda_qite = std::numeric_limits<double>::quiet_NaN();
  }
  s.trace_g = met.trace;
  s.offdiag_fro = met.offdiag_fro;
  s.trace_g_pinv = met.trace_pinv;
  s.diag_approx = diagonal_approx_error(model.grad, met.pinv);
  return {StateVector(ansatz.num_qubits(), jet.psi(), false), std::move(model), std::move(met), s};
}

inline KernelSnapshot snapshot(const Ansatz& ansatz, const ParameterVector& theta, const Observable& obs,
                               const LossSpec& loss, double rcond, const StateVector& psi0) {
  return evaluate(ansatz, theta, obs, loss, rcond, psi0).snapshot;
}

inline KernelSnapshot snapshot(const Ansatz& ansatz, const ParameterVector& theta, const Observable& obs,
                               const LossSpec& loss, double rcond = kDefaultRcond) {
  return snapshot(ansatz, theta, obs, loss, rcond, StateVector(ansatz.num_qubits()));
}

}  // namespace qite
