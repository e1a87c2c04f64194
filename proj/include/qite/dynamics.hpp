#pragma once

// Training loops (GD and QITE / natural gradient), the projected
// imaginary-time step, exact normalized imaginary-time flow, and the
// consistency checks between them.

#include "qite/ansatz.hpp"
#include "qite/geometry.hpp"
#include "qite/kernels.hpp"
#include "qite/observables.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace qite {

enum class Optimizer { GD, QITE };

inline std::string to_string(Optimizer o) { return o == Optimizer::GD ? "gd" : "qite"; }

inline Optimizer optimizer_from_string(const std::string& s) {
  if (s == "gd") return Optimizer::GD;
  if (s == "qite") return Optimizer::QITE;
  throw std::invalid_argument("unknown optimizer \"" + s + "\"");
}

/// dL/dtheta = f'(<O>) d<O>/dtheta.
inline RVector loss_gradient(const Evaluation& ev, const LossSpec& loss) {
  return loss.slope(ev.model.energy) * ev.model.grad;
}

inline ParameterVector gd_update(const ParameterVector& theta, const Evaluation& ev, const LossSpec& loss,
                                 double eta) {
  if (!(eta > 0.0)) throw std::invalid_argument("gd_step: eta must be > 0");
  return ParameterVector(theta.values() - eta * loss_gradient(ev, loss));
}

inline ParameterVector qite_update(const ParameterVector& theta, const Evaluation& ev, const LossSpec& loss,
                                   double eta) {
  if (!(eta > 0.0)) throw std::invalid_argument("qite_step: eta must be > 0");
  return ParameterVector(theta.values() - eta * (ev.metric.pinv * loss_gradient(ev, loss)));
}

/// theta - eta grad L.
inline ParameterVector gd_step(const Ansatz& ansatz, const ParameterVector& theta, const Observable& obs,
                               const LossSpec& loss, double eta, const StateVector& psi0) {
  return gd_update(theta, evaluate(ansatz, theta, obs, loss, kDefaultRcond, psi0, false), loss, eta);
}

inline ParameterVector gd_step(const Ansatz& ansatz, const ParameterVector& theta, const Observable& obs,
                               const LossSpec& loss, double eta) {
  return gd_step(ansatz, theta, obs, loss, eta, StateVector(ansatz.num_qubits()));
}

/// theta - eta g+ grad L.
inline ParameterVector qite_step(const Ansatz& ansatz, const ParameterVector& theta, const Observable& obs,
                                 const LossSpec& loss, double eta, double rcond, const StateVector& psi0) {
  return qite_update(theta, evaluate(ansatz, theta, obs, loss, rcond, psi0, false), loss, eta);
}

inline ParameterVector qite_step(const Ansatz& ansatz, const ParameterVector& theta, const Observable& obs,
                                 const LossSpec& loss, double eta, double rcond = kDefaultRcond) {
  return qite_step(ansatz, theta, obs, loss, eta, rcond, StateVector(ansatz.num_qubits()));
}

/// Closed-form maximizer of the second-order fidelity expansion:
/// delta = -(dtau / 2) g+ grad<O>.
inline RVector projected_qite_delta(const Ansatz& ansatz, const ParameterVector& theta, const Observable& obs,
                                    double dtau, double rcond, const StateVector& psi0) {
  if (!(dtau >= 0.0)) throw std::invalid_argument("projected_qite_step: dtau must be >= 0");
  const Evaluation ev = evaluate(ansatz, theta, obs, LossSpec::linear(), rcond, psi0, false);
  return -0.5 * dtau * (ev.metric.pinv * ev.model.grad);
}

inline ParameterVector projected_qite_step(const Ansatz& ansatz, const ParameterVector& theta,
                                           const Observable& obs, double dtau, double rcond,
                                           const StateVector& psi0) {
  return ParameterVector(theta.values() + projected_qite_delta(ansatz, theta, obs, dtau, rcond, psi0));
}

inline ParameterVector projected_qite_step(const Ansatz& ansatz, const ParameterVector& theta,
                                           const Observable& obs, double dtau, double rcond = kDefaultRcond) {
  return projected_qite_step(ansatz, theta, obs, dtau, rcond, StateVector(ansatz.num_qubits()));
}

/// e^{-O dtau}|psi> / norm, through the cached eigenbasis of O.
inline StateVector exact_imaginary_step(const StateVector& state, const Observable& obs, double dtau) {
  if (!(dtau >= 0.0)) throw std::invalid_argument("exact_imaginary_step: dtau must be >= 0");
  detail::check_same_dim(static_cast<Eigen::Index>(obs.dim()), state.amplitudes().size(), "exact_imaginary_step");
  const CMatrix& V = obs.eigenvectors();
  const RVector& w = obs.eigenvalues();
  CVector c = V.adjoint() * state.amplitudes();
  // shift by the ground energy so the largest weight is exp(0)
  const double e0 = w(0);
  for (Eigen::Index i = 0; i < c.size(); ++i) c(i) *= std::exp(-(w(i) - e0) * dtau);
  return StateVector(state.num_qubits(), V * c, true);
}

// ---------------------------------------------------------------------------
// Nelder-Mead, used as the brute-force fidelity oracle.

struct NelderMeadResult {
  RVector x;
  double value = 0.0;
  int iterations = 0;
  bool converged = false;
};

inline NelderMeadResult nelder_mead(const std::function<double(const RVector&)>& fn, const RVector& start,
                                    double initial_step, double xtol = 1e-10, double ftol = 1e-15,
                                    int max_iter = 50000) {
  const Eigen::Index n = start.size();
  std::vector<RVector> simplex(static_cast<std::size_t>(n + 1), start);
  std::vector<double> vals(static_cast<std::size_t>(n + 1));
  for (Eigen::Index i = 0; i < n; ++i) simplex[static_cast<std::size_t>(i + 1)](i) += initial_step;
  for (std::size_t i = 0; i < simplex.size(); ++i) vals[i] = fn(simplex[i]);

  std::vector<std::size_t> order(simplex.size());
  NelderMeadResult res;
  for (res.iterations = 0; res.iterations < max_iter; ++res.iterations) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return vals[a] < vals[b]; });
    const std::size_t best = order.front();
    const std::size_t worst = order.back();
    const std::size_t second = order[order.size() - 2];

    double size = 0.0;
    for (const auto& p : simplex) size = std::max(size, (p - simplex[best]).cwiseAbs().maxCoeff());
    if (size < xtol && std::abs(vals[worst] - vals[best]) <= ftol * (std::abs(vals[best]) + ftol)) {
      res.converged = true;
      break;
    }

    RVector centroid = RVector::Zero(n);
    for (std::size_t i = 0; i < simplex.size(); ++i) {
      if (i != worst) centroid += simplex[i];
    }
    centroid /= static_cast<double>(n);

    const RVector xr = centroid + (centroid - simplex[worst]);
    const double fr = fn(xr);
    if (fr < vals[best]) {
      const RVector xe = centroid + 2.0 * (centroid - simplex[worst]);
      const double fe = fn(xe);
      if (fe < fr) {
        simplex[worst] = xe;
        vals[worst] = fe;
      } else {
        simplex[worst] = xr;
        vals[worst] = fr;
      }
      continue;
    }
    if (fr < vals[second]) {
      simplex[worst] = xr;
      vals[worst] = fr;
      continue;
    }
    const bool outside = fr < vals[worst];
    const RVector xc = outside ? RVector(centroid + 0.5 * (xr - centroid))
                               : RVector(centroid + 0.5 * (simplex[worst] - centroid));
    const double fc = fn(xc);
    if (fc < (outside ? fr : vals[worst])) {
      simplex[worst] = xc;
      vals[worst] = fc;
      continue;
    }
    for (std::size_t i = 0; i < simplex.size(); ++i) {
      if (i == best) continue;
      simplex[i] = simplex[best] + 0.5 * (simplex[i] - simplex[best]);
      vals[i] = fn(simplex[i]);
    }
  }
  const auto it = std::min_element(vals.begin(), vals.end());
  res.x = simplex[static_cast<std::size_t>(it - vals.begin())];
  res.value = *it;
  return res;
}

struct FidelityStepResult {
  RVector delta;
  double infidelity = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Numerically maximizes |<phi|psi(theta + delta)>|^2 with
/// phi = e^{-dtau O} psi(theta) / norm, starting from delta = 0. The search
/// runs in units of dtau and restarts until the minimum stops moving.
inline FidelityStepResult brute_force_fidelity_step(const Ansatz& ansatz, const ParameterVector& theta,
                                                    const Observable& obs, double dtau, const StateVector& psi0) {
  if (!(dtau >= 0.0)) throw std::invalid_argument("brute_force_fidelity_step: dtau must be >= 0");
  const auto L = static_cast<Eigen::Index>(ansatz.param_count());
  FidelityStepResult out;
  if (dtau == 0.0) {
    out.delta = RVector::Zero(L);
    out.converged = true;
    return out;
  }
  const StateVector psi = prepare_state(ansatz, theta, psi0);
  const CVector phi = exact_imaginary_step(psi, obs, dtau).amplitudes();
  const auto objective = [&](const RVector& u) {
    const CVector v = prepare_state(ansatz, ParameterVector(theta.values() + dtau * u), psi0).amplitudes();
    const CVector r = v - phi * phi.dot(v);
    return r.squaredNorm() / (dtau * dtau);
  };
  RVector u = RVector::Zero(L);
  double step = 1.0;
  for (int restart = 0; restart < 8; ++restart) {
    const NelderMeadResult nm = nelder_mead(objective, u, step, 1e-9, 1e-14);
    out.iterations += nm.iterations;
    const double moved = (nm.x - u).cwiseAbs().maxCoeff();
    u = nm.x;
    out.converged = nm.converged;
    out.infidelity = nm.value * dtau * dtau;
    if (restart > 0 && moved < 1e-8) break;
    step = std::max(1e-3, 10.0 * moved);
  }
  out.delta = dtau * u;
  return out;
}

// ---------------------------------------------------------------------------
// Trajectories.

struct TrajectoryRecord {
  std::uint64_t seed = 0;
  std::string config_digest;
  Optimizer optimizer = Optimizer::GD;
  LossKind loss_kind = LossKind::Linear;
  double eta = 0.0;
  std::vector<KernelSnapshot> snapshots;
  std::vector<ParameterVector> thetas;  ///< parameters at every recorded step
  ParameterVector theta_initial;
  ParameterVector theta_final;
};

/// Raised when a snapshot contains NaN/inf in a quantity that must be finite.
class TrajectoryDiverged : public std::runtime_error {
 public:
  TrajectoryDiverged(int step, ParameterVector theta, RVector metric_spectrum, const std::string& what)
      : std::runtime_error(what), step_(step), theta_(std::move(theta)), spectrum_(std::move(metric_spectrum)) {}
  int step() const { return step_; }
  const ParameterVector& theta() const { return theta_; }
  const RVector& metric_spectrum() const { return spectrum_; }

 private:
  int step_;
  ParameterVector theta_;
  RVector spectrum_;
};

namespace detail {

inline const char* first_non_finite(const KernelSnapshot& s) {
  if (!std::isfinite(s.epsilon)) return "epsilon";
  if (!std::isfinite(s.energy)) return "energy";
  if (!std::isfinite(s.k_gd)) return "k_gd";
  if (!std::isfinite(s.k_qite)) return "k_qite";
  if (!std::isfinite(s.mu_gd)) return "mu_gd";
  if (!std::isfinite(s.mu_qite)) return "mu_qite";
  if (!std::isfinite(s.trace_g)) return "trace_g";
  if (!std::isfinite(s.trace_g_pinv)) return "trace_g_pinv";
  return nullptr;
}

}  // namespace detail

/// Per-seed initial parameters, shared by all optimizers.
inline ParameterVector initial_parameters(const Ansatz& ansatz, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return random_parameters(ansatz.param_count(), rng);
}

struct TrajectoryOptions {
  double rcond = kDefaultRcond;
  std::string config_digest;
};

/// Runs `steps` updates from `theta0`, recording a snapshot before the
/// first update and after each one (steps + 1 snapshots).
inline TrajectoryRecord run_trajectory_from(const Ansatz& ansatz, const Observable& obs, const LossSpec& loss,
                                            Optimizer optimizer, double eta, int steps, ParameterVector theta0,
                                            std::uint64_t seed, const TrajectoryOptions& opts,
                                            const StateVector& psi0) {
  if (steps < 0) throw std::invalid_argument("run_trajectory: steps must be >= 0");
  if (!(eta > 0.0)) throw std::invalid_argument("run_trajectory: eta must be > 0");
  TrajectoryRecord rec;
  rec.seed = seed;
  rec.config_digest = opts.config_digest;
  rec.optimizer = optimizer;
  rec.loss_kind = loss.kind;
  rec.eta = eta;
  rec.theta_initial = theta0;
  rec.snapshots.reserve(static_cast<std::size_t>(steps) + 1);
  rec.thetas.reserve(static_cast<std::size_t>(steps) + 1);

  ParameterVector theta = std::move(theta0);
  for (int t = 0;; ++t) {
    const Evaluation ev = evaluate(ansatz, theta, obs, loss, opts.rcond, psi0, true, t);
    if (const char* bad = detail::first_non_finite(ev.snapshot)) {
      std::ostringstream msg;
      msg << "trajectory diverged at step " << t << " (seed " << seed << ", " << to_string(optimizer)
          << "): non-finite " << bad;
      throw TrajectoryDiverged(t, theta, ev.metric.spectrum(), msg.str());
    }
    rec.snapshots.push_back(ev.snapshot);
    rec.thetas.push_back(theta);
    if (t == steps) break;
    const RVector next = theta.values() - eta * (optimizer == Optimizer::GD ? loss_gradient(ev, loss)
                                                                            : RVector(ev.metric.pinv * loss_gradient(ev, loss)));
    if (!next.allFinite()) {
      std::ostringstream msg;
      msg << "trajectory diverged after step " << t << " (seed " << seed << ", " << to_string(optimizer)
          << "): non-finite parameter update";
      throw TrajectoryDiverged(t, theta, ev.metric.spectrum(), msg.str());
    }
    theta = ParameterVector(next);
  }
  rec.theta_final = theta;
  return rec;
}

inline TrajectoryRecord run_trajectory(const Ansatz& ansatz, const Observable& obs, const LossSpec& loss,
                                       Optimizer optimizer, double eta, int steps, std::uint64_t seed,
                                       const TrajectoryOptions& opts = {}) {
  return run_trajectory_from(ansatz, obs, loss, optimizer, eta, steps, initial_parameters(ansatz, seed), seed, opts,
                             StateVector(ansatz.num_qubits()));
}

// ---------------------------------------------------------------------------
// Consistency checks on recorded trajectories.

struct FunctionalResidual {
  std::vector<double> distance;  ///< D(t) = |(d_tau + f'(O - <O>)) psi|^2
  std::vector<double> j;         ///< f' Re<d_tau psi|O|psi> + |d_tau psi|^2 / 2
  std::vector<double> variance;  ///< f'^2 Var(O)
  std::vector<double> residual;  ///< D - 2 j - f'^2 Var(O)

  double max_abs_residual() const {
    double m = 0.0;
    for (double r : residual) m = std::max(m, std::abs(r));
    return m;
  }
  double max_distance() const {
    double m = 0.0;
    for (double d : distance) m = std::max(m, d);
    return m;
  }
};

/// Evaluates the variational-functional identity along a trajectory, with
/// d_tau psi estimated by forward differences (psi_{t+1} - psi_t) / eta.
inline FunctionalResidual variational_functional_check(const Ansatz& ansatz, const TrajectoryRecord& traj,
                                                       const Observable& obs, const LossSpec& loss,
                                                       const StateVector& psi0) {
  if (traj.thetas.size() < 2) throw std::invalid_argument("variational_functional_check: need >= 2 recorded steps");
  detail::check_obs(ansatz, obs);
  if (traj.thetas.front().size() != ansatz.param_count()) {
    throw std::invalid_argument("variational_functional_check: trajectory does not match ansatz");
  }
  FunctionalResidual out;
  const CMatrix& O = obs.dense();
  CVector prev = prepare_state(ansatz, traj.thetas[0], psi0).amplitudes();
  for (std::size_t t = 0; t + 1 < traj.thetas.size(); ++t) {
    CVector next = prepare_state(ansatz, traj.thetas[t + 1], psi0).amplitudes();
    const CVector dpsi = (next - prev) / traj.eta;
    const CVector o_psi = O * prev;
    const double e = prev.dot(o_psi).real();
    const double e2 = o_psi.squaredNorm();
    const double fp = loss.slope(e);
    const CVector centered = o_psi - e * prev;
    const double dist = (dpsi + fp * centered).squaredNorm();
    const double jv = fp * dpsi.dot(o_psi).real() + 0.5 * dpsi.squaredNorm();
    const double var = fp * fp * (e2 - e * e);
    out.distance.push_back(dist);
    out.j.push_back(jv);
    out.variance.push_back(var);
    out.residual.push_back(dist - 2.0 * jv - var);
    prev = std::move(next);
  }
  return out;
}

inline FunctionalResidual variational_functional_check(const Ansatz& ansatz, const TrajectoryRecord& traj,
                                                       const Observable& obs, const LossSpec& loss) {
  return variational_functional_check(ansatz, traj, obs, loss, StateVector(ansatz.num_qubits()));
}

/// (K(t+1) - K(t)) / (-2 eta mu_QITE(t)); NaN where |mu| < 1e-14.
inline std::vector<double> delta_k_ratio_check(const TrajectoryRecord& traj) {
  if (traj.snapshots.size() < 2) throw std::invalid_argument("delta_k_ratio_check: need >= 2 snapshots");
  std::vector<double> out;
  out.reserve(traj.snapshots.size() - 1);
  for (std::size_t t = 0; t + 1 < traj.snapshots.size(); ++t) {
    const auto& a = traj.snapshots[t];
    const auto& b = traj.snapshots[t + 1];
    const double denom = -2.0 * traj.eta * a.mu_qite;
    out.push_back(std::abs(a.mu_qite) < kKernelFloor ? std::numeric_limits<double>::quiet_NaN()
                                                     : (b.k_qite - a.k_qite) / denom);
  }
  return out;
}

}  // namespace qite
