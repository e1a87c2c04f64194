#pragma once

// Small-instance equivalence checks: the projected QITE step against direct
// fidelity maximization, and the variational-functional residual under
// step-size halving.

#include "qite/ansatz.hpp"
#include "qite/dynamics.hpp"
#include "qite/lab/config.hpp"
#include "qite/observables.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace qite::lab {

struct EquivOptions {
  int n = 2;
  int depth = 1;
  double dtau = 1e-3;
  std::uint64_t seed = 7;
  double j = 1.0;
  // functional residual run (linear-loss QITE)
  double eta = 1e-3;
  int steps = 50;
  double step_tolerance = 1e-4;
  double min_halving_ratio = 1.8;
  std::size_t max_brute_force_params = 6;
};

struct EquivReport {
  EquivOptions options;
  RVector projected;
  RVector brute_force;
  double max_component_diff = 0.0;
  double brute_force_infidelity = 0.0;
  int brute_force_iterations = 0;
  bool brute_force_converged = false;
  double residual_eta = 0.0;       ///< max_t |r(t)| at eta
  double residual_half_eta = 0.0;  ///< max_t |r(t)| at eta / 2 over the same imaginary time
  double max_distance = 0.0;
  double halving_ratio = 0.0;
  bool step_pass = false;
  bool residual_pass = false;

  bool pass() const { return step_pass && residual_pass; }
};

inline EquivReport run_equiv(const EquivOptions& o) {
  if (o.n < 2 || o.n > 6) throw std::invalid_argument("equiv: n must be in [2, 6]");
  if (o.depth < 1) throw std::invalid_argument("equiv: depth must be >= 1");
  if (!(o.dtau >= 0.0)) throw std::invalid_argument("equiv: dtau must be >= 0");
  if (!(o.eta > 0.0) || o.steps < 1) throw std::invalid_argument("equiv: need eta > 0 and steps >= 1");
  const Ansatz ansatz = build_hea(o.n, o.depth);
  if (ansatz.param_count() > o.max_brute_force_params) {
    throw std::invalid_argument("equiv: brute-force branch needs L <= " + std::to_string(o.max_brute_force_params) +
                                " (got " + std::to_string(ansatz.param_count()) + ")");
  }
  const Observable obs = build_xxz(o.n, o.j);
  const ParameterVector theta = initial_parameters(ansatz, o.seed);

  EquivReport r;
  r.options = o;
  r.projected = projected_qite_delta(ansatz, theta, obs, o.dtau, kDefaultRcond, StateVector(o.n));
  const FidelityStepResult bf = brute_force_fidelity_step(ansatz, theta, obs, o.dtau, StateVector(o.n));
  r.brute_force = bf.delta;
  r.brute_force_infidelity = bf.infidelity;
  r.brute_force_iterations = bf.iterations;
  r.brute_force_converged = bf.converged;
  r.max_component_diff = (r.projected - r.brute_force).cwiseAbs().maxCoeff();
  r.step_pass = bf.converged && r.max_component_diff < o.step_tolerance;

  const LossSpec loss = LossSpec::linear();
  const auto full = run_trajectory(ansatz, obs, loss, Optimizer::QITE, o.eta, o.steps, o.seed);
  const auto half = run_trajectory(ansatz, obs, loss, Optimizer::QITE, 0.5 * o.eta, 2 * o.steps, o.seed);
  const auto rf = variational_functional_check(ansatz, full, obs, loss);
  const auto rh = variational_functional_check(ansatz, half, obs, loss);
  r.residual_eta = rf.max_abs_residual();
  r.residual_half_eta = rh.max_abs_residual();
  r.max_distance = rf.max_distance();
  r.halving_ratio = r.residual_eta / r.residual_half_eta;
  r.residual_pass = r.halving_ratio >= o.min_halving_ratio;
  return r;
}

inline nlohmann::json to_json(const EquivReport& r) {
  const auto vec = [](const RVector& v) { return std::vector<double>(v.data(), v.data() + v.size()); };
  const auto& o = r.options;
  return {{"tool", {{"name", kToolName}, {"version", kToolVersion}}},
          {"inputs",
           {{"n", o.n}, {"depth", o.depth}, {"dtau", o.dtau}, {"seed", o.seed}, {"j", o.j}, {"eta", o.eta},
            {"steps", o.steps}}},
          {"step_check",
           {{"projected", vec(r.projected)},
            {"brute_force", vec(r.brute_force)},
            {"max_component_diff", r.max_component_diff},
            {"tolerance", o.step_tolerance},
            {"brute_force_infidelity", r.brute_force_infidelity},
            {"brute_force_iterations", r.brute_force_iterations},
            {"brute_force_converged", r.brute_force_converged},
            {"pass", r.step_pass}}},
          {"functional_check",
           {{"max_abs_residual_eta", r.residual_eta},
            {"max_abs_residual_half_eta", r.residual_half_eta},
            {"max_distance", r.max_distance},
            {"halving_ratio", r.halving_ratio},
            {"min_ratio", o.min_halving_ratio},
            {"pass", r.residual_pass}}},
          {"pass", r.pass()}};
}

}  // namespace qite::lab
