// Acceptance run: one PASS/FAIL line per criterion at the desk-scale
// configuration (n = 3, D = 6, XXZ J = 1, eta = 1e-3, 200 steps, 50 seeds).
// Exits nonzero if any criterion fails.

#include "qite/haar.hpp"
#include "qite/lab/equiv.hpp"
#include "qite/lab/report.hpp"

#include <chrono>
#include <cstdio>
#include <random>
#include <string>
#include <thread>
#include <vector>

using namespace qite;
using namespace qite::lab;

namespace {

int failures = 0;

void verdict(const char* id, bool pass, const std::string& summary) {
  std::printf("%s %s  %s\n", id, pass ? "PASS" : "FAIL", summary.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

std::string fmt(const char* f, double a) {
  char b[128];
  std::snprintf(b, sizeof b, f, a);
  return b;
}

void detail_line(const std::string& s) { std::printf("    %s\n", s.c_str()); }

const ComparisonRow& row(const std::vector<ComparisonRow>& rows, const std::string& name) {
  for (const auto& r : rows) {
    if (r.name == name) return r;
  }
  throw std::runtime_error("missing comparison row " + name);
}

std::string describe(const ComparisonRow& r) {
  char b[256];
  std::snprintf(b, sizeof b, "%s: measured %.6g predicted %.6g error %.4g tol %.3g %s", r.name.c_str(), r.measured,
                r.predicted, r.error, r.tolerance, r.pass ? "ok" : "over");
  return b;
}

bool rows_pass(const std::vector<ComparisonRow>& rows, const std::vector<std::string>& names) {
  bool ok = true;
  for (const auto& n : names) {
    const auto& r = row(rows, n);
    detail_line(describe(r));
    ok = ok && r.pass;
  }
  return ok;
}

ExperimentConfig desk_config(LossKind loss) {
  ExperimentConfig c;
  c.loss = loss;
  c.workers = 0;
  return c;
}

// --- AC1 -------------------------------------------------------------------
void ac1() {
  const auto r = mc_metric_moments(8, PauliString("ZII"), PauliString("IZI"), 100000, 2024,
                                   std::max(1U, std::thread::hardware_concurrency()));
  const double dm = std::abs(r.diag_mean.value / haar_targets::diag_mean(8) - 1);
  const double dv = std::abs(r.diag_var.value / haar_targets::diag_var(8) - 1);
  const double om = std::abs(r.offdiag_mean.value) / r.offdiag_mean.stderr;
  const double ov = std::abs(r.offdiag_var.value / haar_targets::offdiag_var(8) - 1);
  detail_line(fmt("diag_mean %.6f", r.diag_mean.value) + fmt(" target %.6f", haar_targets::diag_mean(8)) +
              fmt(" rel err %.4f (tol 0.01)", dm));
  detail_line(fmt("diag_var %.6f", r.diag_var.value) + fmt(" target %.6f", haar_targets::diag_var(8)) +
              fmt(" rel err %.4f (tol 0.10)", dv) +
              fmt("; exact finite-N value %.6f", haar_targets::diag_var_exact(8)));
  detail_line(fmt("offdiag_mean %.3e", r.offdiag_mean.value) + fmt(" = %.2f sigma (tol 3)", om));
  detail_line(fmt("offdiag_var %.6f", r.offdiag_var.value) + fmt(" target %.6f", haar_targets::offdiag_var(8)) +
              fmt(" rel err %.4f (tol 0.10)", ov));
  const bool pass = dm <= 0.01 && dv <= 0.10 && om <= 3.0 && ov <= 0.10;
  verdict("AC1", pass, "Haar metric moments at N=8, 1e5 samples");
}

// --- AC6 helpers -------------------------------------------------------------
// Per-step ensemble mean of the per-seed delta-K ratio over the first `steps` steps.
std::vector<double> delta_k_means(const EnsembleResult& r, std::size_t steps) {
  std::vector<std::vector<double>> per_seed;
  for (const auto& run : r.runs.at(Optimizer::QITE)) per_seed.push_back(delta_k_ratio_check(run));
  std::vector<double> means;
  for (std::size_t t = 0; t < steps; ++t) {
    double s = 0.0;
    int n = 0;
    for (const auto& v : per_seed) {
      if (t < v.size() && std::isfinite(v[t])) {
        s += v[t];
        ++n;
      }
    }
    means.push_back(n ? s / n : std::nan(""));
  }
  return means;
}

double mean_abs_dev(const std::vector<double>& v) {
  double s = 0.0;
  int n = 0;
  for (double x : v) {
    if (std::isfinite(x)) {
      s += std::abs(x - 1.0);
      ++n;
    }
  }
  return n ? s / n : std::nan("");
}

// --- AC8 -------------------------------------------------------------------
void ac8() {
  const Ansatz a = build_hea(3, 6);
  const Observable obs = build_xxz(3, 1.0);
  const CMatrix& O = obs.dense();
  const auto energy = [&](const RVector& th) {
    const CVector psi = prepare_state(a, ParameterVector(th)).amplitudes();
    return psi.dot(O * psi).real();
  };
  const auto stencil = [](const auto& f, double h) { return (-f(2 * h) + 8 * f(h) - 8 * f(-h) + f(-2 * h)) / (12 * h); };
  std::mt19937_64 rng(8);
  double grad_err = 0, hess_err = 0, herm_err = 0, min_eig = 1e300, penrose1 = 0, penrose2 = 0;
  for (int trial = 0; trial < 5; ++trial) {
    const ParameterVector th = random_parameters(a.param_count(), rng);
    const RVector& x = th.values();
    const RVector g = grad_epsilon(a, th, obs);
    const RMatrix H = hessian_epsilon(a, th, obs);
    const auto L = x.size();
    for (Eigen::Index i = 0; i < L; ++i) {
      const auto along = [&](double s) {
        RVector y = x;
        y(i) += s;
        return energy(y);
      };
      grad_err = std::max(grad_err, std::abs(g(i) - stencil(along, 1e-3)));
      const auto grad_along = [&](double s) {
        RVector y = x;
        y(i) += s;
        return RVector(grad_epsilon(a, ParameterVector(y), obs));
      };
      const RVector col = (-grad_along(2e-3) + 8 * grad_along(1e-3) - 8 * grad_along(-1e-3) + grad_along(-2e-3)) /
                          (12 * 1e-3);
      hess_err = std::max(hess_err, (H.col(i) - col).cwiseAbs().maxCoeff());
    }
    const CMatrix G = qgt(a, th, StateVector(3));
    herm_err = std::max(herm_err, (G - G.adjoint()).cwiseAbs().maxCoeff());
    const MetricTensor m = fubini_study(G);
    min_eig = std::min(min_eig, m.spectrum().minCoeff());
    penrose1 = std::max(penrose1, (m.g * m.pinv * m.g - m.g).cwiseAbs().maxCoeff() / m.g.cwiseAbs().maxCoeff());
    penrose2 =
        std::max(penrose2, (m.pinv * m.g * m.pinv - m.pinv).cwiseAbs().maxCoeff() / m.pinv.cwiseAbs().maxCoeff());
  }
  detail_line(fmt("max |grad - FD| = %.3e (tol 1e-8)", grad_err));
  detail_line(fmt("max |Hessian - FD| = %.3e (tol 1e-6)", hess_err));
  detail_line(fmt("max |G - G^dag| = %.3e (tol 1e-10)", herm_err));
  detail_line(fmt("min eigenvalue of g = %.3e (tol -1e-10)", min_eig));
  detail_line(fmt("Penrose g g+ g = g: %.3e", penrose1) + fmt(", g+ g g+ = g+: %.3e (relative, tol 1e-8)", penrose2));
  const bool pass = grad_err < 1e-8 && hess_err < 1e-6 && herm_err < 1e-10 && min_eig >= -1e-10 && penrose1 < 1e-8 &&
                    penrose2 < 1e-8;
  verdict("AC8", pass, "numerical hygiene at n=3, D=6 (5 random points)");
}

}  // namespace

int main() {
  const auto start = std::chrono::steady_clock::now();
  try {
    ac1();

    const EnsembleResult quad = run_ensemble(desk_config(LossKind::Quadratic));
    const auto qrows = compare_report(make_report(quad));
    detail_line("quadratic ensemble: " + std::to_string(quad.runs.at(Optimizer::GD).size()) + " seeds, target " +
                fmt("%.3f", quad.target));
    verdict("AC2", rows_pass(qrows, {"k_ratio_init", "k_gd_init"}), "kernel ratio and K_GD at initialization");
    verdict("AC3", rows_pass(qrows, {"k_gd_drift", "k_qite_drift", "epsilon_overlay"}),
            "quadratic-loss laziness and residual overlay");
    verdict("AC4", rows_pass(qrows, {"trace_g_pinv"}), "pseudoinverse trace along QITE");

    const EnsembleResult lin = run_ensemble(desk_config(LossKind::Linear));
    const auto lrows = compare_report(make_report(lin));
    verdict("AC5", rows_pass(lrows, {"lambda_ratio_late", "k_gd_decay_fit", "linear_identity_late"}),
            "linear-loss relative kernels and decay");

    ExperimentConfig half_cfg = desk_config(LossKind::Linear);
    half_cfg.optimizers = {Optimizer::QITE};
    half_cfg.eta = 0.5e-3;
    half_cfg.steps = 300;
    const EnsembleResult half = run_ensemble(half_cfg);
    const auto m1 = delta_k_means(lin, 150);
    const auto m2 = delta_k_means(half, 300);
    double lo = 1e300, hi = -1e300;
    for (double v : m1) {
      if (std::isfinite(v)) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
    }
    const double dev1 = mean_abs_dev(m1), dev2 = mean_abs_dev(m2);
    detail_line(fmt("per-step ensemble mean ratio over first 150 steps: min %.4g", lo) + fmt(" max %.4g", hi) +
                " (target [0.8, 1.2])");
    detail_line(fmt("mean |ratio - 1|: eta %.4g", dev1) + fmt(", eta/2 (same imaginary time) %.4g", dev2));
    verdict("AC6", lo >= 0.8 && hi <= 1.2 && dev2 < dev1, "delta-K_QITE versus -2 eta mu_QITE");

    const EquivReport eq = run_equiv(EquivOptions{});
    detail_line(fmt("max component diff %.3e (tol 1e-4)", eq.max_component_diff) +
                (eq.brute_force_converged ? ", brute force converged" : ", brute force NOT converged"));
    detail_line(fmt("residual eta %.4e", eq.residual_eta) + fmt(", eta/2 %.4e", eq.residual_half_eta) +
                fmt(", ratio %.4f (min 1.8)", eq.halving_ratio));
    verdict("AC7", eq.pass(), "projected step vs brute force, functional residual halving");

    ac8();
  } catch (const std::exception& e) {
    std::printf("acceptance aborted: %s\n", e.what());
    return 2;
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::printf("%d criteria failed; %.1f s\n", failures, secs);
  return failures == 0 ? 0 : 1;
}
