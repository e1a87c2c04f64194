// qite-lab: ensemble experiments, Haar checks, comparisons, equivalence
// checks and size sweeps.

#include "qite/haar.hpp"
#include "qite/lab/config.hpp"
#include "qite/lab/ensemble.hpp"
#include "qite/lab/equiv.hpp"
#include "qite/lab/report.hpp"
#include "qite/lab/scaling.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

namespace {

namespace fs = std::filesystem;
using namespace qite;
using namespace qite::lab;

void write_json(const fs::path& path, const nlohmann::json& j) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << j.dump(2) << "\n";
}

int cmd_ensemble(const std::string& config_path, const std::string& outdir_override, unsigned workers) {
  ExperimentConfig c = load_config(config_path);
  if (!outdir_override.empty()) c.outdir = outdir_override;
  if (workers > 0) c.workers = workers;
  std::fprintf(stderr, "ensemble: n=%d depth=%d loss=%s eta=%g steps=%d seeds=%d digest=%s\n", c.n, c.depth,
               to_string(c.loss).c_str(), c.eta, c.steps, c.seeds, config_digest(c).c_str());
  const EnsembleResult r = run_ensemble(c, [](int done, int total) {
    if (done % 10 == 0 || done == total) std::fprintf(stderr, "  seeds %d/%d\n", done, total);
  });
  if (!r.failures.empty()) {
    std::fprintf(stderr, "warning: %zu seed(s) failed and were excluded\n", r.failures.size());
  }
  const nlohmann::json report = write_ensemble_outputs(r, c.outdir);
  std::vector<ComparisonRow> rows;
  for (const auto& row : report.at("comparison")) rows.push_back(comparison_row_from_json(row));
  std::cout << "wrote " << c.outdir << "/{trajectories.csv, overlay.csv, report.json, epsilon.svg, k.svg, "
            << "lambda.svg, g_diag.svg}\n";
  if (!rows.empty()) std::cout << format_comparison(rows);
  return 0;
}

int cmd_haar(std::size_t dim, std::size_t samples, std::uint64_t seed, const std::string& x1, const std::string& x2,
             const std::string& out, unsigned workers) {
  const unsigned w = workers > 0 ? workers : std::max(1U, std::thread::hardware_concurrency());
  // Defaults: Z on qubit 0 and Z on qubit 1 of log2(dim) qubits.
  const int n = qite::detail::qubits_for_dimension(dim);
  const PauliString g1 = x1.empty() ? PauliString::single(n, 0, 'Z') : PauliString(x1);
  const PauliString g2 = x2.empty() ? PauliString::single(n, std::min(1, n - 1), 'Z') : PauliString(x2);
  const HaarMomentReport r = mc_metric_moments(dim, g1, g2, samples, seed, w);
  nlohmann::json j = to_json(r);
  j["tool"] = {{"name", kToolName}, {"version", kToolVersion}};
  write_json(out, j);
  for (const char* key : {"diag_mean", "diag_var", "offdiag_mean", "offdiag_var", "second_moment", "fourth_moment"}) {
    const auto& e = j.at(key);
    std::printf("%-14s %12.6g +- %-10.3g target %-10.6g  3sigma:%s\n", key, e.at("value").get<double>(),
                e.at("stderr").get<double>(), e.at("target").get<double>(),
                e.at("pass_3sigma").get<bool>() ? "pass" : "fail");
  }
  std::printf("wrote %s\n", out.c_str());
  return 0;
}

int cmd_compare(const std::string& report_path) {
  std::ifstream in(report_path);
  if (!in) throw std::runtime_error("cannot open report " + report_path);
  nlohmann::json j;
  in >> j;
  const auto rows = compare_report(j);
  std::cout << format_comparison(rows);
  bool all = true;
  for (const auto& r : rows) all = all && r.pass;
  return all ? 0 : 1;
}

int cmd_equiv(const EquivOptions& o, const std::string& out) {
  const EquivReport r = run_equiv(o);
  const nlohmann::json j = to_json(r);
  if (!out.empty()) write_json(out, j);
  std::printf("projected vs brute-force step: max |diff| = %.3e (tol %.1e, brute-force %s after %d iterations) %s\n",
              r.max_component_diff, o.step_tolerance, r.brute_force_converged ? "converged" : "NOT converged",
              r.brute_force_iterations, r.step_pass ? "PASS" : "FAIL");
  std::printf("functional residual: max|r| = %.3e at eta, %.3e at eta/2, ratio %.3f (min %.2f) %s\n", r.residual_eta,
              r.residual_half_eta, r.halving_ratio, o.min_halving_ratio, r.residual_pass ? "PASS" : "FAIL");
  return r.pass() ? 0 : 1;
}

int cmd_scaling(const std::string& config_path, const std::string& outdir_override, unsigned workers) {
  ExperimentConfig c = load_config(config_path);
  if (!outdir_override.empty()) c.outdir = outdir_override;
  if (workers > 0) c.workers = workers;
  const auto rows = run_scaling(c, [](const ScalingRow& r) {
    std::fprintf(stderr, "  n=%d D=%d  K_GD(0)=%.4g (pred %.4g)  K_QITE/K_GD=%.4f  lambda_GD late=%.4g\n", r.n,
                 r.depth, r.k_gd_init.value, r.k_gd_prediction, r.k_qite_init.value / r.k_gd_init.value,
                 r.lambda_gd_late.value);
  });
  fs::create_directories(c.outdir);
  const fs::path path = fs::path(c.outdir) / "scaling.csv";
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << scaling_csv(rows, c);
  std::printf("wrote %s (%zu rows)\n", path.string().c_str(), rows.size());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"GD vs QITE kernel dynamics lab"};
  app.set_version_flag("--version", std::string(kToolName) + " " + kToolVersion);
  app.require_subcommand(1);

  std::string config_path, outdir;
  unsigned workers = 0;
  auto* ens = app.add_subcommand("ensemble", "run a seeded GD/QITE ensemble and write CSV, JSON and SVG outputs");
  ens->add_option("--config", config_path, "experiment config (JSON)")->required()->check(CLI::ExistingFile);
  ens->add_option("--outdir", outdir, "override the config's output directory");
  ens->add_option("--workers", workers, "worker threads (0 = all cores)");

  std::size_t dim = 8, samples = 100000;
  std::uint64_t haar_seed = 1;
  std::string x1, x2, haar_out = "haar_report.json";
  auto* haar = app.add_subcommand("haar", "Monte Carlo metric-tensor moments under Haar-random circuits");
  haar->add_option("--dim", dim, "Hilbert-space dimension N (power of two)")->required();
  haar->add_option("--samples", samples, "number of samples")->required();
  haar->add_option("--seed", haar_seed, "RNG seed")->required();
  haar->add_option("--x1", x1, "first generator (Pauli string, default Z on qubit 0)");
  haar->add_option("--x2", x2, "second generator (Pauli string, default Z on qubit 1)");
  haar->add_option("--out", haar_out, "output path");
  haar->add_option("--workers", workers, "worker threads (0 = all cores)");

  std::string report_path;
  auto* cmp = app.add_subcommand("compare", "print measured-vs-predicted table for a report.json");
  cmp->add_option("--report", report_path, "report.json path")->required()->check(CLI::ExistingFile);

  EquivOptions eq;
  std::string equiv_out;
  auto* equiv = app.add_subcommand("equiv", "projected QITE step vs fidelity maximization; functional residual");
  equiv->add_option("--n", eq.n, "qubits")->required();
  equiv->add_option("--depth", eq.depth, "ansatz depth")->required();
  equiv->add_option("--dtau", eq.dtau, "imaginary-time step")->required();
  equiv->add_option("--seed", eq.seed, "parameter seed");
  equiv->add_option("--eta", eq.eta, "step size for the functional residual run");
  equiv->add_option("--steps", eq.steps, "steps for the functional residual run");
  equiv->add_option("--out", equiv_out, "write JSON report here");

  auto* scal = app.add_subcommand("scaling", "sweep n_values x depth_values and write scaling.csv");
  scal->add_option("--config", config_path, "experiment config (JSON)")->required()->check(CLI::ExistingFile);
  scal->add_option("--outdir", outdir, "override the config's output directory");
  scal->add_option("--workers", workers, "worker threads (0 = all cores)");

  CLI11_PARSE(app, argc, argv);
  try {
    if (*ens) return cmd_ensemble(config_path, outdir, workers);
    if (*haar) return cmd_haar(dim, samples, haar_seed, x1, x2, haar_out, workers);
    if (*cmp) return cmd_compare(report_path);
    if (*equiv) return cmd_equiv(eq, equiv_out);
    if (*scal) return cmd_scaling(config_path, outdir, workers);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
