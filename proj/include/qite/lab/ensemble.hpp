#pragma once

// Seeded ensembles of GD / QITE trajectories and their aggregation.

#include "qite/ansatz.hpp"
#include "qite/dynamics.hpp"
#include "qite/kernels.hpp"
#include "qite/lab/config.hpp"
#include "qite/observables.hpp"
#include "qite/random.hpp"

#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace qite::lab {

struct SnapshotField {
  const char* name;
  double KernelSnapshot::*member;
};

/// Numeric snapshot columns in CSV order. Append only.
inline const std::vector<SnapshotField>& snapshot_fields() {
  static const std::vector<SnapshotField> fields = {
      {"epsilon", &KernelSnapshot::epsilon},         {"k_gd", &KernelSnapshot::k_gd},
      {"k_qite", &KernelSnapshot::k_qite},           {"mu_gd", &KernelSnapshot::mu_gd},
      {"mu_qite", &KernelSnapshot::mu_qite},         {"lambda_gd", &KernelSnapshot::lambda_gd},
      {"lambda_qite", &KernelSnapshot::lambda_qite}, {"trace_g", &KernelSnapshot::trace_g},
      {"offdiag_fro", &KernelSnapshot::offdiag_fro}, {"energy", &KernelSnapshot::energy},
      {"trace_g_pinv", &KernelSnapshot::trace_g_pinv}, {"diag_approx", &KernelSnapshot::diag_approx},
  };
  return fields;
}

/// The concrete problem a config describes.
struct Experiment {
  Ansatz ansatz;
  Observable obs;
  LossSpec loss;

  std::size_t dim() const { return ansatz.dim(); }
  std::size_t param_count() const { return ansatz.param_count(); }
};

inline Experiment make_experiment(const ExperimentConfig& c) {
  c.validate();
  Ansatz ansatz = build_hea(c.n, c.depth, c.brickwork);
  Observable obs = build_xxz(c.n, c.j);
  LossSpec loss = LossSpec::linear();
  if (c.loss == LossKind::Quadratic) {
    loss = LossSpec::quadratic(c.target ? *c.target : c.target_fraction * obs.ground_energy());
  }
  return {std::move(ansatz), std::move(obs), std::move(loss)};
}

struct SeedFailure {
  int index = 0;
  std::uint64_t seed = 0;
  std::string message;
};

struct SeriesStats {
  std::vector<double> mean;
  std::vector<double> stderr;
  std::vector<int> count;  ///< finite samples per step
};

struct EnsembleResult {
  ExperimentConfig config;
  std::string digest;
  double target = 0.0;
  double ground_energy = 0.0;
  double trace_o_sq = 0.0;
  std::size_t N = 0;
  std::size_t L = 0;
  /// Successful seeds only, in seed-index order; every optimizer lists the
  /// same seeds.
  std::map<Optimizer, std::vector<TrajectoryRecord>> runs;
  std::vector<SeedFailure> failures;
  std::map<Optimizer, std::map<std::string, SeriesStats>> series;
};

/// Mean and standard error of the mean over the finite entries at each step.
inline SeriesStats aggregate(const std::vector<TrajectoryRecord>& runs, double KernelSnapshot::*member) {
  SeriesStats s;
  if (runs.empty()) return s;
  const std::size_t steps = runs.front().snapshots.size();
  s.mean.assign(steps, std::nan(""));
  s.stderr.assign(steps, std::nan(""));
  s.count.assign(steps, 0);
  for (std::size_t t = 0; t < steps; ++t) {
    double sum = 0.0;
    int n = 0;
    for (const auto& r : runs) {
      const double v = r.snapshots.at(t).*member;
      if (std::isfinite(v)) {
        sum += v;
        ++n;
      }
    }
    s.count[t] = n;
    if (n == 0) continue;
    const double mean = sum / n;
    double ss = 0.0;
    for (const auto& r : runs) {
      const double v = r.snapshots[t].*member;
      if (std::isfinite(v)) ss += (v - mean) * (v - mean);
    }
    s.mean[t] = mean;
    s.stderr[t] = n > 1 ? std::sqrt(ss / (n - 1) / n) : 0.0;
  }
  return s;
}

class EnsembleAborted : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Runs every optimizer for every seed. Seed i uses derive_seed(master, i)
/// for its initial parameters, so results do not depend on the worker
/// count or completion order. A seed whose trajectory diverges under any
/// optimizer is excluded from all of them; more than 10% failures aborts.
/// The experiment (ansatz, observable, loss) may be supplied directly, for
/// example to run a general loss that has no config form.
inline EnsembleResult run_ensemble(const ExperimentConfig& config, const Experiment& ex,
                                   const std::function<void(int done, int total)>& progress = {}) {
  EnsembleResult res;
  res.config = config;
  res.digest = config_digest(config);
  res.target = ex.loss.kind == LossKind::Quadratic ? ex.loss.target : ex.obs.ground_energy();
  res.ground_energy = ex.obs.ground_energy();
  res.trace_o_sq = ex.obs.trace_sq();
  res.N = ex.dim();
  res.L = ex.param_count();

  const auto seeds = static_cast<std::size_t>(config.seeds);
  std::vector<std::vector<std::optional<TrajectoryRecord>>> slots(
      config.optimizers.size(), std::vector<std::optional<TrajectoryRecord>>(seeds));
  std::vector<std::optional<std::string>> errors(seeds);
  std::atomic<std::size_t> next{0};
  std::atomic<int> done{0};
  std::mutex progress_mutex;

  const TrajectoryOptions opts{config.rcond, res.digest};
  const StateVector psi0(config.n);
  const auto worker = [&] {
    for (std::size_t i = next++; i < seeds; i = next++) {
      const std::uint64_t seed = derive_seed(config.master_seed, i);
      const ParameterVector theta0 = initial_parameters(ex.ansatz, seed);
      try {
        for (std::size_t k = 0; k < config.optimizers.size(); ++k) {
          slots[k][i] = run_trajectory_from(ex.ansatz, ex.obs, ex.loss, config.optimizers[k], config.eta,
                                            config.steps, theta0, seed, opts, psi0);
        }
      } catch (const std::exception& e) {
        errors[i] = e.what();
      }
      const int d = ++done;
      if (progress) {
        std::lock_guard lock(progress_mutex);
        progress(d, config.seeds);
      }
    }
  };
  const unsigned workers = std::min<unsigned>(config.effective_workers(), static_cast<unsigned>(seeds));
  std::vector<std::thread> pool;
  for (unsigned w = 1; w < workers; ++w) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  for (std::size_t i = 0; i < seeds; ++i) {
    if (errors[i]) res.failures.push_back({static_cast<int>(i), derive_seed(config.master_seed, i), *errors[i]});
  }
  if (static_cast<double>(res.failures.size()) > 0.1 * static_cast<double>(seeds)) {
    throw EnsembleAborted("ensemble aborted: " + std::to_string(res.failures.size()) + " of " +
                          std::to_string(seeds) + " seeds failed; first: " + res.failures.front().message);
  }
  for (std::size_t k = 0; k < config.optimizers.size(); ++k) {
    auto& runs = res.runs[config.optimizers[k]];
    for (std::size_t i = 0; i < seeds; ++i) {
      if (!errors[i]) runs.push_back(std::move(*slots[k][i]));
    }
    auto& ser = res.series[config.optimizers[k]];
    for (const auto& f : snapshot_fields()) ser[f.name] = aggregate(runs, f.member);
  }
  return res;
}

inline EnsembleResult run_ensemble(const ExperimentConfig& config,
                                   const std::function<void(int done, int total)>& progress = {}) {
  return run_ensemble(config, make_experiment(config), progress);
}

}  // namespace qite::lab
