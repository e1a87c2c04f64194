#pragma once

// (n, D) sweeps of initialization and late-time kernel statistics.

#include "qite/haar.hpp"
#include "qite/lab/ensemble.hpp"
#include "qite/lab/report.hpp"
#include "qite/theory.hpp"

#include <functional>
#include <string>
#include <vector>

namespace qite::lab {

struct ScalingRow {
  int n = 0;
  int depth = 0;
  std::size_t N = 0;
  std::size_t L = 0;
  int seeds = 0;
  Estimate k_gd_init;
  Estimate k_qite_init;
  Estimate lambda_gd_init;
  Estimate lambda_qite_init;
  Estimate k_gd_final;
  Estimate lambda_gd_late;
  Estimate trace_g_pinv_init;
  double k_gd_prediction = 0.0;
  double trace_g_pinv_prediction = 0.0;
};

namespace detail {
inline Estimate at_step(const SeriesStats& s, std::size_t t) { return {s.mean.at(t), s.stderr.at(t)}; }

inline Estimate late_mean(const SeriesStats& s) {
  const std::size_t T = s.mean.size();
  const std::size_t from = T - std::max<std::size_t>(1, T / 4);
  return {mean_of(s.mean, from, T), mean_of(s.stderr, from, T)};
}
}  // namespace detail

/// Runs an ensemble for each (n, D) in n_values x depth_values (falling back
/// to the config's own n / depth when an axis is empty).
inline std::vector<ScalingRow> run_scaling(const ExperimentConfig& base,
                                           const std::function<void(const ScalingRow&)>& on_row = {}) {
  base.validate();
  const std::vector<int> ns = base.n_values.empty() ? std::vector<int>{base.n} : base.n_values;
  const std::vector<int> ds = base.depth_values.empty() ? std::vector<int>{base.depth} : base.depth_values;
  std::vector<ScalingRow> rows;
  for (int n : ns) {
    for (int d : ds) {
      ExperimentConfig c = base;
      c.n = n;
      c.depth = d;
      c.n_values.clear();
      c.depth_values.clear();
      const EnsembleResult r = run_ensemble(c);
      ScalingRow row;
      row.n = n;
      row.depth = d;
      row.N = r.N;
      row.L = r.L;
      row.seeds = static_cast<int>(r.runs.begin()->second.size());
      const auto& first = r.series.begin()->second;
      row.k_gd_init = detail::at_step(first.at("k_gd"), 0);
      row.k_qite_init = detail::at_step(first.at("k_qite"), 0);
      row.lambda_gd_init = detail::at_step(first.at("lambda_gd"), 0);
      row.lambda_qite_init = detail::at_step(first.at("lambda_qite"), 0);
      row.trace_g_pinv_init = detail::at_step(first.at("trace_g_pinv"), 0);
      const auto gd = r.series.find(Optimizer::GD);
      const auto& gd_ser = gd != r.series.end() ? gd->second : first;
      row.k_gd_final = detail::at_step(gd_ser.at("k_gd"), gd_ser.at("k_gd").mean.size() - 1);
      row.lambda_gd_late = detail::late_mean(gd_ser.at("lambda_gd"));
      row.k_gd_prediction = theory::k_gd_prediction(static_cast<double>(r.L), r.trace_o_sq, static_cast<double>(r.N));
      row.trace_g_pinv_prediction = theory::kernel_ratio(static_cast<double>(r.N)) * static_cast<double>(r.L);
      if (on_row) on_row(row);
      rows.push_back(row);
    }
  }
  return rows;
}

inline std::string scaling_csv(const std::vector<ScalingRow>& rows, const ExperimentConfig& base) {
  std::string out = std::string("# ") + kToolName + " " + kToolVersion + " config_digest=" + config_digest(base) + "\n";
  out +=
      "n,depth,N,L,seeds,k_gd_init,k_gd_init_se,k_qite_init,k_qite_init_se,k_ratio_init,k_gd_prediction,"
      "lambda_gd_init,lambda_gd_init_se,lambda_qite_init,lambda_qite_init_se,k_gd_final,k_gd_final_se,"
      "lambda_gd_late,lambda_gd_late_se,trace_g_pinv_init,trace_g_pinv_init_se,trace_g_pinv_prediction\n";
  using detail::fmt17;
  for (const auto& r : rows) {
    out += std::to_string(r.n) + "," + std::to_string(r.depth) + "," + std::to_string(r.N) + "," +
           std::to_string(r.L) + "," + std::to_string(r.seeds);
    for (double v : {r.k_gd_init.value, r.k_gd_init.stderr, r.k_qite_init.value, r.k_qite_init.stderr,
                     r.k_qite_init.value / r.k_gd_init.value, r.k_gd_prediction, r.lambda_gd_init.value,
                     r.lambda_gd_init.stderr, r.lambda_qite_init.value, r.lambda_qite_init.stderr, r.k_gd_final.value,
                     r.k_gd_final.stderr, r.lambda_gd_late.value, r.lambda_gd_late.stderr, r.trace_g_pinv_init.value,
                     r.trace_g_pinv_init.stderr, r.trace_g_pinv_prediction}) {
      out += "," + fmt17(v);
    }
    out += "\n";
  }
  return out;
}

}  // namespace qite::lab
