#pragma once

// Ensemble report: JSON persistence, analytic overlays, measured-vs-predicted
// comparison, CSV tables and SVG figures.

#include "qite/lab/ensemble.hpp"
#include "qite/lab/svg.hpp"
#include "qite/theory.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace qite::lab {

class ReportError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// JSON has no NaN; non-finite values are stored as null.
inline nlohmann::json num_array(const std::vector<double>& v) {
  nlohmann::json a = nlohmann::json::array();
  for (double x : v) {
    if (std::isfinite(x)) {
      a.push_back(x);
    } else {
      a.push_back(nullptr);
    }
  }
  return a;
}

inline std::vector<double> read_num_array(const nlohmann::json& a) {
  std::vector<double> v;
  v.reserve(a.size());
  for (const auto& x : a) v.push_back(x.is_null() ? kNaN : x.get<double>());
  return v;
}

inline std::string fmt17(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline double mean_of(const std::vector<double>& v, std::size_t from, std::size_t to) {
  double s = 0.0;
  int n = 0;
  for (std::size_t i = from; i < to && i < v.size(); ++i) {
    if (std::isfinite(v[i])) {
      s += v[i];
      ++n;
    }
  }
  return n > 0 ? s / n : kNaN;
}

/// Pointwise a/b of two mean series with first-order error propagation
/// (covariance ignored).
inline SeriesStats ratio_series(const SeriesStats& a, const SeriesStats& b) {
  SeriesStats r;
  const std::size_t n = std::min(a.mean.size(), b.mean.size());
  for (std::size_t t = 0; t < n; ++t) {
    const double q = a.mean[t] / b.mean[t];
    const double ea = a.stderr[t] / a.mean[t], eb = b.stderr[t] / b.mean[t];
    r.mean.push_back(q);
    r.stderr.push_back(std::abs(q) * std::sqrt(ea * ea + eb * eb));
    r.count.push_back(std::min(a.count[t], b.count[t]));
  }
  return r;
}

inline SeriesStats scale_series(SeriesStats s, double c) {
  for (auto& v : s.mean) v *= c;
  for (auto& v : s.stderr) v *= std::abs(c);
  return s;
}

/// Ensemble statistics of an arbitrary per-run series.
inline SeriesStats aggregate_rows(const std::vector<std::vector<double>>& rows) {
  SeriesStats s;
  if (rows.empty()) return s;
  const std::size_t steps = rows.front().size();
  for (std::size_t t = 0; t < steps; ++t) {
    double sum = 0.0, ss = 0.0;
    int n = 0;
    for (const auto& r : rows) {
      if (std::isfinite(r[t])) {
        sum += r[t];
        ++n;
      }
    }
    const double m = n > 0 ? sum / n : kNaN;
    for (const auto& r : rows) {
      if (std::isfinite(r[t])) ss += (r[t] - m) * (r[t] - m);
    }
    s.mean.push_back(m);
    s.stderr.push_back(n > 1 ? std::sqrt(ss / (n - 1) / n) : (n == 1 ? 0.0 : kNaN));
    s.count.push_back(n);
  }
  return s;
}

}  // namespace detail

inline nlohmann::json to_json(const SeriesStats& s) {
  return {{"mean", detail::num_array(s.mean)}, {"stderr", detail::num_array(s.stderr)}, {"count", s.count}};
}

inline SeriesStats series_from_json(const nlohmann::json& j) {
  SeriesStats s;
  s.mean = detail::read_num_array(j.at("mean"));
  s.stderr = detail::read_num_array(j.at("stderr"));
  if (j.contains("count")) s.count = j.at("count").get<std::vector<int>>();
  return s;
}

/// Analytic overlay curves from the measured ensemble.
///
/// Quadratic loss: the QITE residual predicted from the measured GD residual,
/// eps_GD(t) exp(-eta t Kbar_GD / N), with Kbar_GD the time-averaged ensemble
/// mean; plus the constant-kernel exponentials for both optimizers and the
/// log / relative gaps.
///
/// Linear loss: lambda_GD is fitted from the late-time decay of the ensemble
/// mean K_GD; K0 is the ensemble mean at initialization.
inline std::vector<theory::AnalyticCurve> make_overlays(const EnsembleResult& r) {
  std::vector<theory::AnalyticCurve> out;
  const auto gd = r.series.find(Optimizer::GD);
  if (gd == r.series.end()) return out;
  const auto& kgd = gd->second.at("k_gd").mean;
  const auto& eps = gd->second.at("epsilon").mean;
  if (kgd.empty()) return out;
  const double N = static_cast<double>(r.N);
  const double eta = r.config.eta;
  const int steps = r.config.steps;
  if (r.config.loss == LossKind::Quadratic) {
    const double kbar = detail::mean_of(kgd, 0, kgd.size());
    using theory::CurveKind;
    out.push_back(theory::make_curve(CurveKind::EpsilonRatio, {{"eta", eta}, {"N", N}, {"k_gd", kbar}}, steps));
    out.push_back(theory::make_curve(CurveKind::EpsilonQuadratic, {{"eps0", eps[0]}, {"k_bar", kbar}, {"eta", eta}},
                                     steps));
    out.push_back(theory::make_curve(CurveKind::EpsilonQuadratic,
                                     {{"eps0", eps[0]}, {"k_bar", theory::kernel_ratio(N) * kbar}, {"eta", eta}},
                                     steps));
    out.push_back(
        theory::make_curve(CurveKind::DeltaLog, {{"eta", eta}, {"N", N}, {"rate", kbar}, {"linear", 0.0}}, steps));
    out.push_back(
        theory::make_curve(CurveKind::DeltaRel, {{"eta", eta}, {"N", N}, {"rate", kbar}, {"linear", 0.0}}, steps));
  } else {
    const std::size_t from = kgd.size() - std::max<std::size_t>(10, kgd.size() / 4);
    if (kgd.size() < 10) return out;
    double lam = detail::kNaN;
    try {
      lam = theory::fit_decay_rate(std::vector<double>(kgd.begin() + static_cast<long>(from), kgd.end()), eta);
    } catch (const std::invalid_argument&) {
      return out;
    }
    if (!(lam > 0.0)) return out;
    using theory::CurveKind;
    const std::map<std::string, double> p = {{"k0", kgd[0]}, {"lambda_gd", lam}, {"eta", eta}, {"N", N}};
    out.push_back(theory::make_curve(CurveKind::KLinear, p, steps));
    out.push_back(theory::make_curve(CurveKind::EpsilonLinear, p, steps));
    out.push_back(
        theory::make_curve(CurveKind::DeltaLog, {{"eta", eta}, {"N", N}, {"rate", lam}, {"linear", 1.0}}, steps));
    out.push_back(
        theory::make_curve(CurveKind::DeltaRel, {{"eta", eta}, {"N", N}, {"rate", lam}, {"linear", 1.0}}, steps));
  }
  return out;
}

/// Per-step diagnostics derived from the ensemble series.
inline nlohmann::json make_diagnostics(const EnsembleResult& r) {
  nlohmann::json d = nlohmann::json::object();
  const double N = static_cast<double>(r.N), L = static_cast<double>(r.L);
  for (const auto& [opt, ser] : r.series) {
    nlohmann::json o;
    o["k_ratio"] = to_json(detail::ratio_series(ser.at("k_qite"), ser.at("k_gd")));
    o["lambda_ratio"] = to_json(detail::ratio_series(ser.at("lambda_qite"), ser.at("lambda_gd")));
    o["trace_pinv_ratio"] = to_json(detail::scale_series(ser.at("trace_g_pinv"), 1.0 / (theory::kernel_ratio(N) * L)));
    std::vector<std::vector<double>> rows;
    for (const auto& run : r.runs.at(opt)) {
      if (run.snapshots.size() >= 2) rows.push_back(delta_k_ratio_check(run));
    }
    if (!rows.empty()) o["delta_k_ratio"] = to_json(detail::aggregate_rows(rows));
    d[to_string(opt)] = o;
  }
  return d;
}

struct ComparisonRow {
  std::string name;
  std::string description;
  double measured = 0.0;
  double predicted = 0.0;
  double error = 0.0;  ///< relative, or absolute when predicted == 0
  double tolerance = 0.0;
  bool pass = false;
};

inline ComparisonRow make_row(std::string name, std::string description, double measured, double predicted,
                              double tolerance) {
  ComparisonRow r{std::move(name), std::move(description), measured, predicted, 0.0, tolerance, false};
  r.error = predicted == 0.0 ? std::abs(measured) : std::abs(measured - predicted) / std::abs(predicted);
  r.pass = std::isfinite(r.error) && r.error <= tolerance;
  return r;
}

/// Row whose measured value is already a deviation (max over a window).
inline ComparisonRow make_max_row(std::string name, std::string description, double max_deviation,
                                  double tolerance) {
  ComparisonRow r{std::move(name), std::move(description), max_deviation, 0.0, max_deviation, tolerance, false};
  r.pass = std::isfinite(max_deviation) && max_deviation <= tolerance;
  return r;
}

inline nlohmann::json to_json(const ComparisonRow& r) {
  const auto num = [](double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); };
  return {{"name", r.name},         {"description", r.description}, {"measured", num(r.measured)},
          {"predicted", num(r.predicted)}, {"error", num(r.error)},   {"tolerance", r.tolerance},
          {"pass", r.pass}};
}

inline ComparisonRow comparison_row_from_json(const nlohmann::json& j) {
  const auto num = [&](const char* k) { return j.at(k).is_null() ? detail::kNaN : j.at(k).get<double>(); };
  return {j.at("name").get<std::string>(), j.at("description").get<std::string>(), num("measured"), num("predicted"),
          num("error"), j.at("tolerance").get<double>(), j.at("pass").get<bool>()};
}

namespace detail {

inline const nlohmann::json& field(const nlohmann::json& j, const std::string& path) {
  const nlohmann::json* cur = &j;
  std::size_t start = 0;
  while (start <= path.size()) {
    const std::size_t dot = path.find('.', start);
    const std::string key = path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (!cur->is_object() || !cur->contains(key)) throw ReportError("report: missing field " + path);
    cur = &cur->at(key);
    if (dot == std::string::npos) break;
    start = dot + 1;
  }
  return *cur;
}

inline std::vector<double> mean_series(const nlohmann::json& report, const std::string& path) {
  const auto& s = field(report, path);
  if (!s.is_object() || !s.contains("mean")) throw ReportError("report: missing field " + path + ".mean");
  auto v = read_num_array(s.at("mean"));
  if (v.empty()) throw ReportError("report: empty series " + path);
  return v;
}

/// max_t |a(t) / b(t) - 1| over t in [from, to).
inline double max_rel_dev(const std::vector<double>& a, const std::vector<double>& b, std::size_t from,
                          std::size_t to) {
  double m = 0.0;
  for (std::size_t t = from; t < to && t < a.size() && t < b.size(); ++t) {
    const double d = std::abs(a[t] / b[t] - 1.0);
    if (!std::isfinite(d)) return kNaN;
    m = std::max(m, d);
  }
  return m;
}

}  // namespace detail

/// Measured-vs-predicted table from a report.json document. Only the fields
/// system.{N, L, trace_o_sq}, config.{eta, loss.kind} and the series means
/// are read, so synthetic reports work too.
inline std::vector<ComparisonRow> compare_report(const nlohmann::json& report) {
  using detail::field;
  using detail::mean_series;
  const double N = field(report, "system.N").get<double>();
  const double L = field(report, "system.L").get<double>();
  const double tr = field(report, "system.trace_o_sq").get<double>();
  const double eta = field(report, "config.eta").get<double>();
  const LossKind kind = loss_kind_from_string(field(report, "config.loss.kind").get<std::string>());

  const auto gd_kgd = mean_series(report, "series.gd.k_gd");
  const auto qite_kqite = mean_series(report, "series.qite.k_qite");
  const auto qite_pinv = mean_series(report, "series.qite.trace_g_pinv");
  const std::size_t T = std::min(gd_kgd.size(), qite_kqite.size());

  std::vector<ComparisonRow> rows;
  rows.push_back(make_row("k_ratio_init", "ensemble-mean K_QITE / K_GD at initialization vs (N+1)/N",
                          qite_kqite[0] / gd_kgd[0], theory::kernel_ratio(N), 0.10));
  const double pinv_target = theory::kernel_ratio(N) * L;
  std::vector<double> pinv_ref(qite_pinv.size(), pinv_target);
  rows.push_back(make_max_row("trace_g_pinv", "max_t |mean Tr(g+) / ((N+1)/N L) - 1| along QITE",
                              detail::max_rel_dev(qite_pinv, pinv_ref, 0, qite_pinv.size()), 0.05));

  if (kind == LossKind::Quadratic) {
    rows.push_back(make_row("k_gd_init", "ensemble-mean K_GD at initialization vs L Tr(O^2) / N^2", gd_kgd[0],
                            theory::k_gd_prediction(L, tr, N), 0.15));
    std::vector<double> g0(T, gd_kgd[0]), q0(T, qite_kqite[0]);
    rows.push_back(make_max_row("k_gd_drift", "max_t |K_GD(t) / K_GD(0) - 1| along GD",
                                detail::max_rel_dev(gd_kgd, g0, 0, T), 0.05));
    rows.push_back(make_max_row("k_qite_drift", "max_t |K_QITE(t) / K_QITE(0) - 1| along QITE",
                                detail::max_rel_dev(qite_kqite, q0, 0, T), 0.05));
    const auto eps_gd = mean_series(report, "series.gd.epsilon");
    const auto eps_qite = mean_series(report, "series.qite.epsilon");
    const double kbar = detail::mean_of(gd_kgd, 0, gd_kgd.size());
    std::vector<double> pred(eps_gd.size());
    for (std::size_t t = 0; t < pred.size(); ++t) {
      pred[t] = eps_gd[t] * theory::epsilon_ratio_quadratic(eta, static_cast<double>(t), N, kbar);
    }
    rows.push_back(make_max_row("epsilon_overlay",
                                "max_t |eps_QITE(t) / (eps_GD(t) exp(-eta t Kbar_GD / N)) - 1|",
                                detail::max_rel_dev(eps_qite, pred, 0, std::min(pred.size(), eps_qite.size())),
                                0.10));
  } else {
    const auto gd_lam = mean_series(report, "series.gd.lambda_gd");
    const auto qite_lam = mean_series(report, "series.qite.lambda_qite");
    const auto eps_qite = mean_series(report, "series.qite.epsilon");
    const std::size_t late = T - std::max<std::size_t>(1, T / 4);
    const double lam_gd_late = detail::mean_of(gd_lam, late, T);
    rows.push_back(make_row("lambda_ratio_late", "late-window mean lambda_QITE / mean lambda_GD vs (N+1)/N",
                            detail::mean_of(qite_lam, late, T) / lam_gd_late, theory::kernel_ratio(N), 0.10));
    double fitted = detail::kNaN;
    if (T - late >= 10) {
      try {
        fitted = theory::fit_decay_rate(std::vector<double>(gd_kgd.begin() + static_cast<long>(late),
                                                            gd_kgd.begin() + static_cast<long>(T)),
                                        eta);
      } catch (const std::invalid_argument&) {
      }
    }
    rows.push_back(make_row("k_gd_decay_fit", "late-window fitted decay rate of ln K_GD / (-2 eta) vs mean lambda_GD",
                            fitted, lam_gd_late, 0.10));
    std::vector<double> ident;
    for (std::size_t t = late; t < T && t < eps_qite.size() && t < qite_lam.size(); ++t) {
      ident.push_back(2.0 * qite_lam[t] * eps_qite[t] / qite_kqite[t]);
    }
    rows.push_back(make_row("linear_identity_late", "late-window mean of 2 lambda_QITE eps_QITE / K_QITE vs 1",
                            detail::mean_of(ident, 0, ident.size()), 1.0, 0.10));
  }
  return rows;
}

inline std::string format_comparison(const std::vector<ComparisonRow>& rows) {
  std::ostringstream o;
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-22s %14s %14s %11s %9s  %s\n", "check", "measured", "predicted", "error",
                "tol", "result");
  o << buf;
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%-22s %14.6g %14.6g %11.4g %9.3g  %s\n", r.name.c_str(), r.measured, r.predicted,
                  r.error, r.tolerance, r.pass ? "PASS" : "FAIL");
    o << buf;
  }
  return o.str();
}

inline nlohmann::json make_report(const EnsembleResult& r) {
  nlohmann::json j;
  j["tool"] = {{"name", kToolName}, {"version", kToolVersion}};
  j["config_digest"] = r.digest;
  j["config"] = canonical_json(r.config);
  j["system"] = {{"N", r.N},
                 {"L", r.L},
                 {"trace_o_sq", r.trace_o_sq},
                 {"ground_energy", r.ground_energy},
                 {"target", r.target}};
  nlohmann::json failures = nlohmann::json::array();
  for (const auto& f : r.failures) failures.push_back({{"index", f.index}, {"seed", f.seed}, {"message", f.message}});
  const std::size_t ok = r.runs.empty() ? 0 : r.runs.begin()->second.size();
  j["seeds"] = {{"requested", r.config.seeds}, {"succeeded", ok}, {"failed", r.failures.size()}, {"failures", failures}};
  nlohmann::json series = nlohmann::json::object();
  for (const auto& [opt, ser] : r.series) {
    nlohmann::json s = nlohmann::json::object();
    for (const auto& [name, st] : ser) s[name] = to_json(st);
    series[to_string(opt)] = s;
  }
  j["series"] = series;
  j["diagnostics"] = make_diagnostics(r);
  nlohmann::json overlays = nlohmann::json::array();
  for (const auto& c : make_overlays(r)) overlays.push_back(theory::to_json(c));
  j["overlays"] = overlays;
  nlohmann::json cmp = nlohmann::json::array();
  if (r.series.count(Optimizer::GD) && r.series.count(Optimizer::QITE)) {
    for (const auto& row : compare_report(j)) cmp.push_back(to_json(row));
  }
  j["comparison"] = cmp;
  return j;
}

inline std::string csv_header(const std::string& digest) {
  std::string h = std::string("# ") + kToolName + " " + kToolVersion + " config_digest=" + digest + "\n";
  h += "optimizer,seed,step";
  for (const auto& f : snapshot_fields()) h += std::string(",") + f.name;
  return h + "\n";
}

/// Per-seed trajectories, one row per (optimizer, seed, step).
inline std::string trajectories_csv(const EnsembleResult& r) {
  std::string out = csv_header(r.digest);
  for (auto opt : r.config.optimizers) {
    const auto it = r.runs.find(opt);
    if (it == r.runs.end()) continue;
    for (const auto& run : it->second) {
      for (const auto& s : run.snapshots) {
        out += to_string(opt) + "," + std::to_string(run.seed) + "," + std::to_string(s.step);
        for (const auto& f : snapshot_fields()) out += "," + detail::fmt17(s.*f.member);
        out += "\n";
      }
    }
  }
  return out;
}

/// Analytic curves in the trajectories schema: optimizer = "theory:<kind>",
/// seed = 0, and the curve value in the column it predicts (other columns nan).
inline std::string overlay_csv(const std::vector<theory::AnalyticCurve>& curves, const std::string& digest) {
  std::string out = csv_header(digest);
  for (std::size_t i = 0; i < curves.size(); ++i) {
    const auto& c = curves[i];
    std::string column;
    switch (c.kind) {
      case theory::CurveKind::EpsilonQuadratic:
      case theory::CurveKind::EpsilonLinear: column = "epsilon"; break;
      case theory::CurveKind::KLinear: column = "k_qite"; break;
      default: column = "";
    }
    const std::string label = "theory:" + theory::to_string(c.kind) + ":" + std::to_string(i);
    for (std::size_t t = 0; t < c.values.size(); ++t) {
      out += label + ",0," + std::to_string(t);
      for (const auto& f : snapshot_fields()) {
        out += ",";
        out += (column == f.name || (column.empty() && std::string(f.name) == "epsilon")) ? detail::fmt17(c.values[t])
                                                                                         : "nan";
      }
      out += "\n";
    }
  }
  return out;
}

namespace detail {

inline std::string color_of(Optimizer o) { return o == Optimizer::GD ? "#1f77b4" : "#d62728"; }

inline std::vector<double> field_of(const TrajectoryRecord& r, double KernelSnapshot::*m) {
  std::vector<double> v;
  for (const auto& s : r.snapshots) v.push_back(s.*m);
  return v;
}

inline void add_runs(Chart& c, const EnsembleResult& r, Optimizer o, double KernelSnapshot::*m, bool abs_value) {
  const auto it = r.runs.find(o);
  if (it == r.runs.end()) return;
  for (const auto& run : it->second) {
    auto v = field_of(run, m);
    if (abs_value) {
      for (auto& x : v) x = std::abs(x);
    }
    c.series.push_back({"", color_of(o), v, false, 0.12, 1.0});
  }
}

}  // namespace detail

/// The four ensemble figures. Per-seed curves are drawn faintly beneath the
/// ensemble means.
inline std::vector<std::pair<std::string, Chart>> ensemble_figures(const EnsembleResult& r,
                                                                   const std::vector<theory::AnalyticCurve>& overlays) {
  const std::string tag = " (" + to_string(r.config.loss) + " loss, n=" + std::to_string(r.config.n) +
                          ", D=" + std::to_string(r.config.depth) + ")";
  Chart eps{"Residual error" + tag, "step", "epsilon", true, {}};
  Chart k{"Kernels" + tag, "step", "K", true, {}};
  Chart lam{"Relative meta-kernel" + tag, "step", "lambda", false, {}};
  Chart g{"Metric diagonal and pseudoinverse trace" + tag, "step", "trace", false, {}};
  for (auto o : r.config.optimizers) {
    const auto& ser = r.series.at(o);
    const std::string on = to_string(o);
    double KernelSnapshot::*own_k = o == Optimizer::GD ? &KernelSnapshot::k_gd : &KernelSnapshot::k_qite;
    double KernelSnapshot::*own_l = o == Optimizer::GD ? &KernelSnapshot::lambda_gd : &KernelSnapshot::lambda_qite;
    detail::add_runs(eps, r, o, &KernelSnapshot::epsilon, true);
    detail::add_runs(k, r, o, own_k, false);
    detail::add_runs(lam, r, o, own_l, false);
    detail::add_runs(g, r, o, &KernelSnapshot::trace_g, false);
    auto em = ser.at("epsilon").mean;
    for (auto& x : em) x = std::abs(x);
    eps.series.push_back({on + " mean |eps|", detail::color_of(o), em});
    k.series.push_back({on + " K_" + on, detail::color_of(o), ser.at(o == Optimizer::GD ? "k_gd" : "k_qite").mean});
    lam.series.push_back(
        {on + " lambda_" + on, detail::color_of(o), ser.at(o == Optimizer::GD ? "lambda_gd" : "lambda_qite").mean});
    g.series.push_back({on + " Tr(g)", detail::color_of(o), ser.at("trace_g").mean});
    g.series.push_back({on + " Tr(g+)", detail::color_of(o), ser.at("trace_g_pinv").mean, true});
  }
  const double N = static_cast<double>(r.N), L = static_cast<double>(r.L);
  const std::size_t T = static_cast<std::size_t>(r.config.steps) + 1;
  g.series.push_back({"(N+1)/N L", "#2ca02c", std::vector<double>(T, theory::kernel_ratio(N) * L), true});
  const auto gd = r.series.find(Optimizer::GD);
  for (const auto& c : overlays) {
    switch (c.kind) {
      case theory::CurveKind::EpsilonRatio:
        if (gd != r.series.end()) {
          std::vector<double> v = gd->second.at("epsilon").mean;
          for (std::size_t t = 0; t < v.size() && t < c.values.size(); ++t) v[t] = std::abs(v[t]) * c.values[t];
          eps.series.push_back({"theory qite from gd", "#2ca02c", v, true});
        }
        break;
      case theory::CurveKind::EpsilonLinear:
        eps.series.push_back({"theory qite", "#2ca02c", c.values, true});
        break;
      case theory::CurveKind::KLinear:
        k.series.push_back({"theory K_qite", "#2ca02c", c.values, true});
        break;
      default: break;
    }
  }
  return {{"epsilon.svg", eps}, {"k.svg", k}, {"lambda.svg", lam}, {"g_diag.svg", g}};
}

namespace detail {
inline void write_text(const std::filesystem::path& p, const std::string& s) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  out << s;
}
}  // namespace detail

/// Writes trajectories.csv, overlay.csv, report.json and the four SVGs into
/// the config's output directory. Returns the report.
inline nlohmann::json write_ensemble_outputs(const EnsembleResult& r, const std::filesystem::path& outdir) {
  std::filesystem::create_directories(outdir);
  const nlohmann::json report = make_report(r);
  std::vector<theory::AnalyticCurve> overlays;
  for (const auto& c : report.at("overlays")) overlays.push_back(theory::curve_from_json(c));
  detail::write_text(outdir / "trajectories.csv", trajectories_csv(r));
  detail::write_text(outdir / "overlay.csv", overlay_csv(overlays, r.digest));
  detail::write_text(outdir / "report.json", report.dump(2) + "\n");
  for (const auto& [name, chart] : ensemble_figures(r, overlays)) {
    std::string svg = render_svg(chart);
    svg.insert(svg.find('\n') + 1, "<!-- " + std::string(kToolName) + " " + kToolVersion +
                                       " config_digest=" + r.digest + " -->\n");
    detail::write_text(outdir / name, svg);
  }
  return report;
}

}  // namespace qite::lab
