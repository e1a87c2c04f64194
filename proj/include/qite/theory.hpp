#pragma once

// Closed-form ensemble predictions for GD vs QITE convergence.

#include <nlohmann/json.hpp>

#include <cmath>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace qite::theory {

/// Mean K_GD at initialization: L Tr(O^2) / N^2.
inline double k_gd_prediction(double L, double trace_o_sq, double N) {
  if (!(L > 0.0 && trace_o_sq > 0.0 && N > 0.0)) throw std::invalid_argument("k_gd_prediction: inputs must be positive");
  return L * trace_o_sq / (N * N);
}

/// Mean K_QITE / K_GD, (N + 1) / N.
inline double kernel_ratio(double N) { return (N + 1.0) / N; }

/// eps(t) = eps0 exp(-eta K t).
inline double epsilon_quadratic(double eps0, double k_bar, double eta, double t) {
  return eps0 * std::exp(-eta * k_bar * t);
}

/// eps_QITE(t) / eps_GD(t) = exp(-eta t K_GD / N).
inline double epsilon_ratio_quadratic(double eta, double t, double N, double k_gd_bar) {
  return std::exp(-eta * t * k_gd_bar / N);
}

struct LinearPrediction {
  double k_gd = 0.0;
  double k_qite = 0.0;
  double epsilon_qite = 0.0;
};

/// K_GD(t) = K0 e^{-2 eta lambda t}, K_QITE(t) = K_GD(t) e^{-2 eta t lambda / N},
/// eps_QITE(t) = N / (2 (N + 1) lambda) K_QITE(t).
inline LinearPrediction linear_predictions(double k0, double lambda_gd, double eta, double N, double t) {
  if (!(lambda_gd > 0.0)) throw std::invalid_argument("linear_predictions: lambda_GD must be > 0");
  LinearPrediction p;
  p.k_gd = k0 * std::exp(-2.0 * eta * lambda_gd * t);
  p.k_qite = p.k_gd * std::exp(-2.0 * eta * t * lambda_gd / N);
  p.epsilon_qite = N / (2.0 * (N + 1.0) * lambda_gd) * p.k_qite;
  return p;
}

enum class GapKind { Quadratic, Linear };

/// ln eps_GD - ln eps_QITE. `rate` is K_GD for the quadratic loss and
/// lambda_GD for the linear loss.
inline double delta_log(double eta, double t, double N, double rate, GapKind kind) {
  if (kind == GapKind::Quadratic) return eta * t * rate / N;
  return std::log((N + 1.0) / N) + 2.0 * eta * t * rate / N;
}

inline double delta_rel(double delta_log_value) { return 1.0 - std::exp(-delta_log_value); }

/// Least-squares slope of ln(series) against the step index, divided by
/// -2 eta. For series = K_GD(t) this estimates lambda_GD.
inline double fit_decay_rate(const std::vector<double>& series, double eta) {
  if (series.size() < 10) throw std::invalid_argument("fit_decay_rate: need >= 10 points");
  if (!(eta > 0.0)) throw std::invalid_argument("fit_decay_rate: eta must be > 0");
  const double n = static_cast<double>(series.size());
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < series.size(); ++i) {
    if (!(series[i] > 0.0)) {
      throw std::invalid_argument("fit_decay_rate: entry " + std::to_string(i) + " is not strictly positive");
    }
    const double x = static_cast<double>(i);
    const double y = std::log(series[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  return slope / (-2.0 * eta);
}

enum class CurveKind { EpsilonQuadratic, EpsilonRatio, KLinear, EpsilonLinear, DeltaLog, DeltaRel };

inline std::string to_string(CurveKind k) {
  switch (k) {
    case CurveKind::EpsilonQuadratic: return "epsilon_quadratic";
    case CurveKind::EpsilonRatio: return "epsilon_ratio";
    case CurveKind::KLinear: return "k_linear";
    case CurveKind::EpsilonLinear: return "epsilon_linear";
    case CurveKind::DeltaLog: return "delta_log";
    case CurveKind::DeltaRel: return "delta_rel";
  }
  return "?";
}

inline CurveKind curve_kind_from_string(const std::string& s) {
  for (auto k : {CurveKind::EpsilonQuadratic, CurveKind::EpsilonRatio, CurveKind::KLinear, CurveKind::EpsilonLinear,
                 CurveKind::DeltaLog, CurveKind::DeltaRel}) {
    if (to_string(k) == s) return k;
  }
  throw std::invalid_argument("unknown curve kind \"" + s + "\"");
}

struct AnalyticCurve {
  CurveKind kind = CurveKind::EpsilonQuadratic;
  std::map<std::string, double> params;
  std::vector<double> values;  ///< indexed by step t = 0, 1, ...

  friend bool operator==(const AnalyticCurve&, const AnalyticCurve&) = default;
};

namespace detail {
inline double need(const std::map<std::string, double>& p, const std::string& key) {
  const auto it = p.find(key);
  if (it == p.end()) throw std::invalid_argument("analytic curve: missing parameter \"" + key + "\"");
  return it->second;
}
}  // namespace detail

/// Evaluates a curve of the given kind for t = 0..steps. Required params:
///   epsilon_quadratic: eps0, k_bar, eta
///   epsilon_ratio:     eta, N, k_gd
///   k_linear:          k0, lambda_gd, eta, N      (K_QITE prediction)
///   epsilon_linear:    k0, lambda_gd, eta, N      (eps_QITE prediction)
///   delta_log / delta_rel: eta, N, rate, linear (0 or 1)
inline AnalyticCurve make_curve(CurveKind kind, std::map<std::string, double> params, int steps) {
  AnalyticCurve c{kind, std::move(params), {}};
  const auto& p = c.params;
  c.values.reserve(static_cast<std::size_t>(steps) + 1);
  for (int t = 0; t <= steps; ++t) {
    const double tt = t;
    double v = 0.0;
    switch (kind) {
      case CurveKind::EpsilonQuadratic:
        v = epsilon_quadratic(detail::need(p, "eps0"), detail::need(p, "k_bar"), detail::need(p, "eta"), tt);
        break;
      case CurveKind::EpsilonRatio:
        v = epsilon_ratio_quadratic(detail::need(p, "eta"), tt, detail::need(p, "N"), detail::need(p, "k_gd"));
        break;
      case CurveKind::KLinear:
        v = linear_predictions(detail::need(p, "k0"), detail::need(p, "lambda_gd"), detail::need(p, "eta"),
                               detail::need(p, "N"), tt)
                .k_qite;
        break;
      case CurveKind::EpsilonLinear:
        v = linear_predictions(detail::need(p, "k0"), detail::need(p, "lambda_gd"), detail::need(p, "eta"),
                               detail::need(p, "N"), tt)
                .epsilon_qite;
        break;
      case CurveKind::DeltaLog:
      case CurveKind::DeltaRel: {
        const GapKind g = detail::need(p, "linear") != 0.0 ? GapKind::Linear : GapKind::Quadratic;
        const double dl = delta_log(detail::need(p, "eta"), tt, detail::need(p, "N"), detail::need(p, "rate"), g);
        v = kind == CurveKind::DeltaLog ? dl : delta_rel(dl);
        break;
      }
    }
    c.values.push_back(v);
  }
  return c;
}

inline nlohmann::json to_json(const AnalyticCurve& c) {
  return {{"kind", to_string(c.kind)}, {"params", c.params}, {"values", c.values}};
}

inline AnalyticCurve curve_from_json(const nlohmann::json& j) {
  AnalyticCurve c;
  c.kind = curve_kind_from_string(j.at("kind").get<std::string>());
  c.params = j.at("params").get<std::map<std::string, double>>();
  c.values = j.at("values").get<std::vector<double>>();
  return c;
}

}  // namespace qite::theory
