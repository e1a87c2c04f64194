#pragma once

// Haar-random unitaries and Monte Carlo estimates of metric-tensor moments
// over independent Haar circuit blocks.

#include "qite/pauli.hpp"
#include "qite/random.hpp"
#include "qite/simcore.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <array>
#include <atomic>
#include <bit>
#include <limits>
#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace qite {

/// Haar-distributed N x N unitary: QR of a complex Ginibre matrix with the
/// phases of diag(R) folded back into Q.
template <class Rng>
CMatrix sample_haar(std::size_t N, Rng& rng) {
  if (N < 2) throw std::invalid_argument("sample_haar: N must be >= 2");
  std::normal_distribution<double> normal(0.0, std::sqrt(0.5));
  const auto n = static_cast<Eigen::Index>(N);
  CMatrix z(n, n);
  for (Eigen::Index c = 0; c < n; ++c) {
    for (Eigen::Index r = 0; r < n; ++r) {
      const double re = normal(rng);
      const double im = normal(rng);
      z(r, c) = cplx(re, im);
    }
  }
  Eigen::HouseholderQR<CMatrix> qr(z);
  CMatrix q = qr.householderQ();
  const CMatrix& r = qr.matrixQR();
  for (Eigen::Index i = 0; i < n; ++i) {
    const cplx d = r(i, i);
    const double a = std::abs(d);
    q.col(i) *= a > 0.0 ? d / a : cplx(1.0, 0.0);
  }
  return q;
}

/// Power sums for mean / variance estimates with standard errors. Merging
/// is plain addition, so block-wise reduction in a fixed order is
/// deterministic.
struct MomentAccumulator {
  double count = 0.0;
  double s1 = 0.0;
  double s2 = 0.0;
  double s3 = 0.0;
  double s4 = 0.0;

  void add(double x) {
    const double x2 = x * x;
    count += 1.0;
    s1 += x;
    s2 += x2;
    s3 += x2 * x;
    s4 += x2 * x2;
  }
  void merge(const MomentAccumulator& o) {
    count += o.count;
    s1 += o.s1;
    s2 += o.s2;
    s3 += o.s3;
    s4 += o.s4;
  }

  double mean() const { return s1 / count; }
  double central2() const {
    const double m = mean();
    return s2 / count - m * m;
  }
  double central4() const {
    const double m = mean();
    const double m2 = m * m;
    return s4 / count - 4.0 * m * s3 / count + 6.0 * m2 * s2 / count - 3.0 * m2 * m2;
  }
  /// Unbiased sample variance.
  double variance() const { return count > 1.0 ? central2() * count / (count - 1.0) : 0.0; }
  double stderr_mean() const { return count > 1.0 ? std::sqrt(variance() / count) : 0.0; }
  /// Large-sample standard error of the variance estimate.
  double stderr_variance() const {
    if (count <= 1.0) return 0.0;
    const double c2 = central2();
    return std::sqrt(std::max(0.0, central4() - c2 * c2) / count);
  }
};

struct Estimate {
  double value = 0.0;
  double stderr = 0.0;
};

inline Estimate mean_estimate(const MomentAccumulator& a) { return {a.mean(), a.stderr_mean()}; }
inline Estimate variance_estimate(const MomentAccumulator& a) { return {a.variance(), a.stderr_variance()}; }

struct HaarMomentReport {
  std::size_t N = 0;
  std::size_t samples = 0;
  std::uint64_t seed = 0;
  std::string generator1;
  std::string generator2;
  Estimate diag_mean;
  Estimate diag_var;
  Estimate offdiag_mean;
  Estimate offdiag_var;
  Estimate second_moment;  ///< E[<X>^2]
  Estimate fourth_moment;  ///< E[<X>^4]
};

/// Closed-form targets for the moments above.
namespace haar_targets {

inline double diag_mean(double N) { return N / (N + 1.0); }
inline double diag_var(double N) { return (2.0 * N + 3.0) / (N * N * N + 2.0 * N * N + N); }
inline double offdiag_mean(double) { return 0.0; }
inline double offdiag_var(double N) { return 1.0 / (2.0 * N) + 1.0 / ((N + 1.0) * (N + 1.0)); }
inline double second_moment(double N) { return 1.0 / (N + 1.0); }
inline double fourth_moment_wick(double N) { return 3.0 / (N * (N + 1.0)); }

/// Exact Haar value of E[<X>^4] for a traceless involution (eigenvalues
/// +-1 with equal multiplicity) in dimension N.
inline double fourth_moment_exact(double N) { return 3.0 / ((N + 1.0) * (N + 3.0)); }
/// Exact Var(g_ll) = E<X>^4 - (E<X>^2)^2.
inline double diag_var_exact(double N) { return fourth_moment_exact(N) - second_moment(N) * second_moment(N); }

}  // namespace haar_targets

namespace detail {

inline int qubits_for_dimension(std::size_t N) {
  if (N < 2 || !std::has_single_bit(N)) {
    throw std::invalid_argument("Haar moments: N must be a power of two >= 2, got " + std::to_string(N));
  }
  return std::countr_zero(N);
}

inline void check_generator(const PauliString& p, int n) {
  if (p.num_qubits() != n) throw std::invalid_argument("Haar moments: generator width does not match log2(N)");
  if (p.is_identity()) throw std::invalid_argument("Haar moments: generator must be a traceless Pauli string");
}

inline constexpr std::size_t kHaarBlock = 2048;

// Runs body(block_index, rng, accumulators) for every block on `workers`
// threads and merges in block order.
template <std::size_t K, class Body>
std::array<MomentAccumulator, K> run_blocks(std::size_t samples, std::uint64_t seed, unsigned workers, Body body) {
  const std::size_t blocks = (samples + kHaarBlock - 1) / kHaarBlock;
  std::vector<std::array<MomentAccumulator, K>> partial(blocks);
  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (std::size_t b = next++; b < blocks; b = next++) {
      std::mt19937_64 rng(derive_seed(seed, b));
      const std::size_t count = std::min(kHaarBlock, samples - b * kHaarBlock);
      for (std::size_t i = 0; i < count; ++i) body(rng, partial[b]);
    }
  };
  workers = std::max(1U, std::min<unsigned>(workers, static_cast<unsigned>(std::max<std::size_t>(blocks, 1))));
  std::vector<std::thread> pool;
  for (unsigned w = 1; w < workers; ++w) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  std::array<MomentAccumulator, K> total{};
  for (const auto& p : partial) {
    for (std::size_t k = 0; k < K; ++k) total[k].merge(p[k]);
  }
  return total;
}

}  // namespace detail

/// Draws independent Haar blocks U_before, U_between, U_after and samples
///   g_11 = Re<d1|d1> - |<psi|d1>|^2,
///   g_12 = Re(<d1|d2> - <d1|psi><psi|d2>),
/// with |d1> = -i U_after U_between X1 U_before|0>, |d2> = -i U_after X2
/// U_between U_before|0>, |psi> = U_after U_between U_before|0>.
inline HaarMomentReport mc_metric_moments(std::size_t N, const PauliString& x1, const PauliString& x2,
                                          std::size_t samples, std::uint64_t seed, unsigned workers = 1) {
  const int n = detail::qubits_for_dimension(N);
  detail::check_generator(x1, n);
  detail::check_generator(x2, n);
  if (samples < 2) throw std::invalid_argument("mc_metric_moments: need >= 2 samples");
  const cplx mi(0.0, -1.0);
  const auto acc = detail::run_blocks<4>(samples, seed, workers, [&](std::mt19937_64& rng, auto& out) {
    const CMatrix before = sample_haar(N, rng);
    const CMatrix between = sample_haar(N, rng);
    const CMatrix after = sample_haar(N, rng);
    const CVector a = before.col(0);
    const CVector b = between * a;
    const CVector psi = after * b;
    const CVector d1 = mi * (after * (between * x1.apply(a)));
    const CVector d2 = mi * (after * x2.apply(b));
    const cplx p1 = psi.dot(d1);  // <psi|d1>
    const cplx p2 = psi.dot(d2);
    const double g11 = d1.squaredNorm() - std::norm(p1);
    const double g12 = (d1.dot(d2) - std::conj(p1) * p2).real();
    const double x = a.dot(x1.apply(a)).real();
    out[0].add(g11);
    out[1].add(g12);
    out[2].add(x * x);
    out[3].add(x * x * x * x);
  });
  HaarMomentReport r;
  r.N = N;
  r.samples = samples;
  r.seed = seed;
  r.generator1 = x1.str();
  r.generator2 = x2.str();
  r.diag_mean = mean_estimate(acc[0]);
  r.diag_var = variance_estimate(acc[0]);
  r.offdiag_mean = mean_estimate(acc[1]);
  r.offdiag_var = variance_estimate(acc[1]);
  r.second_moment = mean_estimate(acc[2]);
  r.fourth_moment = mean_estimate(acc[3]);
  return r;
}

struct ExpectationMoments {
  Estimate second;
  Estimate fourth;
};

/// E[<0|U^dag X U|0>^2] and E[<0|U^dag X U|0>^4] over Haar U.
inline ExpectationMoments mc_fourth_moment(std::size_t N, const PauliString& x, std::size_t samples,
                                           std::uint64_t seed, unsigned workers = 1) {
  const int n = detail::qubits_for_dimension(N);
  detail::check_generator(x, n);
  if (samples < 2) throw std::invalid_argument("mc_fourth_moment: need >= 2 samples");
  const auto acc = detail::run_blocks<2>(samples, seed, workers, [&](std::mt19937_64& rng, auto& out) {
    const CMatrix u = sample_haar(N, rng);
    const CVector a = u.col(0);
    const double v = a.dot(x.apply(a)).real();
    const double v2 = v * v;
    out[0].add(v2);
    out[1].add(v2 * v2);
  });
  return {mean_estimate(acc[0]), mean_estimate(acc[1])};
}

inline nlohmann::json to_json(const Estimate& e) { return {{"value", e.value}, {"stderr", e.stderr}}; }

inline Estimate estimate_from_json(const nlohmann::json& j) {
  return {j.at("value").get<double>(), j.at("stderr").get<double>()};
}

namespace detail {

inline nlohmann::json check_entry(const Estimate& e, double target, double rel_tol) {
  const double dev = e.value - target;
  const double sigmas = e.stderr > 0.0 ? std::abs(dev) / e.stderr : (dev == 0.0 ? 0.0 : std::numeric_limits<double>::infinity());
  nlohmann::json j = to_json(e);
  j["target"] = target;
  j["deviation_sigmas"] = std::isfinite(sigmas) ? nlohmann::json(sigmas) : nlohmann::json(nullptr);
  j["pass_3sigma"] = sigmas <= 3.0;
  if (rel_tol > 0.0) {
    const double rel = std::abs(dev) / std::abs(target);
    j["relative_error"] = rel;
    j["relative_tolerance"] = rel_tol;
    j["pass_relative"] = rel <= rel_tol;
  }
  return j;
}

}  // namespace detail

/// Report with per-quantity targets, 3-sigma verdicts and, where a relative
/// tolerance applies, relative-error verdicts.
inline nlohmann::json to_json(const HaarMomentReport& r) {
  const double N = static_cast<double>(r.N);
  nlohmann::json j;
  j["N"] = r.N;
  j["samples"] = r.samples;
  j["seed"] = r.seed;
  j["generator1"] = r.generator1;
  j["generator2"] = r.generator2;
  j["diag_mean"] = detail::check_entry(r.diag_mean, haar_targets::diag_mean(N), 0.01);
  j["diag_var"] = detail::check_entry(r.diag_var, haar_targets::diag_var(N), 0.10);
  j["diag_var"]["exact_finite_n"] = haar_targets::diag_var_exact(N);
  j["offdiag_mean"] = detail::check_entry(r.offdiag_mean, haar_targets::offdiag_mean(N), 0.0);
  j["offdiag_var"] = detail::check_entry(r.offdiag_var, haar_targets::offdiag_var(N), 0.10);
  j["second_moment"] = detail::check_entry(r.second_moment, haar_targets::second_moment(N), 0.01);
  j["fourth_moment"] = detail::check_entry(r.fourth_moment, haar_targets::fourth_moment_wick(N), 0.15);
  j["fourth_moment"]["exact_finite_n"] = haar_targets::fourth_moment_exact(N);
  return j;
}

inline HaarMomentReport haar_report_from_json(const nlohmann::json& j) {
  HaarMomentReport r;
  r.N = j.at("N").get<std::size_t>();
  r.samples = j.at("samples").get<std::size_t>();
  r.seed = j.at("seed").get<std::uint64_t>();
  r.generator1 = j.at("generator1").get<std::string>();
  r.generator2 = j.at("generator2").get<std::string>();
  r.diag_mean = estimate_from_json(j.at("diag_mean"));
  r.diag_var = estimate_from_json(j.at("diag_var"));
  r.offdiag_mean = estimate_from_json(j.at("offdiag_mean"));
  r.offdiag_var = estimate_from_json(j.at("offdiag_var"));
  r.second_moment = estimate_from_json(j.at("second_moment"));
  r.fourth_moment = estimate_from_json(j.at("fourth_moment"));
  return r;
}

}  // namespace qite
