#pragma once

// Hermitian observables as weighted Pauli sums with a cached dense matrix
// and spectrum.

#include "qite/pauli.hpp"
#include "qite/simcore.hpp"

#include <nlohmann/json.hpp>

#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace qite {

struct PauliTerm {
  double coeff = 0.0;
  PauliString pauli;
};

class Observable {
 public:
  /// Builds from terms on an n-qubit register. Identity terms are rejected
  /// so that every observable is traceless.
  Observable(int n, std::vector<PauliTerm> terms) : n_(n), terms_(std::move(terms)) {
    if (n_ < 1 || n_ > kMaxQubits) throw std::invalid_argument("Observable: bad qubit count");
    const auto dim = static_cast<Eigen::Index>(dimension_of(n_));
    dense_ = CMatrix::Zero(dim, dim);
    for (const auto& t : terms_) {
      if (t.pauli.num_qubits() != n_) throw std::invalid_argument("Observable: term width mismatch");
      if (t.pauli.is_identity()) throw std::invalid_argument("Observable: identity term makes O non-traceless");
      if (!std::isfinite(t.coeff)) throw std::invalid_argument("Observable: non-finite coefficient");
      dense_ += t.coeff * t.pauli.dense();
    }
    Eigen::SelfAdjointEigenSolver<CMatrix> es(dense_);
    if (es.info() != Eigen::Success) throw std::runtime_error("Observable: eigensolver failed");
    eigenvalues_ = es.eigenvalues();
    eigenvectors_ = es.eigenvectors();
  }

  int num_qubits() const { return n_; }
  std::size_t dim() const { return dimension_of(n_); }
  const std::vector<PauliTerm>& terms() const { return terms_; }
  const CMatrix& dense() const { return dense_; }
  const RVector& eigenvalues() const { return eigenvalues_; }
  const CMatrix& eigenvectors() const { return eigenvectors_; }

  double ground_energy() const { return eigenvalues_(0); }

  /// Tr(O^2) = N * sum_P c_P^2 after merging repeated Pauli strings.
  double trace_sq() const {
    std::map<PauliString, double> merged;
    for (const auto& t : terms_) merged[t.pauli] += t.coeff;
    double s = 0.0;
    for (const auto& [p, c] : merged) s += c * c;
    return static_cast<double>(dim()) * s;
  }

  /// <psi|O|psi> summed term by term, without the dense matrix.
  double expectation_from_terms(const StateVector& psi) const {
    detail::check_same_dim(static_cast<Eigen::Index>(dim()), psi.amplitudes().size(), "expectation_from_terms");
    double s = 0.0;
    for (const auto& t : terms_) s += t.coeff * psi.amplitudes().dot(t.pauli.apply(psi.amplitudes())).real();
    return s;
  }

 private:
  int n_;
  std::vector<PauliTerm> terms_;
  CMatrix dense_;
  RVector eigenvalues_;
  CMatrix eigenvectors_;
};

inline double expectation(const StateVector& state, const Observable& obs) {
  return expectation(state, obs.dense());
}

inline double ground_energy(const Observable& obs) { return obs.ground_energy(); }
inline double trace_o_squared(const Observable& obs) { return obs.trace_sq(); }

/// O = -sum_i [X_i X_{i+1} + Y_i Y_{i+1} + J (Z_i Z_{i+1} + Z_i)], periodic.
inline Observable build_xxz(int n, double j_coupling = 1.0) {
  if (n < 2) throw std::invalid_argument("build_xxz: n must be >= 2");
  std::vector<PauliTerm> terms;
  for (int i = 0; i < n; ++i) {
    const int k = (i + 1) % n;
    terms.push_back({-1.0, PauliString::pair(n, i, 'X', k, 'X')});
    terms.push_back({-1.0, PauliString::pair(n, i, 'Y', k, 'Y')});
    terms.push_back({-j_coupling, PauliString::pair(n, i, 'Z', k, 'Z')});
    terms.push_back({-j_coupling, PauliString::single(n, i, 'Z')});
  }
  return Observable(n, std::move(terms));
}

// {"terms": [{"coeff": c, "pauli": "XXI"}, ...]}
inline nlohmann::json to_json(const Observable& obs) {
  nlohmann::json terms = nlohmann::json::array();
  for (const auto& t : obs.terms()) terms.push_back({{"coeff", t.coeff}, {"pauli", t.pauli.str()}});
  return {{"n", obs.num_qubits()}, {"terms", terms}};
}

inline Observable observable_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("terms") || !j.at("terms").is_array()) {
    throw std::invalid_argument("observable JSON: missing \"terms\" array");
  }
  const auto& arr = j.at("terms");
  int n = j.contains("n") ? j.at("n").get<int>() : -1;
  if (arr.empty() && n < 0) throw std::invalid_argument("observable JSON: empty term list needs an explicit \"n\"");
  std::vector<PauliTerm> terms;
  for (const auto& t : arr) {
    if (!t.contains("coeff") || !t.contains("pauli")) {
      throw std::invalid_argument("observable JSON: term needs \"coeff\" and \"pauli\"");
    }
    PauliString p(t.at("pauli").get<std::string>());
    if (n < 0) n = p.num_qubits();
    if (p.num_qubits() != n) throw std::invalid_argument("observable JSON: inconsistent Pauli string lengths");
    terms.push_back({t.at("coeff").get<double>(), p});
  }
  return Observable(n, std::move(terms));
}

}  // namespace qite
