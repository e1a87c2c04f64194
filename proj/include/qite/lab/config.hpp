#pragma once

// Experiment configuration: parsing, validation, canonical form and digest.

#include "qite/ansatz.hpp"
#include "qite/dynamics.hpp"
#include "qite/kernels.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

namespace qite::lab {

inline constexpr const char* kToolName = "qite-lab";
inline constexpr const char* kToolVersion = "0.1.0";

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct ExperimentConfig {
  int n = 3;
  int depth = 6;
  double j = 1.0;
  LossKind loss = LossKind::Quadratic;
  /// Quadratic target O0. When absent, O0 = target_fraction * O_min.
  std::optional<double> target;
  double target_fraction = 0.5;
  std::vector<Optimizer> optimizers{Optimizer::GD, Optimizer::QITE};
  double eta = 1e-3;
  int steps = 200;
  int seeds = 50;
  std::uint64_t master_seed = 2024;
  double rcond = kDefaultRcond;
  std::string outdir = "out";
  unsigned workers = 0;  ///< 0 = hardware concurrency; not part of the digest
  BrickworkOrder brickwork = BrickworkOrder::EvenThenOdd;
  // sweep axes for the scaling command
  std::vector<int> n_values;
  std::vector<int> depth_values;

  void validate() const {
    const auto fail = [](const std::string& m) { throw ConfigError("config: " + m); };
    if (n < 2 || n > 10) fail("n must be in [2, 10]");
    if (depth < 1) fail("depth must be >= 1");
    if (!std::isfinite(j)) fail("j must be finite");
    if (loss == LossKind::General) fail("loss kind 'general' needs code-level f and f'; use quadratic or linear");
    if (target && !std::isfinite(*target)) fail("loss.target must be finite");
    if (!std::isfinite(target_fraction)) fail("loss.target_fraction must be finite");
    if (optimizers.empty()) fail("optimizers must be non-empty");
    if (!(eta > 0.0) || !std::isfinite(eta)) fail("eta must be > 0");
    if (steps < 0) fail("steps must be >= 0");
    if (seeds < 1) fail("seeds must be >= 1");
    if (!(rcond > 0.0 && rcond < 1.0)) fail("rcond must be in (0, 1)");
    if (outdir.empty()) fail("outdir must be non-empty");
    for (int v : n_values) {
      if (v < 2 || v > 10) fail("n_values entries must be in [2, 10]");
    }
    for (int v : depth_values) {
      if (v < 1) fail("depth_values entries must be >= 1");
    }
  }

  unsigned effective_workers() const {
    if (workers > 0) return workers;
    return std::max(1U, std::thread::hardware_concurrency());
  }

  std::size_t dim() const { return std::size_t{1} << n; }
  std::size_t param_count() const { return static_cast<std::size_t>(2 * n * depth); }
};

inline std::string to_string(BrickworkOrder b) {
  return b == BrickworkOrder::EvenThenOdd ? "even_then_odd" : "alternate";
}

inline BrickworkOrder brickwork_from_string(const std::string& s) {
  if (s == "even_then_odd") return BrickworkOrder::EvenThenOdd;
  if (s == "alternate") return BrickworkOrder::AlternatePerLayer;
  throw ConfigError("config: unknown brickwork \"" + s + "\"");
}

/// Canonical JSON of every field that affects results.
inline nlohmann::json canonical_json(const ExperimentConfig& c) {
  nlohmann::json loss = {{"kind", to_string(c.loss)}};
  if (c.loss == LossKind::Quadratic) {
    if (c.target) {
      loss["target"] = *c.target;
    } else {
      loss["target_fraction"] = c.target_fraction;
    }
  }
  nlohmann::json opts = nlohmann::json::array();
  for (auto o : c.optimizers) opts.push_back(to_string(o));
  nlohmann::json j = {{"n", c.n},
                      {"depth", c.depth},
                      {"j", c.j},
                      {"loss", loss},
                      {"optimizers", opts},
                      {"eta", c.eta},
                      {"steps", c.steps},
                      {"seeds", c.seeds},
                      {"master_seed", c.master_seed},
                      {"rcond", c.rcond},
                      {"brickwork", to_string(c.brickwork)}};
  if (!c.n_values.empty()) j["n_values"] = c.n_values;
  if (!c.depth_values.empty()) j["depth_values"] = c.depth_values;
  return j;
}

/// Canonical form plus run-local settings (output directory, workers).
inline nlohmann::json to_json(const ExperimentConfig& c) {
  nlohmann::json j = canonical_json(c);
  j["outdir"] = c.outdir;
  j["workers"] = c.workers;
  return j;
}

/// 64-bit FNV-1a.
inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string config_digest(const ExperimentConfig& c) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(canonical_json(c).dump())));
  return buf;
}

inline ExperimentConfig config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("config: top level must be an object");
  static const std::vector<std::string> known = {"n",     "depth", "j",      "loss",        "optimizers",
                                                 "eta",   "steps", "seeds",  "master_seed", "rcond",
                                                 "outdir", "workers", "brickwork", "n_values", "depth_values"};
  for (const auto& [key, _] : j.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end()) throw ConfigError("config: unknown key \"" + key + "\"");
  }
  ExperimentConfig c;
  try {
    if (j.contains("n")) c.n = j.at("n").get<int>();
    if (j.contains("depth")) c.depth = j.at("depth").get<int>();
    if (j.contains("j")) c.j = j.at("j").get<double>();
    if (j.contains("loss")) {
      const auto& l = j.at("loss");
      c.loss = loss_kind_from_string(l.at("kind").get<std::string>());
      if (l.contains("target") && !l.at("target").is_null()) c.target = l.at("target").get<double>();
      if (l.contains("target_fraction")) c.target_fraction = l.at("target_fraction").get<double>();
    }
    if (j.contains("optimizers")) {
      c.optimizers.clear();
      for (const auto& o : j.at("optimizers")) c.optimizers.push_back(optimizer_from_string(o.get<std::string>()));
    }
    if (j.contains("eta")) c.eta = j.at("eta").get<double>();
    if (j.contains("steps")) c.steps = j.at("steps").get<int>();
    if (j.contains("seeds")) c.seeds = j.at("seeds").get<int>();
    if (j.contains("master_seed")) c.master_seed = j.at("master_seed").get<std::uint64_t>();
    if (j.contains("rcond")) c.rcond = j.at("rcond").get<double>();
    if (j.contains("outdir")) c.outdir = j.at("outdir").get<std::string>();
    if (j.contains("workers")) c.workers = j.at("workers").get<unsigned>();
    if (j.contains("brickwork")) c.brickwork = brickwork_from_string(j.at("brickwork").get<std::string>());
    if (j.contains("n_values")) c.n_values = j.at("n_values").get<std::vector<int>>();
    if (j.contains("depth_values")) c.depth_values = j.at("depth_values").get<std::vector<int>>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  } catch (const ConfigError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  c.validate();
  return c;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config: " + path + ": " + e.what());
  }
  return config_from_json(j);
}

}  // namespace qite::lab
