#include "qite/lab/equiv.hpp"
#include "qite/lab/report.hpp"
#include "qite/lab/scaling.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace qite;
using namespace qite::lab;

namespace {

ExperimentConfig small_config(LossKind loss = LossKind::Quadratic) {
  ExperimentConfig c;
  c.n = 2;
  c.depth = 1;
  c.loss = loss;
  c.steps = 12;
  c.seeds = 4;
  c.master_seed = 5;
  c.workers = 1;
  return c;
}

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::filesystem::path temp_dir(const std::string& name) {
  const auto p = std::filesystem::temp_directory_path() / ("qite_lab_test_" + name);
  std::filesystem::remove_all(p);
  return p;
}

nlohmann::json stats_json(const std::vector<double>& mean) {
  return {{"mean", mean}, {"stderr", std::vector<double>(mean.size(), 0.0)},
          {"count", std::vector<int>(mean.size(), 1)}};
}

}  // namespace

TEST(Config, DefaultsAndParsing) {
  const ExperimentConfig d = config_from_json(nlohmann::json::object());
  EXPECT_EQ(d.n, 3);
  EXPECT_EQ(d.depth, 6);
  EXPECT_EQ(d.steps, 200);
  EXPECT_EQ(d.seeds, 50);
  EXPECT_EQ(d.eta, 1e-3);
  EXPECT_EQ(d.param_count(), 36u);
  const auto j = nlohmann::json::parse(R"({"n": 4, "depth": 2, "loss": {"kind": "linear"},
                                           "optimizers": ["qite"], "seeds": 7, "brickwork": "alternate"})");
  const ExperimentConfig c = config_from_json(j);
  EXPECT_EQ(c.n, 4);
  EXPECT_EQ(c.loss, LossKind::Linear);
  ASSERT_EQ(c.optimizers.size(), 1u);
  EXPECT_EQ(c.optimizers[0], Optimizer::QITE);
  EXPECT_EQ(c.brickwork, BrickworkOrder::AlternatePerLayer);
  EXPECT_EQ(config_from_json(to_json(c)).n, 4);
}

TEST(Config, RejectsInvalidInput) {
  const auto bad = [](const char* text) { return config_from_json(nlohmann::json::parse(text)); };
  EXPECT_THROW(bad(R"({"eta": 0})"), ConfigError);
  EXPECT_THROW(bad(R"({"n": 1})"), ConfigError);
  EXPECT_THROW(bad(R"({"seeds": 0})"), ConfigError);
  EXPECT_THROW(bad(R"({"optimizers": []})"), ConfigError);
  EXPECT_THROW(bad(R"({"optimizers": ["adam"]})"), ConfigError);
  EXPECT_THROW(bad(R"({"loss": {"kind": "general"}})"), ConfigError);
  EXPECT_THROW(bad(R"({"n": "three"})"), ConfigError);
  EXPECT_THROW(bad(R"([1, 2])"), ConfigError);
  try {
    bad(R"({"nn": 3})");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("nn"), std::string::npos);
  }
  EXPECT_THROW(load_config("/nonexistent/config.json"), ConfigError);
}

TEST(Config, DigestIgnoresRunLocalSettings) {
  ExperimentConfig a = small_config(), b = small_config();
  b.outdir = "elsewhere";
  b.workers = 7;
  EXPECT_EQ(config_digest(a), config_digest(b));
  EXPECT_EQ(config_digest(a).size(), 16u);
  b.eta = 2e-3;
  EXPECT_NE(config_digest(a), config_digest(b));
  EXPECT_EQ(config_digest(a), config_digest(config_from_json(to_json(a))));
  EXPECT_EQ(fnv1a64(""), 0xcbf29ce484222325ULL);
  EXPECT_EQ(fnv1a64("a"), 0xaf63dc4c8601ec8cULL);
}

TEST(Experiment, QuadraticTargetDefaultsToFractionOfGroundEnergy) {
  ExperimentConfig c = small_config();
  const Experiment ex = make_experiment(c);
  EXPECT_NEAR(ex.loss.target, 0.5 * ground_energy(build_xxz(2, 1.0)), 1e-12);
  c.target = -1.25;
  EXPECT_EQ(make_experiment(c).loss.target, -1.25);
}

TEST(Ensemble, SingleSeedEqualsTrajectory) {
  ExperimentConfig c = small_config();
  c.seeds = 1;
  const EnsembleResult r = run_ensemble(c);
  const Experiment ex = make_experiment(c);
  const auto traj = run_trajectory(ex.ansatz, ex.obs, ex.loss, Optimizer::QITE, c.eta, c.steps,
                                   derive_seed(c.master_seed, 0));
  const SeriesStats& k = r.series.at(Optimizer::QITE).at("k_qite");
  ASSERT_EQ(k.mean.size(), traj.snapshots.size());
  for (std::size_t t = 0; t < k.mean.size(); ++t) {
    EXPECT_EQ(k.mean[t], traj.snapshots[t].k_qite);
    EXPECT_EQ(k.stderr[t], 0.0);
    EXPECT_EQ(k.count[t], 1);
  }
}

TEST(Ensemble, SharedInitialParametersAcrossOptimizers) {
  const EnsembleResult r = run_ensemble(small_config());
  const auto& gd = r.runs.at(Optimizer::GD);
  const auto& q = r.runs.at(Optimizer::QITE);
  ASSERT_EQ(gd.size(), 4u);
  for (std::size_t i = 0; i < gd.size(); ++i) {
    EXPECT_EQ(gd[i].seed, q[i].seed);
    EXPECT_EQ(gd[i].theta_initial.values(), q[i].theta_initial.values());
    EXPECT_TRUE(testutil::same_snapshot(gd[i].snapshots[0], q[i].snapshots[0]));
  }
}

TEST(Ensemble, AggregateSkipsNonFiniteEntries) {
  TrajectoryRecord a, b;
  a.snapshots.resize(1);
  b.snapshots.resize(1);
  a.snapshots[0].lambda_gd = 2.0;
  b.snapshots[0].lambda_gd = std::nan("");
  const SeriesStats s = aggregate({a, b}, &KernelSnapshot::lambda_gd);
  EXPECT_EQ(s.mean[0], 2.0);
  EXPECT_EQ(s.count[0], 1);
}

TEST(Ensemble, CsvIsByteIdenticalAcrossRunsAndWorkerCounts) {
  ExperimentConfig c = small_config();
  const std::string a = trajectories_csv(run_ensemble(c));
  c.workers = 3;
  const std::string b = trajectories_csv(run_ensemble(c));
  EXPECT_EQ(a, b);
  c.workers = 1;
  EXPECT_EQ(a, trajectories_csv(run_ensemble(c)));
}

TEST(Ensemble, CsvHeaderColumns) {
  const EnsembleResult r = run_ensemble(small_config());
  const std::string csv = trajectories_csv(r);
  std::istringstream in(csv);
  std::string comment, header, row;
  std::getline(in, comment);
  std::getline(in, header);
  std::getline(in, row);
  EXPECT_EQ(comment, "# qite-lab 0.1.0 config_digest=" + r.digest);
  EXPECT_EQ(header,
            "optimizer,seed,step,epsilon,k_gd,k_qite,mu_gd,mu_qite,lambda_gd,lambda_qite,trace_g,offdiag_fro,energy,"
            "trace_g_pinv,diag_approx");
  EXPECT_EQ(row.rfind("gd,", 0), 0u);
  // 2 optimizers x 4 seeds x 13 snapshots, plus 2 header lines
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 2 + 2 * 4 * 13);
}

TEST(Ensemble, DivergingSeedsAreExcludedOrAbort) {
  ExperimentConfig c = small_config();
  c.seeds = 20;
  Experiment ex = make_experiment(c);
  // Probe the initial energies to pick a threshold that breaks exactly one seed.
  std::vector<double> e0;
  for (int i = 0; i < c.seeds; ++i) {
    e0.push_back(expectation(prepare_state(ex.ansatz, initial_parameters(ex.ansatz, derive_seed(c.master_seed, i))),
                             ex.obs));
  }
  std::vector<double> sorted = e0;
  std::sort(sorted.begin(), sorted.end());
  const double cut = 0.5 * (sorted[18] + sorted[19]);
  ex.loss = LossSpec::general([](double e) { return e; }, [cut](double e) { return e > cut ? std::nan("") : 1.0; });
  const EnsembleResult r = run_ensemble(c, ex);
  ASSERT_EQ(r.failures.size(), 1u);
  const auto bad = static_cast<std::size_t>(std::max_element(e0.begin(), e0.end()) - e0.begin());
  EXPECT_EQ(r.failures[0].index, static_cast<int>(bad));
  EXPECT_EQ(r.runs.at(Optimizer::GD).size(), 19u);
  EXPECT_EQ(r.runs.at(Optimizer::QITE).size(), 19u);
  for (const auto& run : r.runs.at(Optimizer::GD)) EXPECT_NE(run.seed, r.failures[0].seed);
  EXPECT_EQ(make_report(r)["seeds"]["failed"].get<int>(), 1);

  const double cut3 = 0.5 * (sorted[16] + sorted[17]);
  ex.loss = LossSpec::general([](double e) { return e; }, [cut3](double e) { return e > cut3 ? std::nan("") : 1.0; });
  EXPECT_THROW(run_ensemble(c, ex), EnsembleAborted);
}

TEST(Compare, SyntheticQuadraticReportMatchesExactly) {
  const double N = 8, L = 36, tr = 96, eta = 1e-3, T = 200;
  const double k = theory::k_gd_prediction(L, tr, N);
  std::vector<double> kg, kq, pinv, eg, eq;
  for (int t = 0; t <= T; ++t) {
    kg.push_back(k);
    kq.push_back(k * theory::kernel_ratio(N));
    pinv.push_back(theory::kernel_ratio(N) * L);
    eg.push_back(theory::epsilon_quadratic(3.0, k, eta, t));
    eq.push_back(eg.back() * theory::epsilon_ratio_quadratic(eta, t, N, k));
  }
  const nlohmann::json report = {
      {"system", {{"N", N}, {"L", L}, {"trace_o_sq", tr}}},
      {"config", {{"eta", eta}, {"loss", {{"kind", "quadratic"}}}}},
      {"series",
       {{"gd", {{"k_gd", stats_json(kg)}, {"epsilon", stats_json(eg)}}},
        {"qite", {{"k_qite", stats_json(kq)}, {"trace_g_pinv", stats_json(pinv)}, {"epsilon", stats_json(eq)}}}}}};
  const auto rows = compare_report(report);
  ASSERT_EQ(rows.size(), 6u);
  for (const auto& r : rows) {
    EXPECT_LT(r.error, 1e-12) << r.name;
    EXPECT_TRUE(r.pass) << r.name;
  }
}

TEST(Compare, SyntheticLinearReportMatchesExactly) {
  const double N = 8, L = 36, eta = 1e-3, lam = 6.0, k0 = 40.0;
  const double lam_q = theory::kernel_ratio(N) * lam;
  std::vector<double> kg, kq, pinv, lg, lq, eq;
  for (int t = 0; t <= 200; ++t) {
    const auto p = theory::linear_predictions(k0, lam, eta, N, t);
    kg.push_back(p.k_gd);
    kq.push_back(theory::kernel_ratio(N) * p.k_qite);
    pinv.push_back(theory::kernel_ratio(N) * L);
    lg.push_back(lam);
    lq.push_back(lam_q);
    eq.push_back(kq.back() / (2 * lam_q));
  }
  const nlohmann::json report = {
      {"system", {{"N", N}, {"L", L}, {"trace_o_sq", 96.0}}},
      {"config", {{"eta", eta}, {"loss", {{"kind", "linear"}}}}},
      {"series",
       {{"gd", {{"k_gd", stats_json(kg)}, {"lambda_gd", stats_json(lg)}}},
        {"qite",
         {{"k_qite", stats_json(kq)},
          {"trace_g_pinv", stats_json(pinv)},
          {"lambda_qite", stats_json(lq)},
          {"epsilon", stats_json(eq)}}}}}};
  const auto rows = compare_report(report);
  ASSERT_EQ(rows.size(), 5u);
  for (const auto& r : rows) {
    EXPECT_LT(r.error, 1e-12) << r.name;
    EXPECT_TRUE(r.pass) << r.name;
  }
  const auto back = comparison_row_from_json(to_json(rows[0]));
  EXPECT_EQ(back.name, rows[0].name);
  EXPECT_EQ(back.measured, rows[0].measured);
  EXPECT_NE(format_comparison(rows).find("lambda_ratio_late"), std::string::npos);
}

TEST(Compare, MissingFieldIsNamed) {
  const nlohmann::json report = {{"system", {{"N", 8}, {"L", 36}}}};
  try {
    compare_report(report);
    FAIL();
  } catch (const ReportError& e) {
    EXPECT_NE(std::string(e.what()).find("system.trace_o_sq"), std::string::npos) << e.what();
  }
}

TEST(Outputs, EnsembleWritesReportCsvAndFigures) {
  const auto dir = temp_dir("outputs");
  const EnsembleResult r = run_ensemble(small_config());
  const nlohmann::json report = write_ensemble_outputs(r, dir);
  for (const char* f : {"trajectories.csv", "overlay.csv", "report.json", "epsilon.svg", "k.svg", "lambda.svg",
                        "g_diag.svg"}) {
    EXPECT_TRUE(std::filesystem::exists(dir / f)) << f;
  }
  const nlohmann::json back = nlohmann::json::parse(read_file(dir / "report.json"));
  EXPECT_EQ(back["config_digest"], r.digest);
  EXPECT_EQ(back["seeds"]["succeeded"].get<int>(), 4);
  for (const char* key : {"tool", "config", "system", "series", "diagnostics", "overlays", "comparison"}) {
    EXPECT_TRUE(back.contains(key)) << key;
  }
  EXPECT_FALSE(back["comparison"].empty());
  const auto rows = compare_report(back);
  ASSERT_EQ(rows.size(), back["comparison"].size());
  for (std::size_t i = 0; i < rows.size(); ++i) EXPECT_EQ(rows[i].name, back["comparison"][i]["name"]);
  for (const char* f : {"epsilon.svg", "k.svg", "lambda.svg", "g_diag.svg"}) {
    const std::string svg = read_file(dir / f);
    EXPECT_NE(svg.find("<svg"), std::string::npos);
    EXPECT_NE(svg.find("config_digest=" + r.digest), std::string::npos);
    EXPECT_EQ(svg.find("href"), std::string::npos) << f;
    EXPECT_EQ(svg.find("<script"), std::string::npos) << f;
  }
  const std::string overlay = read_file(dir / "overlay.csv");
  EXPECT_NE(overlay.find("theory:epsilon_quadratic"), std::string::npos);
  std::filesystem::remove_all(dir);
}

TEST(Outputs, LinearEnsembleHasLinearOverlays) {
  ExperimentConfig c = small_config(LossKind::Linear);
  c.steps = 40;
  const EnsembleResult r = run_ensemble(c);
  const auto curves = make_overlays(r);
  bool has_k = false;
  for (const auto& cv : curves) has_k |= cv.kind == theory::CurveKind::KLinear;
  EXPECT_TRUE(has_k);
  const nlohmann::json report = make_report(r);
  EXPECT_EQ(report["comparison"].size(), 5u);
  EXPECT_TRUE(report["diagnostics"].contains("qite"));
}

TEST(Equiv, SmallSystemReport) {
  EquivOptions o;
  o.steps = 20;
  const EquivReport r = run_equiv(o);
  EXPECT_TRUE(r.brute_force_converged);
  EXPECT_LT(r.max_component_diff, 1e-4);
  EXPECT_GE(r.halving_ratio, 1.8);
  EXPECT_TRUE(r.pass());
  const nlohmann::json j = to_json(r);
  EXPECT_EQ(j["step_check"]["projected"].size(), 4u);
  EXPECT_TRUE(j["pass"].get<bool>());
  o.depth = 3;
  EXPECT_THROW(run_equiv(o), std::invalid_argument);
}

TEST(Scaling, SweepCsv) {
  ExperimentConfig c = small_config();
  c.steps = 4;
  c.seeds = 3;
  c.n_values = {2, 3};
  c.depth_values = {1};
  int seen = 0;
  const auto rows = run_scaling(c, [&](const ScalingRow&) { ++seen; });
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(seen, 2);
  EXPECT_EQ(rows[1].N, 8u);
  EXPECT_EQ(rows[1].L, 6u);
  EXPECT_DOUBLE_EQ(rows[1].k_gd_prediction, 6.0 * 96.0 / 64.0);
  const std::string csv = scaling_csv(rows, c);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 4);
  EXPECT_NE(csv.find("config_digest=" + config_digest(c)), std::string::npos);
}
