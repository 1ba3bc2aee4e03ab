// proxybounds: partial-identification bounds for a linear slope observed
// through two error-prone proxies, with set-coverage confidence intervals.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <string>

#include "proxybounds/analysis.hpp"
#include "proxybounds/version.hpp"

namespace {

// Exit codes: 0 ok, 2 parse/column error, 3 data-restriction failure,
// 4 empty estimated set, 5 inference failure, 1 anything else.
constexpr int kExitOk = 0;
constexpr int kExitOther = 1;
constexpr int kExitParse = 2;
constexpr int kExitAssumptions = 3;
constexpr int kExitEmptySet = 4;
constexpr int kExitInference = 5;

int exit_code_for(const proxybounds::Error& err) {
  switch (err.kind()) {
    case proxybounds::ErrorKind::parse_error:
      return kExitParse;
    case proxybounds::ErrorKind::assumption_violation:
      return kExitAssumptions;
    case proxybounds::ErrorKind::inference_failure:
    case proxybounds::ErrorKind::degenerate_bootstrap:
      return kExitInference;
    default:
      return kExitOther;
  }
}

proxybounds::Regime parse_regime(const std::string& name) {
  if (name == "baseline") return proxybounds::Regime::baseline;
  if (name == "free-cov") return proxybounds::Regime::free_cov;
  if (name == "no-sign") return proxybounds::Regime::no_sign;
  throw CLI::ValidationError("--regime", "expected baseline|free-cov|no-sign");
}

proxybounds::DivisorPolicy parse_divisor(const std::string& name) {
  if (name == "n1") return proxybounds::DivisorPolicy::n_minus_1;
  if (name == "n") return proxybounds::DivisorPolicy::n;
  throw CLI::ValidationError("--divisor", "expected n1|n");
}

void write_output(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw proxybounds::Error(proxybounds::ErrorKind::parse_error,
                                     "cannot open output file: " + path);
  out << content;
}

int run_analyze(const proxybounds::AnalysisConfig& cfg, const std::string& out_path) {
  const proxybounds::Report report = proxybounds::run_analysis(cfg);
  if (!out_path.empty()) write_output(out_path, proxybounds::report_to_json(report));
  std::cout << proxybounds::report_to_text(report);
  switch (report.verdict) {
    case proxybounds::Verdict::assumption_failure:
      return kExitAssumptions;
    case proxybounds::Verdict::empty_set:
      return kExitEmptySet;
    default:
      return kExitOk;
  }
}

int run_simulate(const proxybounds::SimulationConfig& cfg, const std::string& out_path) {
  const proxybounds::SimulationResult result = proxybounds::run_simulation(cfg);
  if (!out_path.empty())
    write_output(out_path, proxybounds::simulation_to_json(result));
  std::cout << proxybounds::simulation_to_text(result);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"partial-identification bounds for a mismeasured-regressor slope"};
  app.set_version_flag("--version", std::string("proxybounds ") + proxybounds::kVersion);
  app.require_subcommand(1);

  // ---- analyze ----
  auto* analyze = app.add_subcommand("analyze", "bounds and confidence intervals for a CSV");
  proxybounds::AnalysisConfig acfg;
  std::string a_input, a_regime = "baseline", a_divisor = "n1", a_out;
  std::string a_cluster;
  std::vector<std::string> a_covariates;
  std::vector<double> a_alphas;
  double a_delta = -1.0;
  analyze->add_option("--input", a_input, "input CSV (header row required)")->required();
  analyze->add_option("--outcome", acfg.columns.outcome, "outcome column")->required();
  analyze->add_option("--proxy1", acfg.columns.proxy1, "first proxy column")->required();
  analyze->add_option("--proxy2", acfg.columns.proxy2, "second proxy column")->required();
  analyze->add_option("--covariates", a_covariates, "covariate columns (comma separated)")
      ->delimiter(',');
  analyze->add_option("--cluster", a_cluster,
                      "cluster-label column; enables the cluster bootstrap");
  analyze->add_option("--regime", a_regime, "baseline|free-cov|no-sign");
  analyze->add_option("--alpha", a_alphas, "confidence levels (default 0.90,0.99)")
      ->delimiter(',');
  analyze->add_option("--bootstrap", acfg.bootstrap_reps, "bootstrap replicates");
  analyze->add_option("--draws", acfg.normal_draws, "critical-value simulation draws");
  analyze->add_option("--seed", acfg.seed, "random seed");
  analyze->add_option("--divisor", a_divisor, "covariance divisor: n1|n");
  analyze->add_flag("--truncate-at-zero", acfg.truncate_at_zero,
                    "clip the lower confidence bound at zero");
  analyze->add_flag("--oracle", acfg.run_oracle,
                    "cross-check the bounds with the grid feasibility scan");
  analyze->add_option("--delta", a_delta, "also report the combination slope b(delta)");
  analyze->add_option("--workers", acfg.workers, "worker threads (0 = auto)");
  analyze->add_option("--out", a_out, "write the JSON report here");

  // ---- simulate ----
  auto* simulate = app.add_subcommand("simulate", "Monte Carlo study of a latent spec");
  proxybounds::SimulationConfig scfg;
  std::string s_spec, s_divisor = "n1", s_out;
  bool s_skip_ci = false;
  simulate->add_option("--spec", s_spec, "latent spec file (key = value lines)")->required();
  simulate->add_option("--n", scfg.n, "sample size per replication")->required();
  simulate->add_option("--reps", scfg.reps, "number of replications")->required();
  simulate->add_option("--covariate-count", scfg.covariate_count,
                       "independent covariates to generate");
  simulate->add_option("--alpha", scfg.alpha, "confidence level");
  simulate->add_option("--bootstrap", scfg.bootstrap_reps, "bootstrap replicates");
  simulate->add_option("--draws", scfg.normal_draws, "critical-value simulation draws");
  simulate->add_option("--seed", scfg.seed, "random seed");
  simulate->add_option("--divisor", s_divisor, "covariance divisor: n1|n");
  simulate->add_flag("--skip-ci", s_skip_ci, "skip confidence intervals (no coverage)");
  simulate->add_option("--workers", scfg.workers, "worker threads (0 = auto)");
  simulate->add_option("--out", s_out, "write per-rep results as JSON here");

  // ---- examples ----
  auto* examples = app.add_subcommand("examples", "print the built-in worked examples");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*analyze) {
      acfg.input = a_input;
      acfg.regime = parse_regime(a_regime);
      acfg.divisor = parse_divisor(a_divisor);
      if (!a_alphas.empty()) acfg.alphas = a_alphas;
      if (!a_covariates.empty()) acfg.columns.covariates = a_covariates;
      if (!a_cluster.empty()) acfg.columns.cluster = a_cluster;
      if (a_delta >= 0.0) acfg.combo_delta = a_delta;
      return run_analyze(acfg, a_out);
    }
    if (*simulate) {
      scfg.spec = proxybounds::read_spec_file(s_spec);
      scfg.divisor = parse_divisor(s_divisor);
      scfg.with_ci = !s_skip_ci;
      return run_simulate(scfg, s_out);
    }
    if (*examples) {
      std::cout << proxybounds::gallery_to_text(proxybounds::example_gallery());
      return kExitOk;
    }
  } catch (const proxybounds::Error& err) {
    std::cerr << "proxybounds: " << err.what() << "\n";
    return exit_code_for(err);
  } catch (const std::exception& err) {
    std::cerr << "proxybounds: " << err.what() << "\n";
    return kExitOther;
  }
  return kExitOther;
}
