#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "proxybounds/baselines.hpp"
#include "proxybounds/bounds.hpp"
#include "proxybounds/csv.hpp"
#include "proxybounds/dgp.hpp"
#include "proxybounds/inference.hpp"
#include "proxybounds/types.hpp"

namespace proxybounds {

/// Everything a full analysis run needs.
struct AnalysisConfig {
  std::filesystem::path input;
  ColumnMap columns;
  Regime regime = Regime::baseline;
  std::vector<double> alphas = {0.90, 0.99};
  int bootstrap_reps = 1000;
  int normal_draws = 10000;
  std::uint64_t seed = 1;
  bool truncate_at_zero = false;
  DivisorPolicy divisor = DivisorPolicy::n_minus_1;
  std::optional<double> combo_delta;  // also report the convex-combination slope here
  bool run_oracle = false;            // cross-check bounds with the feasibility scan
  int workers = 0;

  void validate() const;
  InferenceConfig inference_config(double alpha) const;
};

enum class Verdict { interval, empty_set, point, assumption_failure };

/// Complete, reproducible analysis output. Serialization contains no
/// timestamps or machine identifiers: identical input and configuration
/// give byte-identical reports.
struct Report {
  std::string tool_version;
  std::string input_path;
  std::size_t n = 0;
  std::size_t dropped_rows = 0;
  Regime regime = Regime::baseline;
  DivisorPolicy divisor = DivisorPolicy::n_minus_1;
  std::uint64_t seed = 0;
  int bootstrap_reps = 0;
  int normal_draws = 0;
  bool truncate_at_zero = false;

  MomentSummary moments;
  AssumptionReport assumptions;
  BaselineEstimates baselines;
  std::string baseline_error;  // set when the LW estimand is unavailable
  std::optional<BoundsResult> bounds;
  std::vector<ConfidenceInterval> intervals;  // one per requested alpha
  std::optional<OracleBounds> oracle;
  Verdict verdict = Verdict::interval;
};

const char* to_string(Verdict v);

/// Runs the full pipeline: load, residualize, summarize, test assumptions,
/// baselines, bounds, confidence intervals, optional oracle cross-check.
/// Assumption failures and empty estimated sets are reported through
/// Report::verdict, not thrown; parse and inference failures throw.
Report run_analysis(const AnalysisConfig& cfg);

std::string report_to_json(const Report& report);
std::string report_to_text(const Report& report);

/// Monte Carlo study of the estimator and interval coverage under a known
/// data-generating process.
struct SimulationConfig {
  LatentSpec spec;
  std::size_t n = 1000;
  int reps = 100;
  std::size_t covariate_count = 0;
  double alpha = 0.90;
  int bootstrap_reps = 500;
  int normal_draws = 5000;
  std::uint64_t seed = 1;
  DivisorPolicy divisor = DivisorPolicy::n_minus_1;
  bool with_ci = true;  // coverage needs intervals; switch off for speed
  int workers = 0;
};

struct SimulationRow {
  int rep = 0;
  double lb_hat = 0.0;
  double ub_hat = 0.0;
  double b1 = 0.0;
  std::optional<double> b_star;
  std::optional<double> c_lb;
  std::optional<double> c_ub;
  bool covered = false;
};

struct SimulationResult {
  double beta = 0.0;
  double true_lb = 0.0;
  double true_ub = 0.0;
  std::vector<SimulationRow> rows;
  // Aggregates (meaningful when reps > 1):
  std::optional<double> coverage;
  double bias_lb = 0.0;      // mean(lb_hat) - beta
  double bias_b1 = 0.0;      // mean(b1) - beta
  std::optional<double> bias_b_star;
};

SimulationResult run_simulation(const SimulationConfig& cfg);
std::string simulation_to_json(const SimulationResult& result);
std::string simulation_to_text(const SimulationResult& result);

/// One row of the built-in worked-example gallery.
struct GalleryEntry {
  std::string title;
  LatentSpec spec;
  MomentSummary moments;
  double b1 = 0.0;
  std::optional<double> b_star;
  double lower = 0.0;
  double upper = 0.0;
  std::string inequality;  // human-readable comparison this entry demonstrates
  bool holds = false;
};

std::vector<GalleryEntry> example_gallery();
std::string gallery_to_text(const std::vector<GalleryEntry>& entries);

}  // namespace proxybounds
