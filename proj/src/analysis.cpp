#include "proxybounds/analysis.hpp"

#include <cmath>
#include <iomanip>
#include <sstream>

#include <nlohmann/json.hpp>

#include "proxybounds/moments.hpp"
#include "proxybounds/parallel.hpp"
#include "proxybounds/rng.hpp"
#include "proxybounds/version.hpp"

namespace proxybounds {

using nlohmann::json;

const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::interval: return "interval";
    case Verdict::empty_set: return "empty-set";
    case Verdict::point: return "point";
    case Verdict::assumption_failure: return "assumption-failure";
  }
  return "?";
}

void AnalysisConfig::validate() const {
  if (alphas.empty())
    throw std::invalid_argument("analysis: at least one alpha level required");
  for (double alpha : alphas)
    if (!(alpha > 0.5 && alpha < 1.0))
      throw std::invalid_argument("analysis: alpha levels must lie in (0.5, 1)");
}

InferenceConfig AnalysisConfig::inference_config(double alpha) const {
  InferenceConfig cfg;
  cfg.alpha = alpha;
  cfg.bootstrap_reps = bootstrap_reps;
  cfg.normal_draws = normal_draws;
  cfg.seed = seed;
  cfg.cluster_bootstrap = columns.cluster.has_value();
  cfg.truncate_at_zero = truncate_at_zero;
  cfg.regime = regime;
  cfg.divisor = divisor;
  cfg.workers = workers;
  return cfg;
}

namespace {

BoundsResult identify_for(const MomentSummary& m, Regime regime) {
  switch (regime) {
    case Regime::baseline: return identify_baseline(m);
    case Regime::free_cov: return identify_free_cov(m);
    case Regime::no_sign: return identify_no_sign(m);
  }
  throw std::invalid_argument("unknown regime");
}

}  // namespace

Report run_analysis(const AnalysisConfig& cfg) {
  cfg.validate();

  Report report;
  report.tool_version = kVersion;
  report.input_path = cfg.input.string();
  report.regime = cfg.regime;
  report.divisor = cfg.divisor;
  report.seed = cfg.seed;
  report.bootstrap_reps = cfg.bootstrap_reps;
  report.normal_draws = cfg.normal_draws;
  report.truncate_at_zero = cfg.truncate_at_zero;

  const LoadedSample loaded = load_sample_csv(cfg.input, cfg.columns);
  const Sample& sample = loaded.sample;
  report.n = sample.size();
  report.dropped_rows = loaded.dropped_rows;

  const ResidualizedSample residuals = residualize(sample);
  report.moments = moment_summary(residuals, cfg.divisor);
  report.assumptions = check_data_assumptions(report.moments, cfg.regime);

  report.baselines.b1 = reduced_form(report.moments, 1);
  report.baselines.b2 = reduced_form(report.moments, 2);
  if (cfg.combo_delta)
    report.baselines.b_delta = {*cfg.combo_delta,
                                combo_coefficient(report.moments, *cfg.combo_delta)};
  try {
    report.baselines.b_star = lubotsky_wittenberg(report.moments);
  } catch (const Error& err) {
    report.baseline_error = err.what();
  }

  if (!report.assumptions.overall) {
    report.verdict = Verdict::assumption_failure;
    return report;
  }

  report.bounds = identify_for(report.moments, cfg.regime);
  if (cfg.run_oracle && cfg.regime != Regime::no_sign)
    report.oracle = brute_force_bounds(report.moments, 1e-4, std::nullopt,
                                       cfg.regime, true);

  for (double alpha : cfg.alphas)
    report.intervals.push_back(confidence_interval(sample, cfg.inference_config(alpha)));

  switch (report.bounds->shape) {
    case Shape::interval: report.verdict = Verdict::interval; break;
    case Shape::empty: report.verdict = Verdict::empty_set; break;
    case Shape::point: report.verdict = Verdict::point; break;
  }
  return report;
}

namespace {

json moments_to_json(const MomentSummary& m) {
  return json{{"mean_z1", m.mean_z1},   {"mean_z2", m.mean_z2},
              {"var_y", m.var_y},       {"var_z1", m.var_z1},
              {"var_z2", m.var_z2},     {"cov_z1y", m.cov_z1y},
              {"cov_z2y", m.cov_z2y},   {"cov_z1z2", m.cov_z1z2},
              {"n", m.n},               {"divisor", to_string(m.divisor_policy)}};
}

json bounds_to_json(const BoundsResult& b) {
  json components;
  if (b.component_pooled) components["pooled"] = *b.component_pooled;
  components["proxy1"] = b.component_proxy1;
  components["proxy2"] = b.component_proxy2;
  json out{{"regime", to_string(b.regime)},
           {"shape", to_string(b.shape)},
           {"lower", b.lower},
           {"upper", b.upper},
           {"components", components},
           {"refinement_applied", b.refinement_applied}};
  if (!b.note.empty()) out["note"] = b.note;
  return out;
}

json interval_to_json(const ConfidenceInterval& ci, Regime regime) {
  const auto& d = ci.detail;
  json detail{{"l_hat", {d.l_hat[0], d.l_hat[1], d.l_hat[2]}},
              {"s_hat", {d.s_hat[0], d.s_hat[1], d.s_hat[2]}},
              {"omega_hat",
               {{d.omega_hat(0, 0), d.omega_hat(0, 1), d.omega_hat(0, 2)},
                {d.omega_hat(1, 0), d.omega_hat(1, 1), d.omega_hat(1, 2)},
                {d.omega_hat(2, 0), d.omega_hat(2, 1), d.omega_hat(2, 2)}}},
              {"c_n", d.c_n},
              {"kappa", d.kappa},
              {"selected_set", d.selected_set},
              {"kappa_hat", d.kappa_hat}};
  json out{{"alpha", ci.alpha},   {"lower", ci.c_lb},
           {"upper", ci.c_ub},    {"lower_raw", ci.raw_c_lb},
           {"lb_hat", ci.lb_hat}, {"ub_hat", ci.ub_hat},
           {"crossed", ci.crossed}, {"detail", detail}};
  if (regime != Regime::no_sign)
    out["lower_truncated"] = std::max(ci.raw_c_lb, 0.0);
  if (!ci.note.empty()) out["note"] = ci.note;
  return out;
}

json assumptions_to_json(const AssumptionReport& report) {
  json checks = json::array();
  for (const auto& check : report.checks)
    checks.push_back(json{{"name", check.name}, {"pass", check.pass}, {"value", check.value}});
  return json{{"regime", to_string(report.regime)},
              {"checks", checks},
              {"overall", report.overall}};
}

}  // namespace

std::string report_to_json(const Report& report) {
  json baselines{{"b1", report.baselines.b1}, {"b2", report.baselines.b2}};
  if (report.baselines.b_star)
    baselines["b_star"] = *report.baselines.b_star;
  else
    baselines["b_star_error"] = report.baseline_error;
  if (report.baselines.b_delta)
    baselines["b_delta"] = json{{"delta", report.baselines.b_delta->first},
                                {"value", report.baselines.b_delta->second}};

  json out{{"tool", json{{"name", "proxybounds"}, {"version", report.tool_version}}},
           {"input", json{{"path", report.input_path},
                          {"n", report.n},
                          {"dropped_rows", report.dropped_rows}}},
           {"config", json{{"regime", to_string(report.regime)},
                           {"divisor", to_string(report.divisor)},
                           {"seed", report.seed},
                           {"bootstrap", report.bootstrap_reps},
                           {"draws", report.normal_draws},
                           {"truncate_at_zero", report.truncate_at_zero}}},
           {"moments", moments_to_json(report.moments)},
           {"assumptions", assumptions_to_json(report.assumptions)},
           {"baselines", baselines},
           {"verdict", to_string(report.verdict)}};
  if (report.bounds) out["bounds"] = bounds_to_json(*report.bounds);
  if (!report.intervals.empty()) {
    json intervals = json::array();
    for (const auto& ci : report.intervals)
      intervals.push_back(interval_to_json(ci, report.regime));
    out["intervals"] = intervals;
  }
  if (report.oracle) {
    const auto& oracle = *report.oracle;
    json node{{"empty", oracle.empty},
              {"feasible_count", oracle.feasible_count},
              {"psd_checked", oracle.psd_checked},
              {"non_psd_count", oracle.non_psd_count}};
    if (!oracle.empty) {
      node["lower"] = oracle.lower;
      node["upper"] = oracle.upper;
    }
    out["oracle"] = node;
  }
  return out.dump(2) + "\n";
}

namespace {

std::string fmt(double v) {
  std::ostringstream out;
  out << std::fixed << std::setprecision(6) << v;
  return out.str();
}

std::string fmt_interval(double lo, double hi) {
  return "[" + fmt(lo) + ", " + fmt(hi) + "]";
}

std::string fmt_level(double alpha) {
  std::ostringstream out;
  out << std::setprecision(10) << alpha * 100.0 << "% CI";
  return out.str();
}

void put_row(std::ostringstream& out, const std::string& label, const std::string& value) {
  out << std::left << std::setw(26) << label << value << "\n";
}

}  // namespace

std::string report_to_text(const Report& report) {
  std::ostringstream out;
  out << "proxybounds " << report.tool_version << "\n";
  put_row(out, "input", report.input_path);
  put_row(out, "rows used / dropped",
          std::to_string(report.n) + " / " + std::to_string(report.dropped_rows));
  put_row(out, "regime", to_string(report.regime));
  out << "\n";

  put_row(out, "reduced form b1", fmt(report.baselines.b1));
  put_row(out, "reduced form b2", fmt(report.baselines.b2));
  if (report.baselines.b_star)
    put_row(out, "lubotsky-wittenberg b*", fmt(*report.baselines.b_star));
  else
    put_row(out, "lubotsky-wittenberg b*", "unavailable (" + report.baseline_error + ")");
  if (report.baselines.b_delta)
    put_row(out,
            "combo b(" + fmt(report.baselines.b_delta->first) + ")",
            fmt(report.baselines.b_delta->second));
  out << "\n";

  if (report.verdict == Verdict::assumption_failure) {
    out << "data restrictions FAILED:\n";
    for (const auto& check : report.assumptions.checks)
      if (!check.pass)
        out << "  " << check.name << "  (value " << fmt(check.value) << ")\n";
    return out.str();
  }

  const BoundsResult& bounds = *report.bounds;
  if (bounds.shape == Shape::empty) {
    out << "estimated set is EMPTY: upper bound " << fmt(bounds.upper)
        << " falls below lower bound " << fmt(bounds.lower) << "\n";
    out << "the data reject the joint identifying assumptions\n";
  } else {
    put_row(out, "estimate", fmt_interval(bounds.lower, bounds.upper));
  }
  if (bounds.component_pooled)
    put_row(out, "  component pooled", fmt(*bounds.component_pooled));
  put_row(out, "  component proxy1", fmt(bounds.component_proxy1));
  put_row(out, "  component proxy2", fmt(bounds.component_proxy2));

  for (const auto& ci : report.intervals) {
    put_row(out, fmt_level(ci.alpha), fmt_interval(ci.c_lb, ci.c_ub));
    if (report.regime != Regime::no_sign && ci.raw_c_lb < 0.0)
      put_row(out,
              ci.c_lb == ci.raw_c_lb ? "  truncated at zero" : "  raw (untruncated)",
              ci.c_lb == ci.raw_c_lb
                  ? fmt_interval(std::max(ci.raw_c_lb, 0.0), ci.c_ub)
                  : fmt_interval(ci.raw_c_lb, ci.c_ub));
  }

  if (report.oracle) {
    const auto& oracle = *report.oracle;
    if (oracle.empty)
      put_row(out, "oracle scan", "empty");
    else
      put_row(out, "oracle scan", fmt_interval(oracle.lower, oracle.upper));
    if (oracle.psd_checked && oracle.non_psd_count > 0)
      put_row(out, "  non-PSD latents", std::to_string(oracle.non_psd_count));
  }

  put_row(out, "seed", std::to_string(report.seed));
  return out.str();
}

SimulationResult run_simulation(const SimulationConfig& cfg) {
  if (cfg.reps < 1) throw std::invalid_argument("simulation: reps must be at least 1");

  const MomentSummary population = latent_to_observable_moments(cfg.spec);
  const BoundsResult truth = identify_baseline(population);

  SimulationResult result;
  result.beta = cfg.spec.beta;
  result.true_lb = truth.lower;
  result.true_ub = truth.upper;
  result.rows.resize(static_cast<std::size_t>(cfg.reps));

  // Parallelism lives here, across replications; per-rep inference then
  // runs single-threaded so nested pools cannot oversubscribe.
  parallel_for(result.rows.size(), cfg.workers, [&](std::size_t r) {
    SimulationRow row;
    row.rep = static_cast<int>(r) + 1;
    const std::uint64_t sample_seed = derive_stream(cfg.seed, StreamDomain::sim_rep, r);
    const Sample sample = sample_dgp(cfg.spec, cfg.n, sample_seed, cfg.covariate_count);
    const MomentSummary m = moment_summary(residualize(sample), cfg.divisor);
    const LowerBoundComponents c = lb_components(m);
    row.lb_hat = c.max3();
    row.ub_hat = std::sqrt(m.var_y);
    row.b1 = reduced_form(m, 1);
    try {
      row.b_star = lubotsky_wittenberg(m);
    } catch (const Error&) {
      row.b_star = std::nullopt;
    }
    if (cfg.with_ci) {
      InferenceConfig inference;
      inference.alpha = cfg.alpha;
      inference.bootstrap_reps = cfg.bootstrap_reps;
      inference.normal_draws = cfg.normal_draws;
      inference.seed = derive_stream(cfg.seed, StreamDomain::sim_inference, r);
      inference.regime = Regime::baseline;
      inference.divisor = cfg.divisor;
      inference.workers = 1;
      const ConfidenceInterval ci = confidence_interval(sample, inference);
      row.c_lb = ci.c_lb;
      row.c_ub = ci.c_ub;
      row.covered = ci.c_lb <= result.true_lb && ci.c_ub >= result.true_ub;
    }
    result.rows[r] = row;
  });

  if (cfg.reps > 1) {
    double sum_lb = 0.0, sum_b1 = 0.0, sum_bstar = 0.0;
    std::size_t covered = 0, bstar_count = 0;
    for (const auto& row : result.rows) {
      sum_lb += row.lb_hat;
      sum_b1 += row.b1;
      if (row.b_star) {
        sum_bstar += *row.b_star;
        ++bstar_count;
      }
      if (row.covered) ++covered;
    }
    const auto reps = static_cast<double>(cfg.reps);
    result.bias_lb = sum_lb / reps - cfg.spec.beta;
    result.bias_b1 = sum_b1 / reps - cfg.spec.beta;
    if (bstar_count > 0)
      result.bias_b_star = sum_bstar / static_cast<double>(bstar_count) - cfg.spec.beta;
    if (cfg.with_ci) result.coverage = static_cast<double>(covered) / reps;
  }
  return result;
}

std::string simulation_to_json(const SimulationResult& result) {
  json rows = json::array();
  for (const auto& row : result.rows) {
    json r{{"rep", row.rep},
           {"lb_hat", row.lb_hat},
           {"ub_hat", row.ub_hat},
           {"b1", row.b1}};
    if (row.b_star) r["b_star"] = *row.b_star;
    if (row.c_lb) {
      r["c_lb"] = *row.c_lb;
      r["c_ub"] = *row.c_ub;
      r["covered"] = row.covered;
    }
    rows.push_back(r);
  }
  json out{{"beta", result.beta},
           {"true_bounds", {result.true_lb, result.true_ub}},
           {"rows", rows}};
  if (result.rows.size() > 1) {
    json aggregate{{"bias_lb", result.bias_lb}, {"bias_b1", result.bias_b1}};
    if (result.bias_b_star) aggregate["bias_b_star"] = *result.bias_b_star;
    if (result.coverage) aggregate["coverage"] = *result.coverage;
    out["aggregate"] = aggregate;
  }
  return out.dump(2) + "\n";
}

std::string simulation_to_text(const SimulationResult& result) {
  std::ostringstream out;
  out << "true slope " << fmt(result.beta) << ", identified set "
      << fmt_interval(result.true_lb, result.true_ub) << "\n";
  out << std::left << std::setw(6) << "rep" << std::setw(22) << "estimate"
      << std::setw(24) << "interval" << std::setw(12) << "b1"
      << std::setw(12) << "b*" << "covered\n";
  for (const auto& row : result.rows) {
    out << std::left << std::setw(6) << row.rep << std::setw(22)
        << fmt_interval(row.lb_hat, row.ub_hat);
    out << std::setw(24) << (row.c_lb ? fmt_interval(*row.c_lb, *row.c_ub) : "-");
    out << std::setw(12) << fmt(row.b1);
    out << std::setw(12) << (row.b_star ? fmt(*row.b_star) : "-");
    out << (row.c_lb ? (row.covered ? "yes" : "no") : "-") << "\n";
  }
  if (result.rows.size() > 1) {
    out << "\n";
    if (result.coverage) put_row(out, "coverage", fmt(*result.coverage));
    put_row(out, "bias of estimate lower", fmt(result.bias_lb));
    put_row(out, "bias of b1", fmt(result.bias_b1));
    if (result.bias_b_star) put_row(out, "bias of b*", fmt(*result.bias_b_star));
  }
  return out.str();
}

std::vector<GalleryEntry> example_gallery() {
  std::vector<GalleryEntry> entries;

  {
    GalleryEntry e;
    e.title = "regressor-proportional error (b1 below the lower bound)";
    e.spec = example1_spec(1.0, 1.0, 0.0);
    e.moments = latent_to_observable_moments(e.spec);
    e.b1 = reduced_form(e.moments, 1);
    const BoundsResult b = identify_baseline(e.moments);
    e.lower = b.lower;
    e.upper = b.upper;
    e.inequality = "b1 < lower <= beta <= upper";
    e.holds = e.b1 < e.lower && e.lower <= e.spec.beta && e.spec.beta <= e.upper;
    entries.push_back(std::move(e));
  }
  {
    GalleryEntry e;
    e.title = "negatively correlated error (b1 above the upper bound)";
    e.spec = example2_spec(0.5, -0.6);
    e.moments = latent_to_observable_moments(e.spec);
    e.b1 = reduced_form(e.moments, 1);
    const BoundsResult b = identify_baseline(e.moments);
    e.lower = b.lower;
    e.upper = b.upper;
    e.inequality = "b1 > upper";
    e.holds = e.b1 > e.upper;
    entries.push_back(std::move(e));
  }
  {
    GalleryEntry e;
    e.title = "classical errors (b* below the free-covariance lower bound)";
    e.spec = example3_spec(2.0, 0.0);
    e.moments = latent_to_observable_moments(e.spec);
    e.b1 = reduced_form(e.moments, 1);
    e.b_star = lubotsky_wittenberg(e.moments);
    const BoundsResult b = identify_free_cov(e.moments);
    e.lower = b.lower;
    e.upper = b.upper;
    e.inequality = "b* < lower <= beta";
    e.holds = *e.b_star < e.lower && e.lower <= e.spec.beta;
    entries.push_back(std::move(e));
  }
  return entries;
}

std::string gallery_to_text(const std::vector<GalleryEntry>& entries) {
  std::ostringstream out;
  int index = 0;
  for (const auto& e : entries) {
    out << "example " << ++index << ": " << e.title << "\n";
    put_row(out, "  b1", fmt(e.b1));
    if (e.b_star) put_row(out, "  b*", fmt(*e.b_star));
    put_row(out, "  bounds", fmt_interval(e.lower, e.upper));
    put_row(out, "  beta", fmt(e.spec.beta));
    put_row(out, "  shows", e.inequality + (e.holds ? "  (holds)" : "  (VIOLATED)"));
    out << "\n";
  }
  return out.str();
}

}  // namespace proxybounds
