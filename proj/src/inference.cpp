#include "proxybounds/inference.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <iostream>
#include <limits>

#include "proxybounds/bounds.hpp"
#include "proxybounds/moments.hpp"
#include "proxybounds/parallel.hpp"
#include "proxybounds/rng.hpp"

namespace proxybounds {

void InferenceConfig::validate() const {
  if (!(alpha > 0.5 && alpha < 1.0))
    throw std::invalid_argument("inference: alpha must lie in (0.5, 1)");
  if (bootstrap_reps < 100)
    throw std::invalid_argument("inference: need at least 100 bootstrap replicates");
  if (normal_draws < 1000)
    throw std::invalid_argument("inference: need at least 1000 normal draws");
}

double order_statistic_quantile(std::vector<double> values, double p) {
  if (values.empty())
    throw std::invalid_argument("order_statistic_quantile: empty input");
  if (!(p > 0.0 && p <= 1.0))
    throw std::invalid_argument("order_statistic_quantile: p must lie in (0, 1]");
  std::sort(values.begin(), values.end());
  auto index = static_cast<std::size_t>(
      std::ceil(p * static_cast<double>(values.size())));
  index = std::clamp<std::size_t>(index, 1, values.size());
  return values[index - 1];
}

Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& a) {
  if (a.rows() != a.cols())
    throw std::invalid_argument("psd_sqrt: matrix must be square");
  const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
  if ((a - a.transpose()).cwiseAbs().maxCoeff() > 1e-8 * scale)
    throw std::invalid_argument("psd_sqrt: matrix must be symmetric");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(a);
  const Eigen::VectorXd roots = solver.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return solver.eigenvectors() * roots.asDiagonal() * solver.eigenvectors().transpose();
}

Sample bootstrap_resample(const Sample& s, std::uint64_t replicate_seed,
                          bool cluster_level) {
  const auto n = static_cast<Eigen::Index>(s.size());
  if (n == 0)
    throw Error(ErrorKind::insufficient_data, "bootstrap_resample: empty sample");
  Rng rng(replicate_seed);

  std::vector<Eigen::Index> picks;
  std::vector<std::int64_t> labels;
  if (cluster_level) {
    if (!s.cluster)
      throw Error(ErrorKind::degenerate_bootstrap,
                  "bootstrap_resample: cluster bootstrap without cluster labels");
    // Clusters in order of first appearance.
    std::vector<std::int64_t> ids;
    std::vector<std::vector<Eigen::Index>> members;
    for (Eigen::Index i = 0; i < n; ++i) {
      const std::int64_t label = (*s.cluster)[static_cast<std::size_t>(i)];
      auto it = std::find(ids.begin(), ids.end(), label);
      if (it == ids.end()) {
        ids.push_back(label);
        members.emplace_back();
        it = ids.end() - 1;
      }
      members[static_cast<std::size_t>(it - ids.begin())].push_back(i);
    }
    if (ids.size() < 2)
      throw Error(ErrorKind::degenerate_bootstrap,
                  "bootstrap_resample: need at least 2 clusters");
    for (std::size_t draw = 0; draw < ids.size(); ++draw) {
      const auto pick = static_cast<std::size_t>(rng.next_index(ids.size()));
      for (Eigen::Index row : members[pick]) {
        picks.push_back(row);
        labels.push_back(static_cast<std::int64_t>(draw));  // fresh label per draw
      }
    }
  } else {
    picks.reserve(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i)
      picks.push_back(static_cast<Eigen::Index>(
          rng.next_index(static_cast<std::uint64_t>(n))));
    if (s.cluster)
      for (Eigen::Index row : picks)
        labels.push_back((*s.cluster)[static_cast<std::size_t>(row)]);
  }

  Sample out;
  const auto m = static_cast<Eigen::Index>(picks.size());
  out.y.resize(m);
  out.z1.resize(m);
  out.z2.resize(m);
  out.w.resize(m, s.w.cols());
  for (Eigen::Index i = 0; i < m; ++i) {
    const Eigen::Index row = picks[static_cast<std::size_t>(i)];
    out.y[i] = s.y[row];
    out.z1[i] = s.z1[row];
    out.z2[i] = s.z2[row];
    out.w.row(i) = s.w.row(row);
  }
  if (s.cluster) out.cluster = std::move(labels);
  return out;
}

namespace {

struct ReplicateStat {
  Eigen::Vector3d l = Eigen::Vector3d::Zero();
  double ub = 0.0;
  bool ok = false;
};

/// Shared bootstrap pass: replicate b re-estimates the bounding functions
/// and the upper bound on a resample seeded by (cfg.seed, b). Failed
/// replicates are dropped (more than 10% failing aborts).
std::vector<ReplicateStat> bootstrap_statistics(const Sample& s,
                                                const InferenceConfig& cfg) {
  std::vector<ReplicateStat> stats(static_cast<std::size_t>(cfg.bootstrap_reps));
  parallel_for(stats.size(), cfg.workers, [&](std::size_t b) {
    try {
      const Sample resample = bootstrap_resample(
          s, derive_stream(cfg.seed, StreamDomain::bootstrap, b), cfg.cluster_bootstrap);
      const MomentSummary m = moment_summary(residualize(resample), cfg.divisor);
      const LowerBoundComponents c = lb_components(m);
      stats[b].l = c.as_vector();
      stats[b].ub = std::sqrt(m.var_y);
      stats[b].ok = true;
    } catch (const Error&) {
      stats[b].ok = false;
    }
  });

  const auto failures = static_cast<std::size_t>(
      std::count_if(stats.begin(), stats.end(),
                    [](const ReplicateStat& r) { return !r.ok; }));
  if (failures * 10 > stats.size())
    throw Error(ErrorKind::inference_failure,
                "bootstrap: " + std::to_string(failures) + " of " +
                    std::to_string(stats.size()) + " replicates failed");
  if (failures > 0)
    std::cerr << "proxybounds: dropped " << failures << " of " << stats.size()
              << " bootstrap replicates\n";
  return stats;
}

std::array<bool, 3> active_components(Regime regime) {
  if (regime == Regime::free_cov) return {false, true, true};
  return {true, true, true};
}

double upper_bound_from(const std::vector<ReplicateStat>& stats, double ub_hat,
                        double level) {
  std::vector<double> deviations;
  deviations.reserve(stats.size());
  for (const auto& stat : stats)
    if (stat.ok) deviations.push_back(std::fabs(stat.ub - ub_hat));
  if (deviations.empty())
    throw Error(ErrorKind::inference_failure, "bootstrap: no usable replicates");
  return ub_hat + order_statistic_quantile(std::move(deviations), level);
}

LowerCBDetail lower_bound_from(const std::vector<ReplicateStat>& stats,
                               const MomentSummary& full,
                               const InferenceConfig& cfg) {
  const auto n = full.n;
  if (n < 3)
    throw Error(ErrorKind::insufficient_data,
                "lower_confidence_bound: need n >= 3");
  const double sqrt_n = std::sqrt(static_cast<double>(n));
  const std::array<bool, 3> active = active_components(cfg.regime);

  LowerCBDetail detail;
  detail.l_hat = lb_components(full).as_vector();

  // Covariance of the sqrt(N)-scaled bootstrap draws of the bounding
  // functions (translation-invariant, so centering at the bootstrap mean
  // and at the full-sample estimate coincide).
  std::size_t ok_count = 0;
  Eigen::Vector3d mean = Eigen::Vector3d::Zero();
  for (const auto& stat : stats)
    if (stat.ok) {
      mean += sqrt_n * stat.l;
      ++ok_count;
    }
  if (ok_count < 2)
    throw Error(ErrorKind::inference_failure,
                "bootstrap: too few usable replicates for a covariance");
  mean /= static_cast<double>(ok_count);
  Eigen::Matrix3d omega = Eigen::Matrix3d::Zero();
  for (const auto& stat : stats)
    if (stat.ok) {
      const Eigen::Vector3d dev = sqrt_n * stat.l - mean;
      omega += dev * dev.transpose();
    }
  omega /= static_cast<double>(ok_count - 1);
  if (!omega.allFinite())
    throw Error(ErrorKind::inference_failure,
                "bootstrap covariance is not finite");
  detail.omega_hat = omega;

  const Eigen::Matrix3d root = psd_sqrt(omega);
  Eigen::Vector3d row_norms;
  for (int k = 0; k < 3; ++k) row_norms[k] = root.row(k).norm();
  detail.s_hat = row_norms / sqrt_n;

  // Correlated standard-normal draws: component k moves along row k of the
  // covariance square root (zero scale contributes no noise).
  const auto draws = static_cast<std::size_t>(cfg.normal_draws);
  std::vector<std::array<double, 3>> projected(draws);
  parallel_for(draws, cfg.workers, [&](std::size_t r) {
    Rng rng(derive_stream(cfg.seed, StreamDomain::normal_draw, r));
    Eigen::Vector3d shock;
    for (int j = 0; j < 3; ++j) shock[j] = rng.next_normal();
    for (int k = 0; k < 3; ++k)
      projected[r][k] =
          row_norms[k] > 0.0 ? root.row(k).dot(shock) / row_norms[k] : 0.0;
  });

  auto max_over = [&](const std::array<bool, 3>& keep) {
    std::vector<double> maxima(draws);
    for (std::size_t r = 0; r < draws; ++r) {
      double best = -std::numeric_limits<double>::infinity();
      for (int k = 0; k < 3; ++k)
        if (keep[k]) best = std::max(best, projected[r][k]);
      maxima[r] = best;
    }
    return maxima;
  };

  detail.c_n = 1.0 - 0.1 / std::log(static_cast<double>(n));
  detail.kappa = order_statistic_quantile(max_over(active), detail.c_n);

  // Adaptive inequality selection: keep the components whose estimate is
  // within a kappa-sized margin of the strongest one.
  double threshold_base = -std::numeric_limits<double>::infinity();
  for (int k = 0; k < 3; ++k)
    if (active[k])
      threshold_base =
          std::max(threshold_base, detail.l_hat[k] - detail.kappa * detail.s_hat[k]);
  std::array<bool, 3> selected{false, false, false};
  for (int k = 0; k < 3; ++k) {
    if (!active[k]) continue;
    if (detail.l_hat[k] >= threshold_base - 2.0 * detail.kappa * detail.s_hat[k]) {
      selected[k] = true;
      detail.selected_set.push_back(k + 1);
    }
  }

  detail.kappa_hat =
      order_statistic_quantile(max_over(selected), (1.0 + cfg.alpha) / 2.0);

  double c_lb = -std::numeric_limits<double>::infinity();
  for (int k = 0; k < 3; ++k)
    if (active[k])
      c_lb = std::max(c_lb, detail.l_hat[k] - detail.kappa_hat * detail.s_hat[k]);
  detail.c_lb = c_lb;
  return detail;
}

ConfidenceInterval interval_core(const Sample& s, const InferenceConfig& cfg) {
  const MomentSummary full = moment_summary(residualize(s), cfg.divisor);
  const std::vector<ReplicateStat> stats = bootstrap_statistics(s, cfg);
  const double level = (1.0 + cfg.alpha) / 2.0;

  ConfidenceInterval ci;
  ci.alpha = cfg.alpha;
  ci.ub_hat = std::sqrt(full.var_y);
  ci.c_ub = upper_bound_from(stats, ci.ub_hat, level);
  ci.detail = lower_bound_from(stats, full, cfg);
  ci.raw_c_lb = ci.detail.c_lb;

  const std::array<bool, 3> active = active_components(cfg.regime);
  double lb_hat = -std::numeric_limits<double>::infinity();
  for (int k = 0; k < 3; ++k)
    if (active[k]) lb_hat = std::max(lb_hat, ci.detail.l_hat[k]);
  ci.lb_hat = lb_hat;

  ci.c_lb = ci.raw_c_lb;
  if (cfg.truncate_at_zero &&
      (cfg.regime == Regime::baseline || cfg.regime == Regime::free_cov))
    ci.c_lb = std::max(ci.raw_c_lb, 0.0);
  ci.crossed = ci.c_lb > ci.c_ub;
  return ci;
}

}  // namespace

double upper_confidence_bound(const Sample& s, const InferenceConfig& cfg) {
  cfg.validate();
  const MomentSummary full = moment_summary(residualize(s), cfg.divisor);
  const auto stats = bootstrap_statistics(s, cfg);
  return upper_bound_from(stats, std::sqrt(full.var_y), (1.0 + cfg.alpha) / 2.0);
}

LowerCBDetail lower_confidence_bound(const Sample& s, const InferenceConfig& cfg) {
  cfg.validate();
  const MomentSummary full = moment_summary(residualize(s), cfg.divisor);
  const auto stats = bootstrap_statistics(s, cfg);
  return lower_bound_from(stats, full, cfg);
}

ConfidenceInterval confidence_interval(const Sample& s, const InferenceConfig& cfg) {
  cfg.validate();
  if (cfg.regime != Regime::no_sign) return interval_core(s, cfg);

  // Sign-agnostic regime: pre-test the common covariance sign, then reuse
  // the nonnegative-slope machinery, mirroring when the sign is negative.
  const MomentSummary full = moment_summary(residualize(s), cfg.divisor);
  const AssumptionReport report = check_data_assumptions(full, Regime::no_sign);
  if (!report.overall)
    throw Error(ErrorKind::assumption_violation,
                "confidence_interval: estimated covariances disagree in sign");

  if (full.cov_z1y >= 0.0 && full.cov_z2y >= 0.0) {
    InferenceConfig positive = cfg;
    positive.regime = Regime::baseline;
    positive.truncate_at_zero = false;
    ConfidenceInterval ci = interval_core(s, positive);
    ci.note = "sign-agnostic regime, nonnegative branch";
    return ci;
  }

  Sample negated = s;
  negated.y = -s.y;
  InferenceConfig mirrored_cfg = cfg;
  mirrored_cfg.regime = Regime::baseline;
  mirrored_cfg.truncate_at_zero = false;
  const ConfidenceInterval mirrored = interval_core(negated, mirrored_cfg);

  ConfidenceInterval ci;
  ci.alpha = cfg.alpha;
  ci.c_lb = -mirrored.c_ub;
  ci.c_ub = -mirrored.raw_c_lb;
  ci.raw_c_lb = ci.c_lb;
  ci.detail = mirrored.detail;
  ci.lb_hat = -mirrored.ub_hat;
  ci.ub_hat = -mirrored.lb_hat;
  ci.crossed = ci.c_lb > ci.c_ub;
  ci.note =
      "sign-agnostic regime, negative branch: interval mirrored from the "
      "negated outcome; detail quantities refer to the negated problem";
  return ci;
}

}  // namespace proxybounds
