#pragma once

#include <optional>

#include "proxybounds/types.hpp"

namespace proxybounds {

/// The three lower-bounding functions of the slope:
///   pooled = (cov_z1y + cov_z2y) / (1 + cov_z1z2)
///   proxy1 = 2 * cov_z1y / (1 + var_z1)
///   proxy2 = 2 * cov_z2y / (1 + var_z2)
/// Requires cov_z1z2 > -1 and nonnegative proxy variances.
LowerBoundComponents lb_components(const MomentSummary& m);

/// Identified set under the baseline regime: [max component, sqrt(var_y)],
/// empty when the upper bound falls below the lower bound (the testable
/// specification failure). Throws when the data restrictions fail.
BoundsResult identify_baseline(const MomentSummary& m);

/// As identify_baseline but without restricting the error-error covariance:
/// the pooled component is dropped from the max.
BoundsResult identify_free_cov(const MomentSummary& m);

/// Sign-agnostic identified set. All components positive: same as baseline.
/// All zero: the slope is point-identified at 0. All negative: mirror of the
/// baseline set obtained by negating the outcome, so the interval is
/// [-sqrt(var_y), min component].
BoundsResult identify_no_sign(const MomentSummary& m);

/// Which proxy carries the smaller error variance.
enum class BetterProxy { proxy2_better, proxy1_better };

/// Tightens baseline bounds when one proxy is known to be better. With
/// r = 2*(cov_z1y - cov_z2y)/(var_z1 - var_z2), proxy2_better raises the
/// lower bound when var_z1 > var_z2 and caps the upper bound when
/// var_z1 < var_z2; proxy1_better mirrors. The shape is recomputed and may
/// become empty. Requires var_z1 != var_z2 and a baseline-regime input.
BoundsResult refine_better_proxy(const MomentSummary& m, const BoundsResult& b,
                                 BetterProxy better);

struct OracleBounds {
  bool empty = true;
  double lower = 0.0;
  double upper = 0.0;
  std::size_t feasible_count = 0;
  bool psd_checked = false;
  std::size_t non_psd_count = 0;  // feasible grid points whose implied 4x4 is not PSD
};

/// Independent feasibility scan over a slope grid {0, step, ..., beta_max}.
/// For each positive candidate the latent second moments are recovered by
/// inverting the observable-moment map; the candidate is feasible when all
/// implied variances are nonnegative and (baseline regime only) the
/// error-error covariance is nonnegative. Zero is feasible only when both
/// proxy/outcome covariances vanish. Returns the min/max feasible grid
/// points. beta_max defaults to 2*sqrt(var_y); check_psd additionally
/// diagnoses positive semidefiniteness of the implied latent covariance.
OracleBounds brute_force_bounds(const MomentSummary& m, double grid_step = 1e-4,
                                std::optional<double> beta_max = std::nullopt,
                                Regime regime = Regime::baseline,
                                bool check_psd = false);

}  // namespace proxybounds
