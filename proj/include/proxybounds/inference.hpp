#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "proxybounds/types.hpp"

namespace proxybounds {

/// Settings for set-coverage confidence intervals. Both one-sided bounds
/// are built at level (1+alpha)/2 so the two-sided interval covers the
/// identified set with probability at least alpha.
struct InferenceConfig {
  double alpha = 0.90;            // in (0.5, 1)
  int bootstrap_reps = 1000;      // B, at least 100
  int normal_draws = 10000;       // R, at least 1000
  std::uint64_t seed = 0;
  bool cluster_bootstrap = false;
  bool truncate_at_zero = false;  // clip the lower confidence bound at 0
  Regime regime = Regime::baseline;
  DivisorPolicy divisor = DivisorPolicy::n_minus_1;
  int workers = 0;                // < 1 means auto; never affects results

  void validate() const;
};

/// Every intermediate quantity of the lower-confidence-bound construction,
/// kept for reporting and replication.
struct LowerCBDetail {
  Eigen::Vector3d l_hat = Eigen::Vector3d::Zero();   // bounding-function estimates
  Eigen::Matrix3d omega_hat = Eigen::Matrix3d::Zero();  // bootstrap covariance of sqrt(N)*l
  Eigen::Vector3d s_hat = Eigen::Vector3d::Zero();   // per-component scales
  double c_n = 0.0;          // selection quantile level 1 - 0.1/ln(N)
  double kappa = 0.0;        // selection critical value
  std::vector<int> selected_set;  // 1-based components surviving selection
  double kappa_hat = 0.0;    // final critical value over the selected set
  double c_lb = 0.0;
};

struct ConfidenceInterval {
  double alpha = 0.0;
  double c_lb = 0.0;
  double c_ub = 0.0;
  double raw_c_lb = 0.0;  // before any truncation at zero
  LowerCBDetail detail;
  double ub_hat = 0.0;
  double lb_hat = 0.0;
  bool crossed = false;  // set when c_lb > c_ub
  std::string note;
};

/// Order-statistic quantile: the ceil(p * count)-th smallest value
/// (clamped to the first/last order statistic). This is the quantile
/// convention used everywhere in the inference code.
double order_statistic_quantile(std::vector<double> values, double p);

/// Symmetric PSD square root via eigendecomposition with negative
/// eigenvalues clamped to zero (bootstrap covariance estimates can be
/// numerically indefinite). Input must be symmetric within 1e-8.
Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& a);

/// One bootstrap resample. Row-level: n rows drawn with replacement.
/// Cluster-level: whole clusters drawn with replacement until the original
/// cluster count is reached (drawn clusters get fresh labels). The result
/// is a pure function of (s, replicate_seed, cluster_level).
Sample bootstrap_resample(const Sample& s, std::uint64_t replicate_seed,
                          bool cluster_level = false);

/// Upper (1+alpha)/2 confidence bound: the estimate plus the
/// (1+alpha)/2-quantile of the absolute bootstrap deviations.
double upper_confidence_bound(const Sample& s, const InferenceConfig& cfg);

/// Lower (1+alpha)/2 confidence bound on the max of the bounding functions,
/// with adaptive inequality selection:
///   1. bootstrap the bounding-function vector; estimate the covariance of
///      its sqrt(N)-scaled draws,
///   2. simulate correlated standard-normal maxima from the covariance
///      square root,
///   3. keep the components within a data-driven margin of the max,
///   4. take the (1+alpha)/2 critical value over the kept components.
/// Under the free-covariance regime the pooled component is excluded from
/// every max and from selection.
LowerCBDetail lower_confidence_bound(const Sample& s, const InferenceConfig& cfg);

/// Two-sided confidence interval around the identified set (both pieces at
/// level (1+alpha)/2; the same bootstrap replicates drive both). Under
/// no_sign the branch is chosen by the sign of the estimated covariances
/// and the negative branch is handled by negating the outcome and
/// mirroring. Identical inputs (including seed) give bit-identical results
/// for any worker count.
ConfidenceInterval confidence_interval(const Sample& s, const InferenceConfig& cfg);

}  // namespace proxybounds
