#pragma once

#include <cstdint>
#include <filesystem>

#include "proxybounds/types.hpp"

namespace proxybounds {

/// Complete second-moment description of the latent variables
/// (x*, eps, u1, u2) plus the slope. The latent regressor is normalized to
/// unit variance and is uncorrelated with eps, as are both error terms.
struct LatentSpec {
  double beta = 0.0;
  double mean_u1 = 0.0;
  double mean_u2 = 0.0;
  double var_eps = 0.0;
  double var_u1 = 0.0;
  double var_u2 = 0.0;
  double cov_x_u1 = 0.0;
  double cov_x_u2 = 0.0;
  double cov_u1_u2 = 0.0;

  /// Covariance of (x*, eps, u1, u2) in that order.
  Eigen::Matrix4d latent_covariance() const;

  /// Whether the implied latent covariance is positive semidefinite
  /// (smallest eigenvalue >= -tol * largest).
  bool latent_psd(double tol = 1e-9) const;

  bool nonnegative_error_correlation() const { return cov_u1_u2 >= 0.0; }

  /// Throws Error(invalid_spec) when a variance is negative.
  void validate() const;
};

/// Population observable moments implied by a latent spec:
///   var_y    = beta^2 + var_eps
///   var_zk   = 1 + var_uk + 2*cov_x_uk
///   cov_zky  = beta * (1 + cov_x_uk)
///   cov_z1z2 = 1 + cov_x_u1 + cov_x_u2 + cov_u1_u2
///   mean_zk  = mean_uk
MomentSummary latent_to_observable_moments(const LatentSpec& spec);

/// Draws n observations: latent variables jointly normal per the spec,
/// y = beta*x + eps and zk = x + uk. When covariate_count > 0, independent
/// standard-normal covariates enter y, both proxies, and the regressor with
/// unit loadings, so residualization is exercised; the emitted design
/// matrix carries the constant column first. Fully determined by
/// (spec, n, seed, covariate_count) and independent of any partitioning.
Sample sample_dgp(const LatentSpec& spec, std::size_t n, std::uint64_t seed,
                  std::size_t covariate_count = 0);

/// Error proportional to the regressor: u1 = a1 + c1 * x (duplicated onto
/// u2), no outcome noise. Makes the single-proxy reduced form undershoot
/// the lower bound. Requires beta > 0 and c1 > 0.
LatentSpec example1_spec(double beta, double c1, double a1);

/// Error negatively correlated with the regressor, unit slope, no outcome
/// noise (u2 duplicates u1). Makes the single-proxy reduced form overshoot
/// the upper bound. Requires var_u1 in (0,1) and
/// cov_x_u1 in (-(1+var_u1)/2, -var_u1).
LatentSpec example2_spec(double var_u1, double cov_x_u1);

/// Individually classical errors with var_u1 = 1, unit slope, no outcome
/// noise. Makes the Lubotsky-Wittenberg estimand more biased than the
/// free-covariance lower bound. Requires var_u2 > 1 and
/// var_u2 >= (3*cov_u1_u2 - 1)/2.
LatentSpec example3_spec(double var_u2, double cov_u1_u2);

/// Inverts the observable-moment map at a candidate slope inside the
/// baseline identified set, returning a latent spec that reproduces m
/// exactly. Candidates outside the set imply a negative variance or a
/// negative error covariance and raise Error(out_of_identified_set).
LatentSpec sharpness_spec(const MomentSummary& m, double beta_tilde);

/// Flat key-value serialization (keys: beta, var_eps, var_u1, var_u2,
/// cov_x_u1, cov_x_u2, cov_u1_u2, mean_u1, mean_u2). Means default to zero
/// when absent; '#' starts a comment.
void write_spec_file(const LatentSpec& spec, const std::filesystem::path& path);
LatentSpec read_spec_file(const std::filesystem::path& path);

}  // namespace proxybounds
