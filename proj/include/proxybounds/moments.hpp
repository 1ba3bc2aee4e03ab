#pragma once

#include "proxybounds/types.hpp"

namespace proxybounds {

/// Least squares of y on x via a rank-revealing orthogonal decomposition.
/// Throws Error(singular_design) when x is rank deficient (relative
/// tolerance 1e-10).
OlsFit ols_fit(const Eigen::VectorXd& y, const Eigen::MatrixXd& x);

/// Partials the covariates out of the outcome and both proxies: each series
/// is replaced by its OLS residual on w. Cluster labels pass through.
ResidualizedSample residualize(const Sample& s);

/// Reduces residualized data to the second-moment summary. Residual means
/// are recorded as mean_z1/mean_z2 (near zero once a constant is partialled
/// out). Requires n >= 3.
MomentSummary moment_summary(const ResidualizedSample& r,
                             DivisorPolicy policy = DivisorPolicy::n_minus_1);

/// Evaluates the testable data restrictions for the given regime. Failures
/// are reported, not thrown.
///   baseline: var_y > 0, cov_z1y >= 0, cov_z2y >= 0, cov_z1z2 > -1
///   free_cov: drops the cov_z1z2 restriction
///   no_sign:  var_y > 0, cov_z1z2 > -1, sign(cov_z1y) == sign(cov_z2y)
AssumptionReport check_data_assumptions(const MomentSummary& m, Regime regime);

}  // namespace proxybounds
