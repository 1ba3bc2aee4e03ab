#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace proxybounds {

/// Assumption regime under which the slope is partially identified.
///  - baseline: nonnegative slope, nonnegative proxy/outcome covariances,
///    measurement errors positively correlated.
///  - free_cov: as baseline but the error-error covariance is unrestricted.
///  - no_sign: slope sign unknown; the reduced-form covariances must agree
///    in sign and pin it down.
enum class Regime { baseline, free_cov, no_sign };

/// Divisor used for sample variances/covariances.
enum class DivisorPolicy { n_minus_1, n };

/// Shape of an identified (or estimated) set.
enum class Shape { interval, empty, point };

enum class ErrorKind {
  singular_design,
  insufficient_data,
  assumption_violation,
  degenerate_proxy,
  collinear_proxies,
  degenerate_refinement,
  invalid_spec,
  out_of_identified_set,
  degenerate_bootstrap,
  inference_failure,
  parse_error,
};

/// Library error with a machine-readable kind (the CLI maps kinds to exit
/// codes). Programming-contract violations throw std::invalid_argument
/// instead.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Raw observations: outcome, covariate matrix (first column all ones),
/// two proxies for the latent regressor, optional cluster labels.
struct Sample {
  Eigen::VectorXd y;
  Eigen::MatrixXd w;  // n x (J+1); column 0 is the constant
  Eigen::VectorXd z1;
  Eigen::VectorXd z2;
  std::optional<std::vector<std::int64_t>> cluster;

  std::size_t size() const { return static_cast<std::size_t>(y.size()); }
  std::size_t covariate_count() const {
    return w.cols() > 0 ? static_cast<std::size_t>(w.cols()) - 1 : 0;
  }

  /// Checks structural invariants: equal lengths, n >= J+3, unit first
  /// column. Rank of w is checked where it is factorized.
  void validate() const;
};

struct OlsFit {
  Eigen::VectorXd coefficients;
  Eigen::VectorXd residuals;
};

/// Outcome and proxies with the covariates partialled out (FWL residuals).
struct ResidualizedSample {
  Eigen::VectorXd y_res;
  Eigen::VectorXd z1_res;
  Eigen::VectorXd z2_res;
  std::optional<std::vector<std::int64_t>> cluster;

  std::size_t size() const { return static_cast<std::size_t>(y_res.size()); }
};

/// The observable second-moment summary every identification result
/// consumes: two proxy means, three variances, three covariances.
struct MomentSummary {
  double mean_z1 = 0.0;
  double mean_z2 = 0.0;
  double var_y = 0.0;
  double var_z1 = 0.0;
  double var_z2 = 0.0;
  double cov_z1y = 0.0;
  double cov_z2y = 0.0;
  double cov_z1z2 = 0.0;
  std::size_t n = 0;  // 0 for population summaries
  DivisorPolicy divisor_policy = DivisorPolicy::n_minus_1;
};

struct AssumptionCheck {
  std::string name;
  bool pass = false;
  double value = 0.0;
};

struct AssumptionReport {
  Regime regime = Regime::baseline;
  std::vector<AssumptionCheck> checks;
  bool overall = false;
};

/// The three lower-bounding functions. Index order used throughout
/// (including inference) is {pooled, proxy1, proxy2}.
struct LowerBoundComponents {
  double pooled = 0.0;  // both proxies combined through their cross-covariance
  double proxy1 = 0.0;
  double proxy2 = 0.0;

  double max3() const;
  double min3() const;
  Eigen::Vector3d as_vector() const {
    return Eigen::Vector3d(pooled, proxy1, proxy2);
  }
};

/// An identified interval (possibly empty or a single point) together with
/// the lower-bound components that produced it.
struct BoundsResult {
  Regime regime = Regime::baseline;
  Shape shape = Shape::interval;
  double lower = 0.0;
  double upper = 0.0;
  std::optional<double> component_pooled;  // absent under free_cov
  double component_proxy1 = 0.0;
  double component_proxy2 = 0.0;
  bool refinement_applied = false;
  std::string note;  // diagnostics, e.g. which sign branch was taken
};

const char* to_string(Regime r);
const char* to_string(DivisorPolicy p);
const char* to_string(Shape s);

}  // namespace proxybounds
