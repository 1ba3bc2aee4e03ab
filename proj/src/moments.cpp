#include "proxybounds/moments.hpp"

#include <cmath>
#include <string>

namespace proxybounds {

double LowerBoundComponents::max3() const {
  return std::max(pooled, std::max(proxy1, proxy2));
}

double LowerBoundComponents::min3() const {
  return std::min(pooled, std::min(proxy1, proxy2));
}

const char* to_string(Regime r) {
  switch (r) {
    case Regime::baseline: return "baseline";
    case Regime::free_cov: return "free-cov";
    case Regime::no_sign: return "no-sign";
  }
  return "?";
}

const char* to_string(DivisorPolicy p) {
  return p == DivisorPolicy::n_minus_1 ? "n-1" : "n";
}

const char* to_string(Shape s) {
  switch (s) {
    case Shape::interval: return "interval";
    case Shape::empty: return "empty";
    case Shape::point: return "point";
  }
  return "?";
}

void Sample::validate() const {
  const auto n = static_cast<Eigen::Index>(size());
  if (w.rows() != n || z1.size() != n || z2.size() != n)
    throw std::invalid_argument("sample: series lengths differ");
  if (cluster && static_cast<Eigen::Index>(cluster->size()) != n)
    throw std::invalid_argument("sample: cluster label length differs");
  if (w.cols() < 1)
    throw std::invalid_argument("sample: covariate matrix needs a constant column");
  if (n < w.cols() + 2)
    throw Error(ErrorKind::insufficient_data,
                "sample: need at least " + std::to_string(w.cols() + 2) +
                    " rows for " + std::to_string(w.cols()) + " design columns, got " +
                    std::to_string(n));
  for (Eigen::Index i = 0; i < n; ++i)
    if (w(i, 0) != 1.0)
      throw std::invalid_argument("sample: first design column must be all ones");
}

OlsFit ols_fit(const Eigen::VectorXd& y, const Eigen::MatrixXd& x) {
  if (x.rows() != y.size())
    throw std::invalid_argument("ols_fit: row count mismatch");
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
  qr.setThreshold(1e-10);
  if (qr.rank() < x.cols())
    throw Error(ErrorKind::singular_design,
                "singular design: rank " + std::to_string(qr.rank()) + " < " +
                    std::to_string(x.cols()) + " columns");
  OlsFit fit;
  fit.coefficients = qr.solve(y);
  fit.residuals = y - x * fit.coefficients;
  return fit;
}

ResidualizedSample residualize(const Sample& s) {
  s.validate();
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(s.w);
  qr.setThreshold(1e-10);
  if (qr.rank() < s.w.cols())
    throw Error(ErrorKind::singular_design,
                "singular design: rank " + std::to_string(qr.rank()) + " < " +
                    std::to_string(s.w.cols()) + " columns");
  ResidualizedSample out;
  out.y_res = s.y - s.w * qr.solve(s.y);
  out.z1_res = s.z1 - s.w * qr.solve(s.z1);
  out.z2_res = s.z2 - s.w * qr.solve(s.z2);
  out.cluster = s.cluster;
  return out;
}

namespace {

double centered_dot(const Eigen::VectorXd& a, double mean_a,
                    const Eigen::VectorXd& b, double mean_b) {
  double acc = 0.0;
  for (Eigen::Index i = 0; i < a.size(); ++i)
    acc += (a[i] - mean_a) * (b[i] - mean_b);
  return acc;
}

}  // namespace

MomentSummary moment_summary(const ResidualizedSample& r, DivisorPolicy policy) {
  const auto n = r.size();
  if (n < 3)
    throw Error(ErrorKind::insufficient_data,
                "moment_summary: need n >= 3, got " + std::to_string(n));
  if (r.z1_res.size() != static_cast<Eigen::Index>(n) ||
      r.z2_res.size() != static_cast<Eigen::Index>(n))
    throw std::invalid_argument("moment_summary: series lengths differ");

  const double mean_y = r.y_res.mean();
  const double mean_z1 = r.z1_res.mean();
  const double mean_z2 = r.z2_res.mean();
  const double divisor =
      policy == DivisorPolicy::n_minus_1 ? static_cast<double>(n - 1)
                                         : static_cast<double>(n);

  MomentSummary m;
  m.mean_z1 = mean_z1;
  m.mean_z2 = mean_z2;
  m.var_y = centered_dot(r.y_res, mean_y, r.y_res, mean_y) / divisor;
  m.var_z1 = centered_dot(r.z1_res, mean_z1, r.z1_res, mean_z1) / divisor;
  m.var_z2 = centered_dot(r.z2_res, mean_z2, r.z2_res, mean_z2) / divisor;
  m.cov_z1y = centered_dot(r.z1_res, mean_z1, r.y_res, mean_y) / divisor;
  m.cov_z2y = centered_dot(r.z2_res, mean_z2, r.y_res, mean_y) / divisor;
  m.cov_z1z2 = centered_dot(r.z1_res, mean_z1, r.z2_res, mean_z2) / divisor;
  m.n = n;
  m.divisor_policy = policy;
  return m;
}

namespace {

int sign_of(double x) { return (x > 0.0) - (x < 0.0); }

}  // namespace

AssumptionReport check_data_assumptions(const MomentSummary& m, Regime regime) {
  AssumptionReport report;
  report.regime = regime;
  auto add = [&](std::string name, bool pass, double value) {
    report.checks.push_back({std::move(name), pass, value});
  };

  add("var_y > 0", m.var_y > 0.0, m.var_y);
  switch (regime) {
    case Regime::baseline:
      add("cov_z1y >= 0", m.cov_z1y >= 0.0, m.cov_z1y);
      add("cov_z2y >= 0", m.cov_z2y >= 0.0, m.cov_z2y);
      add("cov_z1z2 > -1", m.cov_z1z2 > -1.0, m.cov_z1z2);
      break;
    case Regime::free_cov:
      add("cov_z1y >= 0", m.cov_z1y >= 0.0, m.cov_z1y);
      add("cov_z2y >= 0", m.cov_z2y >= 0.0, m.cov_z2y);
      break;
    case Regime::no_sign:
      add("cov_z1z2 > -1", m.cov_z1z2 > -1.0, m.cov_z1z2);
      add("sign(cov_z1y) == sign(cov_z2y)",
          sign_of(m.cov_z1y) == sign_of(m.cov_z2y),
          static_cast<double>(sign_of(m.cov_z1y) - sign_of(m.cov_z2y)));
      break;
  }

  report.overall = true;
  for (const auto& check : report.checks) report.overall = report.overall && check.pass;
  return report;
}

}  // namespace proxybounds
