#include "proxybounds/bounds.hpp"

#include <cmath>
#include <string>

#include "proxybounds/dgp.hpp"
#include "proxybounds/moments.hpp"

namespace proxybounds {

LowerBoundComponents lb_components(const MomentSummary& m) {
  if (!(m.cov_z1z2 > -1.0))
    throw Error(ErrorKind::assumption_violation,
                "lb_components: cov_z1z2 must exceed -1, got " +
                    std::to_string(m.cov_z1z2));
  if (m.var_z1 < 0.0 || m.var_z2 < 0.0)
    throw std::invalid_argument("lb_components: negative proxy variance");
  LowerBoundComponents c;
  c.pooled = (m.cov_z1y + m.cov_z2y) / (1.0 + m.cov_z1z2);
  c.proxy1 = 2.0 * m.cov_z1y / (1.0 + m.var_z1);
  c.proxy2 = 2.0 * m.cov_z2y / (1.0 + m.var_z2);
  return c;
}

namespace {

void require_assumptions(const MomentSummary& m, Regime regime) {
  const AssumptionReport report = check_data_assumptions(m, regime);
  if (report.overall) return;
  std::string failed;
  for (const auto& check : report.checks)
    if (!check.pass) failed += (failed.empty() ? "" : "; ") + check.name;
  throw Error(ErrorKind::assumption_violation,
              std::string("data restrictions failed (") + to_string(regime) +
                  "): " + failed);
}

BoundsResult make_interval(Regime regime, double lower, double upper,
                           const LowerBoundComponents& c, bool with_pooled) {
  BoundsResult b;
  b.regime = regime;
  b.lower = lower;
  b.upper = upper;
  b.shape = upper < lower ? Shape::empty : Shape::interval;
  if (with_pooled) b.component_pooled = c.pooled;
  b.component_proxy1 = c.proxy1;
  b.component_proxy2 = c.proxy2;
  return b;
}

}  // namespace

BoundsResult identify_baseline(const MomentSummary& m) {
  require_assumptions(m, Regime::baseline);
  const LowerBoundComponents c = lb_components(m);
  return make_interval(Regime::baseline, c.max3(), std::sqrt(m.var_y), c, true);
}

BoundsResult identify_free_cov(const MomentSummary& m) {
  require_assumptions(m, Regime::free_cov);
  LowerBoundComponents c;
  c.proxy1 = 2.0 * m.cov_z1y / (1.0 + m.var_z1);
  c.proxy2 = 2.0 * m.cov_z2y / (1.0 + m.var_z2);
  return make_interval(Regime::free_cov, std::max(c.proxy1, c.proxy2),
                       std::sqrt(m.var_y), c, false);
}

BoundsResult identify_no_sign(const MomentSummary& m) {
  require_assumptions(m, Regime::no_sign);
  const LowerBoundComponents c = lb_components(m);

  // The sign check passed, so the covariances (and hence all three bounding
  // functions) share one sign.
  const int sign = (m.cov_z1y > 0.0 || m.cov_z2y > 0.0)   ? 1
                   : (m.cov_z1y < 0.0 || m.cov_z2y < 0.0) ? -1
                                                          : 0;

  if (sign == 0) {
    BoundsResult b = make_interval(Regime::no_sign, 0.0, 0.0, c, true);
    b.shape = Shape::point;
    b.note = "both proxy/outcome covariances are zero: slope point-identified at 0";
    return b;
  }

  if (sign > 0) {
    BoundsResult b = identify_baseline(m);
    b.regime = Regime::no_sign;
    return b;
  }

  // Negative branch: negate the outcome, identify, and mirror the interval.
  MomentSummary flipped = m;
  flipped.cov_z1y = -m.cov_z1y;
  flipped.cov_z2y = -m.cov_z2y;
  const BoundsResult mirrored = identify_baseline(flipped);
  BoundsResult b = make_interval(Regime::no_sign, -mirrored.upper, -mirrored.lower,
                                 c, true);
  b.note =
      "negative-sign branch: interval mirrored from the negated outcome, "
      "upper endpoint is the minimum bounding function";
  return b;
}

BoundsResult refine_better_proxy(const MomentSummary& m, const BoundsResult& b,
                                 BetterProxy better) {
  if (b.regime != Regime::baseline)
    throw std::invalid_argument("refine_better_proxy: baseline input required");
  if (m.var_z1 == m.var_z2)
    throw Error(ErrorKind::degenerate_refinement,
                "refine_better_proxy: equal proxy variances leave the ratio undefined");

  const double ratio = 2.0 * (m.cov_z1y - m.cov_z2y) / (m.var_z1 - m.var_z2);
  // For the better second proxy the restriction binds from below when
  // var_z1 > var_z2 and from above otherwise; a better first proxy mirrors.
  const bool binds_below = (better == BetterProxy::proxy2_better)
                               ? (m.var_z1 > m.var_z2)
                               : (m.var_z2 > m.var_z1);
  BoundsResult out = b;
  if (binds_below)
    out.lower = std::max(out.lower, ratio);
  else
    out.upper = std::min(out.upper, ratio);
  out.shape = out.upper < out.lower ? Shape::empty : Shape::interval;
  out.refinement_applied = true;
  return out;
}

OracleBounds brute_force_bounds(const MomentSummary& m, double grid_step,
                                std::optional<double> beta_max, Regime regime,
                                bool check_psd) {
  if (!(grid_step > 0.0))
    throw std::invalid_argument("brute_force_bounds: grid_step must be positive");
  if (regime == Regime::no_sign)
    throw std::invalid_argument("brute_force_bounds: scan covers nonnegative slopes only");
  const double ub = std::sqrt(std::max(m.var_y, 0.0));
  const double bmax = beta_max.value_or(2.0 * ub);
  if (bmax < ub)
    throw std::invalid_argument("brute_force_bounds: beta_max below sqrt(var_y)");

  OracleBounds result;
  result.psd_checked = check_psd;
  const bool require_error_cov = regime == Regime::baseline;
  const auto steps = static_cast<std::size_t>(std::floor(bmax / grid_step));

  for (std::size_t k = 0; k <= steps; ++k) {
    const double beta = static_cast<double>(k) * grid_step;
    LatentSpec spec;
    spec.beta = beta;
    if (k == 0) {
      // Zero slope is compatible with the data only when both
      // proxy/outcome covariances vanish.
      if (!(m.cov_z1y == 0.0 && m.cov_z2y == 0.0)) continue;
      spec.var_eps = m.var_y;
      spec.var_u1 = 1.0 + m.var_z1;
      spec.var_u2 = 1.0 + m.var_z2;
      spec.cov_x_u1 = -1.0;
      spec.cov_x_u2 = -1.0;
      spec.cov_u1_u2 = m.cov_z1z2 + 1.0;
    } else {
      spec.cov_x_u1 = m.cov_z1y / beta - 1.0;
      spec.cov_x_u2 = m.cov_z2y / beta - 1.0;
      spec.var_u1 = 1.0 + m.var_z1 - 2.0 * m.cov_z1y / beta;
      spec.var_u2 = 1.0 + m.var_z2 - 2.0 * m.cov_z2y / beta;
      spec.cov_u1_u2 = m.cov_z1z2 + 1.0 - (m.cov_z1y + m.cov_z2y) / beta;
      spec.var_eps = m.var_y - beta * beta;
    }
    if (spec.var_u1 < 0.0 || spec.var_u2 < 0.0 || spec.var_eps < 0.0) continue;
    if (require_error_cov && spec.cov_u1_u2 < 0.0) continue;

    if (result.feasible_count == 0) result.lower = beta;
    result.upper = beta;
    ++result.feasible_count;
    if (check_psd && !spec.latent_psd()) ++result.non_psd_count;
  }

  result.empty = result.feasible_count == 0;
  return result;
}

}  // namespace proxybounds
