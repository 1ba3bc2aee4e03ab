#include "proxybounds/baselines.hpp"

#include <cmath>
#include <string>

namespace proxybounds {

double reduced_form(const MomentSummary& m, int proxy_index) {
  if (proxy_index != 1 && proxy_index != 2)
    throw std::invalid_argument("reduced_form: proxy index must be 1 or 2");
  const double var = proxy_index == 1 ? m.var_z1 : m.var_z2;
  const double cov = proxy_index == 1 ? m.cov_z1y : m.cov_z2y;
  if (!(var > 0.0))
    throw Error(ErrorKind::degenerate_proxy,
                "reduced_form: proxy " + std::to_string(proxy_index) +
                    " has zero variance");
  return cov / var;
}

double combo_coefficient(const MomentSummary& m, double delta) {
  if (!(delta >= 0.0 && delta <= 1.0))
    throw std::invalid_argument("combo_coefficient: delta must lie in [0, 1]");
  const double var = delta * delta * m.var_z1 + (1.0 - delta) * (1.0 - delta) * m.var_z2 +
                     2.0 * delta * (1.0 - delta) * m.cov_z1z2;
  if (!(var > 0.0))
    throw Error(ErrorKind::degenerate_proxy,
                "combo_coefficient: combined proxy variance is zero at delta = " +
                    std::to_string(delta));
  const double cov = delta * m.cov_z1y + (1.0 - delta) * m.cov_z2y;
  return cov / var;
}

double lubotsky_wittenberg(const MomentSummary& m) {
  const double det = m.var_z1 * m.var_z2 - m.cov_z1z2 * m.cov_z1z2;
  const double scale = std::max({std::fabs(m.var_z1), std::fabs(m.var_z2),
                                 std::fabs(m.cov_z1z2), 1e-300});
  if (std::fabs(det) <= 1e-12 * scale * scale)
    throw Error(ErrorKind::collinear_proxies,
                "lubotsky_wittenberg: proxy Gram matrix is singular");
  const double slope1 = (m.var_z2 * m.cov_z1y - m.cov_z1z2 * m.cov_z2y) / det;
  const double slope2 = (m.var_z1 * m.cov_z2y - m.cov_z1z2 * m.cov_z1y) / det;
  return slope1 + slope2;
}

}  // namespace proxybounds
