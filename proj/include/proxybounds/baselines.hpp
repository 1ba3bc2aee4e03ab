#pragma once

#include <optional>
#include <utility>

#include "proxybounds/types.hpp"

namespace proxybounds {

/// Comparison estimands computed alongside the bounds.
struct BaselineEstimates {
  double b1 = 0.0;  // reduced form on proxy 1
  double b2 = 0.0;  // reduced form on proxy 2
  std::optional<std::pair<double, double>> b_delta;  // (delta, coefficient)
  std::optional<double> b_star;  // Lubotsky-Wittenberg; absent when proxies are collinear
};

/// Slope of the residualized outcome on residualized proxy k in {1, 2},
/// ignoring measurement error: cov_zky / var_zk.
double reduced_form(const MomentSummary& m, int proxy_index);

/// Slope on the convex combination delta*z1 + (1-delta)*z2 of the two
/// proxies. Requires delta in [0, 1] and a positive combined variance.
double combo_coefficient(const MomentSummary& m, double delta);

/// Lubotsky-Wittenberg estimand: the sum of the two slopes from regressing
/// the outcome on both proxies jointly (the bias-minimizing convex
/// combination under individually classical errors). Solved from the 2x2
/// normal equations; collinear proxies raise Error(collinear_proxies).
double lubotsky_wittenberg(const MomentSummary& m);

}  // namespace proxybounds
