#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>

#include "proxybounds/baselines.hpp"
#include "proxybounds/bounds.hpp"
#include "test_support.hpp"

using namespace proxybounds;

TEST_CASE("reduced forms on the reference moments") {
  const MomentSummary m0 = pbtest::m0_moments();
  CHECK(reduced_form(m0, 1) == doctest::Approx(0.375).epsilon(1e-12));
  CHECK(reduced_form(m0, 2) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  CHECK(reduced_form(pbtest::zero_error_moments(1.0, 1.0), 1) ==
        doctest::Approx(1.0).epsilon(1e-14));
  CHECK_THROWS_AS(reduced_form(m0, 3), std::invalid_argument);

  MomentSummary degenerate = m0;
  degenerate.var_z2 = 0.0;
  CHECK_THROWS_AS(reduced_form(degenerate, 2), Error);
}

TEST_CASE("combination slope interpolates between the reduced forms") {
  const MomentSummary m0 = pbtest::m0_moments();
  CHECK(combo_coefficient(m0, 1.0) == doctest::Approx(reduced_form(m0, 1)).epsilon(1e-12));
  CHECK(combo_coefficient(m0, 0.0) == doctest::Approx(reduced_form(m0, 2)).epsilon(1e-12));
  CHECK(combo_coefficient(m0, 0.5) == doctest::Approx(0.4375 / 1.05).epsilon(1e-12));
  CHECK_THROWS_AS(combo_coefficient(m0, 1.5), std::invalid_argument);
}

TEST_CASE("two-regressor estimand on the reference moments") {
  // Normal equations solved by hand: Gram determinant 0.7775.
  const double b_star = lubotsky_wittenberg(pbtest::m0_moments());
  CHECK(b_star == doctest::Approx(0.1375 / 0.7775 + 0.18125 / 0.7775).epsilon(1e-12));
  CHECK(b_star == doctest::Approx(0.409968).epsilon(1e-6));
}

TEST_CASE("two-regressor estimand undershoots the free-covariance bound for classical errors") {
  const MomentSummary m = latent_to_observable_moments(example3_spec(2.0, 0.0));
  const double b_star = lubotsky_wittenberg(m);
  CHECK(b_star == doctest::Approx(0.6).epsilon(1e-12));
  const BoundsResult b = identify_free_cov(m);
  CHECK(b.lower == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  CHECK(b_star < b.lower);
}

TEST_CASE("identical proxies are collinear") {
  CHECK_THROWS_AS(lubotsky_wittenberg(pbtest::zero_error_moments(1.0, 1.0)), Error);
}

TEST_CASE("the two-regressor estimand maximizes the combination slope under classical errors") {
  Rng rng(90210);
  int tested = 0;
  while (tested < 20) {
    const LatentSpec spec = pbtest::random_classical_spec(rng);
    const MomentSummary m = latent_to_observable_moments(spec);

    double best = -std::numeric_limits<double>::infinity();
    for (int i = 0; i <= 1000; ++i)
      best = std::max(best, combo_coefficient(m, static_cast<double>(i) / 1000.0));

    double b_star = 0.0;
    try {
      b_star = lubotsky_wittenberg(m);
    } catch (const Error&) {
      continue;  // collinear draws are legitimate but uninformative here
    }
    ++tested;
    // The grid maximum can only fall short of the continuous argmax.
    CHECK(best <= b_star + 1e-10);
    CHECK(best == doctest::Approx(b_star).epsilon(1e-4));

    // Attenuation: every convex combination undershoots the slope.
    CHECK(best <= spec.beta + 1e-10);
  }
}

TEST_CASE("classical-error separation holds across the admissible region") {
  Rng rng(31415);
  for (int i = 0; i < 25; ++i) {
    const double var_u2 = 1.05 + rng.next_double() * 2.0;
    const double upper = (2.0 * var_u2 + 1.0) / 3.0;  // admissibility bound
    const double cov =
        rng.next_double() * 0.9 * std::min(upper, std::sqrt(var_u2));
    const LatentSpec spec = example3_spec(var_u2, cov);
    const MomentSummary m = latent_to_observable_moments(spec);
    const double b_star = lubotsky_wittenberg(m);
    const BoundsResult b = identify_free_cov(m);
    CHECK(b.lower > b_star);
    CHECK(spec.beta >= b.lower - 1e-12);
  }
}

TEST_CASE("second admissible point of the classical-error comparison") {
  // Correlated errors: Gram [[2, 1.5], [1.5, 2.5]], slopes 1/2.75 and
  // 0.5/2.75, so the estimand is 1.5/2.75 = 6/11. The continuous maximum
  // over combinations confirms it (weight 2/3, variance 11/6).
  const MomentSummary m = latent_to_observable_moments(example3_spec(1.5, 0.5));
  const double b_star = lubotsky_wittenberg(m);
  CHECK(b_star == doctest::Approx(6.0 / 11.0).epsilon(1e-12));
  CHECK(combo_coefficient(m, 2.0 / 3.0) == doctest::Approx(b_star).epsilon(1e-12));
  CHECK(identify_free_cov(m).lower == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  CHECK(b_star < identify_free_cov(m).lower);
}
