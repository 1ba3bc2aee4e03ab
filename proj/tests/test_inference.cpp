#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "proxybounds/bounds.hpp"
#include "proxybounds/inference.hpp"
#include "proxybounds/moments.hpp"
#include "test_support.hpp"

using namespace proxybounds;

namespace {

Sample constant_sample(std::size_t n = 40) {
  Sample s;
  s.y = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(n), 3.0);
  s.z1 = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(n), 1.0);
  s.z2 = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(n), 2.0);
  s.w = Eigen::MatrixXd::Ones(static_cast<Eigen::Index>(n), 1);
  return s;
}

InferenceConfig small_config(double alpha = 0.90) {
  InferenceConfig cfg;
  cfg.alpha = alpha;
  cfg.bootstrap_reps = 100;
  cfg.normal_draws = 1000;
  cfg.seed = 12345;
  return cfg;
}

/// Spec whose second proxy is nearly uninformative: its bounding function
/// sits far below the other two, so selection must drop it.
LatentSpec weak_second_proxy_spec() {
  LatentSpec spec;
  spec.beta = 0.6;
  spec.var_eps = 0.5;
  spec.var_u1 = 0.2;
  spec.var_u2 = 1.0;
  spec.cov_x_u1 = 0.0;
  spec.cov_x_u2 = -0.9;
  spec.cov_u1_u2 = 0.05;
  return spec;
}

}  // namespace

TEST_CASE("order-statistic quantile convention") {
  std::vector<double> v = {3, 1, 2, 5, 4, 7, 6, 9, 8, 10};
  CHECK(order_statistic_quantile(v, 0.5) == 5.0);    // ceil(5) = 5th smallest
  CHECK(order_statistic_quantile(v, 0.95) == 10.0);  // ceil(9.5) = 10th
  CHECK(order_statistic_quantile(v, 0.91) == 10.0);
  CHECK(order_statistic_quantile(v, 0.90) == 9.0);
  CHECK(order_statistic_quantile(v, 1e-9) == 1.0);
  CHECK(order_statistic_quantile({2.5}, 0.99) == 2.5);
  CHECK_THROWS_AS(order_statistic_quantile({}, 0.5), std::invalid_argument);
}

TEST_CASE("psd square root") {
  CHECK((psd_sqrt(Eigen::Matrix3d::Identity()) - Eigen::Matrix3d::Identity())
            .cwiseAbs()
            .maxCoeff() < 1e-14);

  Eigen::Matrix3d diag = Eigen::Vector3d(4.0, 9.0, 1.0).asDiagonal();
  const Eigen::MatrixXd root = psd_sqrt(diag);
  CHECK(root(0, 0) == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(root(1, 1) == doctest::Approx(3.0).epsilon(1e-14));
  CHECK(root(2, 2) == doctest::Approx(1.0).epsilon(1e-14));

  Rng rng(8);
  for (int trial = 0; trial < 20; ++trial) {
    Eigen::Matrix3d m;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) m(i, j) = rng.next_normal();
    const Eigen::Matrix3d a = m.transpose() * m;
    const Eigen::MatrixXd r = psd_sqrt(a);
    CHECK((r * r - a).cwiseAbs().maxCoeff() < 1e-10);
    CHECK((r - r.transpose()).cwiseAbs().maxCoeff() < 1e-12);
  }

  Eigen::MatrixXd asym(3, 3);
  asym << 1, 2, 0, 0, 1, 0, 0, 0, 1;
  CHECK_THROWS_AS(psd_sqrt(asym), std::invalid_argument);
}

TEST_CASE("singleton bootstrap returns the only row") {
  Sample s;
  s.y = Eigen::VectorXd::Constant(1, 42.0);
  s.z1 = Eigen::VectorXd::Constant(1, 1.0);
  s.z2 = Eigen::VectorXd::Constant(1, 2.0);
  s.w = Eigen::MatrixXd::Ones(1, 1);
  const Sample r = bootstrap_resample(s, 99);
  CHECK(r.size() == 1);
  CHECK(r.y[0] == 42.0);
}

TEST_CASE("bootstrap is a pure function of the seed") {
  const Sample s = sample_dgp(pbtest::l0_spec(), 100, 5, 0);
  const Sample a = bootstrap_resample(s, 777);
  const Sample b = bootstrap_resample(s, 777);
  CHECK((a.y - b.y).cwiseAbs().maxCoeff() == 0.0);
  const Sample c = bootstrap_resample(s, 778);
  CHECK((a.y - c.y).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("bootstrap multiplicities match the multinomial draw") {
  Sample s;
  s.y = Eigen::VectorXd(3);
  s.y << 10.0, 20.0, 30.0;
  s.z1 = Eigen::VectorXd::Zero(3);
  s.z2 = Eigen::VectorXd::Zero(3);
  s.w = Eigen::MatrixXd::Ones(3, 1);

  const int reps = 10000;
  Eigen::Vector3d counts = Eigen::Vector3d::Zero();
  for (int b = 0; b < reps; ++b) {
    const Sample r = bootstrap_resample(s, derive_stream(1, StreamDomain::bootstrap,
                                                         static_cast<std::uint64_t>(b)));
    for (Eigen::Index i = 0; i < 3; ++i)
      for (int row = 0; row < 3; ++row)
        if (r.y[i] == s.y[row]) counts[row] += 1.0;
  }
  for (int row = 0; row < 3; ++row)
    CHECK(counts[row] / reps == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("cluster bootstrap keeps whole clusters and the cluster count") {
  Sample s = sample_dgp(pbtest::l0_spec(), 40, 11, 0);
  std::vector<std::int64_t> labels(40);
  for (int i = 0; i < 40; ++i) labels[static_cast<std::size_t>(i)] = i / 10;
  s.cluster = labels;

  const Sample r = bootstrap_resample(s, 4242, true);
  REQUIRE(r.cluster.has_value());
  std::vector<std::int64_t> seen;
  for (auto label : *r.cluster)
    if (seen.empty() || seen.back() != label) seen.push_back(label);
  CHECK(seen.size() == 4);  // as many cluster draws as original clusters
  CHECK(r.size() % 10 == 0);

  Sample single = s;
  single.cluster = std::vector<std::int64_t>(40, 1);
  CHECK_THROWS_AS(bootstrap_resample(single, 1, true), Error);
}

TEST_CASE("zero-dispersion data collapse every bound to the estimate") {
  const Sample s = constant_sample();
  const InferenceConfig cfg = small_config();

  CHECK(upper_confidence_bound(s, cfg) == 0.0);

  const LowerCBDetail detail = lower_confidence_bound(s, cfg);
  CHECK(detail.omega_hat.cwiseAbs().maxCoeff() == 0.0);
  CHECK(detail.s_hat.cwiseAbs().maxCoeff() == 0.0);
  CHECK(detail.selected_set == std::vector<int>{1, 2, 3});
  CHECK(detail.c_lb == 0.0);

  const ConfidenceInterval ci = confidence_interval(s, cfg);
  CHECK(ci.c_lb == ci.lb_hat);
  CHECK(ci.c_ub == ci.ub_hat);
  CHECK(ci.c_lb == 0.0);
  CHECK(ci.c_ub == 0.0);
}

TEST_CASE("upper bound slack shrinks at the root-n rate") {
  InferenceConfig cfg;
  cfg.alpha = 0.90;
  cfg.bootstrap_reps = 500;
  cfg.normal_draws = 1000;
  cfg.seed = 31;

  const Sample small = sample_dgp(pbtest::l0_spec(), 2000, 8, 0);
  const Sample large = sample_dgp(pbtest::l0_spec(), 8000, 9, 0);
  const double ub_small = std::sqrt(moment_summary(residualize(small)).var_y);
  const double ub_large = std::sqrt(moment_summary(residualize(large)).var_y);

  const double slack_small = upper_confidence_bound(small, cfg) - ub_small;
  const double slack_large = upper_confidence_bound(large, cfg) - ub_large;
  CHECK(slack_small > 0.0);
  CHECK(slack_large > 0.0);
  // Quadrupling n should roughly halve the slack.
  const double ratio = slack_large / slack_small;
  CHECK(ratio > 0.35);
  CHECK(ratio < 0.70);
}

TEST_CASE("upper bound grows with the confidence level") {
  const Sample s = sample_dgp(pbtest::l0_spec(), 500, 21, 0);
  InferenceConfig cfg = small_config(0.90);
  const double at_90 = upper_confidence_bound(s, cfg);
  cfg.alpha = 0.99;
  const double at_99 = upper_confidence_bound(s, cfg);
  CHECK(at_99 >= at_90);
}

TEST_CASE("lower confidence bound sits below the estimated lower bound") {
  const Sample s = sample_dgp(pbtest::l0_spec(), 2000, 77, 0);
  InferenceConfig cfg;
  cfg.alpha = 0.90;
  cfg.bootstrap_reps = 500;
  cfg.normal_draws = 10000;
  cfg.seed = 55;
  const LowerCBDetail detail = lower_confidence_bound(s, cfg);
  const double lb_hat = detail.l_hat.maxCoeff();
  CHECK(detail.kappa_hat > 0.0);
  CHECK(detail.c_lb <= lb_hat);
  CHECK(detail.c_n == doctest::Approx(1.0 - 0.1 / std::log(2000.0)).epsilon(1e-12));
}

TEST_CASE("selection drops a bounding function far below the max") {
  const Sample s = sample_dgp(weak_second_proxy_spec(), 2000, 13, 0);
  InferenceConfig cfg;
  cfg.alpha = 0.90;
  cfg.bootstrap_reps = 300;
  cfg.normal_draws = 2000;
  cfg.seed = 99;
  const LowerCBDetail detail = lower_confidence_bound(s, cfg);
  // Component 3 (second proxy) trails by many sampling deviations.
  CHECK(std::find(detail.selected_set.begin(), detail.selected_set.end(), 3) ==
        detail.selected_set.end());
  CHECK_FALSE(detail.selected_set.empty());
}

TEST_CASE("the strongest component always survives selection") {
  Rng rng(2718);
  for (int trial = 0; trial < 8; ++trial) {
    const LatentSpec spec = pbtest::random_valid_spec(rng);
    const Sample s = sample_dgp(spec, 400, 1000 + static_cast<std::uint64_t>(trial), 0);
    InferenceConfig cfg = small_config();
    cfg.seed = 7000 + static_cast<std::uint64_t>(trial);
    const LowerCBDetail detail = lower_confidence_bound(s, cfg);
    int argmax = 0;
    detail.l_hat.maxCoeff(&argmax);
    CHECK(std::find(detail.selected_set.begin(), detail.selected_set.end(), argmax + 1) !=
          detail.selected_set.end());
  }
}

TEST_CASE("bootstrap covariance is translation invariant") {
  const Sample s = sample_dgp(pbtest::l0_spec(), 300, 64, 0);
  InferenceConfig cfg = small_config();
  cfg.seed = 424242;
  const LowerCBDetail detail = lower_confidence_bound(s, cfg);

  // Rebuild the replicate draws through the public pieces.
  const double sqrt_n = std::sqrt(300.0);
  const Eigen::Vector3d l_hat =
      lb_components(moment_summary(residualize(s))).as_vector();
  std::vector<Eigen::Vector3d> draws;
  for (int b = 0; b < cfg.bootstrap_reps; ++b) {
    const Sample r = bootstrap_resample(
        s, derive_stream(cfg.seed, StreamDomain::bootstrap, static_cast<std::uint64_t>(b)));
    draws.push_back(sqrt_n * lb_components(moment_summary(residualize(r))).as_vector());
  }
  auto covariance = [&](const Eigen::Vector3d& shift) {
    Eigen::Vector3d mean = Eigen::Vector3d::Zero();
    for (const auto& d : draws) mean += d - shift;
    mean /= static_cast<double>(draws.size());
    Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
    for (const auto& d : draws) {
      const Eigen::Vector3d dev = d - shift - mean;
      cov += dev * dev.transpose();
    }
    return Eigen::Matrix3d(cov / static_cast<double>(draws.size() - 1));
  };
  const Eigen::Matrix3d raw = covariance(Eigen::Vector3d::Zero());
  const Eigen::Matrix3d shifted = covariance(sqrt_n * l_hat);
  CHECK((raw - shifted).cwiseAbs().maxCoeff() < 1e-9);
  CHECK((raw - detail.omega_hat).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("interval contains the estimated bounds and nests across levels") {
  const Sample s = sample_dgp(pbtest::l0_spec(), 2000, 3, 0);
  InferenceConfig cfg;
  cfg.alpha = 0.90;
  cfg.bootstrap_reps = 500;
  cfg.normal_draws = 5000;
  cfg.seed = 17;

  const ConfidenceInterval at_90 = confidence_interval(s, cfg);
  CHECK(at_90.c_lb <= at_90.lb_hat);
  CHECK(at_90.c_ub >= at_90.ub_hat);
  CHECK(at_90.lb_hat <= at_90.ub_hat);
  CHECK_FALSE(at_90.crossed);

  cfg.alpha = 0.99;
  const ConfidenceInterval at_99 = confidence_interval(s, cfg);
  CHECK(at_99.c_lb <= at_90.c_lb);
  CHECK(at_99.c_ub >= at_90.c_ub);
}

TEST_CASE("results are bit-identical for any worker count") {
  const Sample s = sample_dgp(pbtest::l0_spec(), 1000, 23, 2);
  InferenceConfig cfg;
  cfg.alpha = 0.90;
  cfg.bootstrap_reps = 200;
  cfg.normal_draws = 2000;
  cfg.seed = 1001;

  cfg.workers = 1;
  const ConfidenceInterval serial = confidence_interval(s, cfg);
  cfg.workers = 8;
  const ConfidenceInterval parallel = confidence_interval(s, cfg);

  CHECK(serial.c_lb == parallel.c_lb);
  CHECK(serial.c_ub == parallel.c_ub);
  CHECK(serial.raw_c_lb == parallel.raw_c_lb);
  CHECK(serial.detail.kappa == parallel.detail.kappa);
  CHECK(serial.detail.kappa_hat == parallel.detail.kappa_hat);
  CHECK((serial.detail.omega_hat - parallel.detail.omega_hat).cwiseAbs().maxCoeff() ==
        0.0);
  CHECK(serial.detail.selected_set == parallel.detail.selected_set);
}

TEST_CASE("truncation clips only the lower bound and only toward zero") {
  // A slope of zero makes negative lower confidence bounds routine.
  LatentSpec spec = pbtest::l0_spec();
  spec.beta = 0.0;
  const Sample s = sample_dgp(spec, 400, 5, 0);
  InferenceConfig cfg = small_config();
  cfg.seed = 2002;
  // Sampling noise can put the estimated covariances on either side of
  // zero; skip the draw if the baseline restrictions fail outright.
  const MomentSummary m = moment_summary(residualize(s));
  if (check_data_assumptions(m, Regime::baseline).overall) {
    const ConfidenceInterval raw = confidence_interval(s, cfg);
    cfg.truncate_at_zero = true;
    const ConfidenceInterval clipped = confidence_interval(s, cfg);
    CHECK(clipped.c_ub == raw.c_ub);
    CHECK(clipped.raw_c_lb == raw.raw_c_lb);
    CHECK(clipped.c_lb == std::max(raw.c_lb, 0.0));
    CHECK(clipped.c_lb >= 0.0);
  }
}

TEST_CASE("free-covariance intervals ignore the pooled component") {
  const Sample s = sample_dgp(pbtest::l0_spec(), 800, 6, 0);
  InferenceConfig cfg = small_config();
  cfg.seed = 3003;
  cfg.regime = Regime::free_cov;
  const ConfidenceInterval ci = confidence_interval(s, cfg);
  // Selection can only pick the proxy components.
  for (int k : ci.detail.selected_set) CHECK(k != 1);
  CHECK(ci.lb_hat ==
        doctest::Approx(std::max(ci.detail.l_hat[1], ci.detail.l_hat[2])));
  CHECK(ci.c_lb <= ci.lb_hat);
}

TEST_CASE("sign-agnostic interval matches the baseline one on positive data") {
  const Sample s = sample_dgp(pbtest::l0_spec(), 600, 30, 0);
  InferenceConfig cfg = small_config();
  cfg.seed = 4004;
  const ConfidenceInterval base = confidence_interval(s, cfg);
  cfg.regime = Regime::no_sign;
  const ConfidenceInterval agnostic = confidence_interval(s, cfg);
  CHECK(agnostic.c_lb == base.c_lb);
  CHECK(agnostic.c_ub == base.c_ub);
  CHECK_FALSE(agnostic.note.empty());
}

TEST_CASE("sign-agnostic interval mirrors on negated data") {
  Sample s = sample_dgp(pbtest::l0_spec(), 600, 30, 0);
  InferenceConfig cfg = small_config();
  cfg.seed = 4004;
  cfg.regime = Regime::no_sign;
  const ConfidenceInterval positive = confidence_interval(s, cfg);

  s.y = -s.y;
  const ConfidenceInterval negative = confidence_interval(s, cfg);
  CHECK(negative.c_lb == -positive.c_ub);
  CHECK(negative.c_ub == -positive.raw_c_lb);
  CHECK(negative.lb_hat == -positive.ub_hat);
  CHECK(negative.ub_hat == -positive.lb_hat);
  CHECK(negative.c_lb <= negative.lb_hat);
  CHECK(negative.c_ub >= negative.ub_hat);
}

TEST_CASE("sign-agnostic interval rejects mixed covariance signs") {
  Rng rng(606);
  const std::size_t n = 200;
  Sample s;
  s.y.resize(static_cast<Eigen::Index>(n));
  s.z1.resize(static_cast<Eigen::Index>(n));
  s.z2.resize(static_cast<Eigen::Index>(n));
  s.w = Eigen::MatrixXd::Ones(static_cast<Eigen::Index>(n), 1);
  for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(n); ++i) {
    const double x = rng.next_normal();
    s.y[i] = x + 0.1 * rng.next_normal();
    s.z1[i] = x + rng.next_normal();
    s.z2[i] = -x + rng.next_normal();  // opposite-signed covariance
  }
  InferenceConfig cfg = small_config();
  cfg.regime = Regime::no_sign;
  CHECK_THROWS_AS(confidence_interval(s, cfg), Error);
}

TEST_CASE("cluster bootstrap intervals run and stay deterministic") {
  Sample s = sample_dgp(pbtest::l0_spec(), 300, 41, 0);
  std::vector<std::int64_t> labels(300);
  for (int i = 0; i < 300; ++i) labels[static_cast<std::size_t>(i)] = i / 10;
  s.cluster = labels;
  InferenceConfig cfg = small_config();
  cfg.cluster_bootstrap = true;
  cfg.seed = 505;
  const ConfidenceInterval a = confidence_interval(s, cfg);
  const ConfidenceInterval b = confidence_interval(s, cfg);
  CHECK(a.c_lb == b.c_lb);
  CHECK(a.c_ub == b.c_ub);
  CHECK(a.c_lb <= a.lb_hat);
  CHECK(a.c_ub >= a.ub_hat);
}

TEST_CASE("cluster bootstrap without labels fails as an inference error") {
  const Sample s = sample_dgp(pbtest::l0_spec(), 100, 19, 0);  // no cluster column
  CHECK_THROWS_AS(bootstrap_resample(s, 1, true), Error);
  InferenceConfig cfg = small_config();
  cfg.cluster_bootstrap = true;
  CHECK_THROWS_AS(confidence_interval(s, cfg), Error);
}

TEST_CASE("config validation") {
  InferenceConfig cfg = small_config();
  cfg.alpha = 0.4;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = small_config();
  cfg.bootstrap_reps = 10;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = small_config();
  cfg.normal_draws = 10;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}

TEST_CASE("small-scale coverage stays near the nominal level") {
  // Second data-generating process for the coverage library.
  LatentSpec spec;
  spec.beta = 0.8;
  spec.var_eps = 0.8;
  spec.var_u1 = 0.3;
  spec.var_u2 = 0.6;
  spec.cov_x_u1 = 0.2;
  spec.cov_x_u2 = -0.3;
  spec.cov_u1_u2 = 0.1;
  REQUIRE(spec.latent_psd());

  const BoundsResult truth = identify_baseline(latent_to_observable_moments(spec));
  REQUIRE(truth.shape == Shape::interval);

  const int reps = 80;
  const double alpha = 0.80;
  int covered = 0;
  for (int rep = 0; rep < reps; ++rep) {
    const Sample s = sample_dgp(spec, 600, derive_stream(42, StreamDomain::sim_rep,
                                                         static_cast<std::uint64_t>(rep)),
                                0);
    InferenceConfig cfg;
    cfg.alpha = alpha;
    cfg.bootstrap_reps = 120;
    cfg.normal_draws = 1200;
    cfg.seed = derive_stream(42, StreamDomain::sim_inference,
                             static_cast<std::uint64_t>(rep));
    const ConfidenceInterval ci = confidence_interval(s, cfg);
    if (ci.c_lb <= truth.lower && ci.c_ub >= truth.upper) ++covered;
  }
  const double coverage = static_cast<double>(covered) / reps;
  const double slack = 2.0 * std::sqrt(alpha * (1.0 - alpha) / reps);
  CHECK(coverage >= alpha - slack);
}
