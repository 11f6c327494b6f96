#include <cmath>

#include "conekit/distributions.hpp"
#include "conekit/errors.hpp"
#include "conekit/identities.hpp"
#include "conekit/jordan.hpp"
#include "conekit/rng.hpp"
#include "conekit/stats.hpp"
#include "doctest.h"

using namespace conekit;

namespace {

Eigen::MatrixXd gaussian(int n, int k, double shift, RngStream& rng) {
  Eigen::MatrixXd m(n, k);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < k; ++j) m(i, j) = shift + rng.normal();
  }
  return m;
}

double uniform_cdf(double x) { return std::clamp(x, 0.0, 1.0); }

}  // namespace

TEST_CASE("kolmogorov survival function matches reference values") {
  // Reference values from an independent implementation of the series.
  CHECK(kolmogorov_q(0.3) == doctest::Approx(0.9999906941986655).epsilon(1e-10));
  CHECK(kolmogorov_q(0.5) == doctest::Approx(0.9639452436648751).epsilon(1e-10));
  CHECK(kolmogorov_q(1.0) == doctest::Approx(0.26999967167735456).epsilon(1e-10));
  CHECK(kolmogorov_q(1.2) == doctest::Approx(0.11224966667072497).epsilon(1e-10));
  CHECK(kolmogorov_q(1.36) == doctest::Approx(0.049485876755377876).epsilon(1e-10));
  CHECK(kolmogorov_q(2.0) == doctest::Approx(0.0006709252557796953).epsilon(1e-10));
}

TEST_CASE("chi-square survival and Fisher combination") {
  CHECK(chi2_survival(10.0, 5.0) == doctest::Approx(0.07523524614651217).epsilon(1e-12));
  CHECK(chi2_survival(3.2, 9.0) == doctest::Approx(0.9558347256002608).epsilon(1e-12));
  CHECK(chi2_survival(50.0, 20.0) == doctest::Approx(0.0002214766382487835).epsilon(1e-10));
  // A single p-value is returned unchanged.
  CHECK(fisher_combine({0.3}) == doctest::Approx(0.3).epsilon(1e-12));
  CHECK_THROWS_AS(fisher_combine({}), UsageError);
}

TEST_CASE("energy test on identical samples") {
  RngStream rng(11, 0);
  Eigen::MatrixXd a = gaussian(200, 3, 0.0, rng);
  TestReport r = energy_test(a, a, 500, rng);
  CHECK(r.statistic == 0.0);
  CHECK(r.p_value == 1.0);
  CHECK(r.permutations == 500);
  CHECK(r.n_a == 200);
  CHECK(energy_distance(a, a) == 0.0);
}

TEST_CASE("energy test separates shifted Gaussians") {
  RngStream rng(12, 0);
  Eigen::MatrixXd a = gaussian(500, 2, 0.0, rng);
  Eigen::MatrixXd b = gaussian(500, 2, 3.0, rng);
  TestReport r = energy_test(a, b, 2000, rng);
  CHECK(r.p_value < 0.001);
  CHECK(r.statistic > 0.0);
}

TEST_CASE("energy test errors and determinism") {
  RngStream rng(13, 0);
  Eigen::MatrixXd a = gaussian(30, 2, 0.0, rng);
  Eigen::MatrixXd b = gaussian(40, 2, 0.2, rng);
  CHECK_THROWS_AS(energy_test(Eigen::MatrixXd(0, 2), b, 500, rng), UsageError);
  CHECK_THROWS_AS(energy_test(a, gaussian(5, 3, 0, rng), 500, rng), UsageError);
  CHECK_THROWS_AS(energy_test(a, b, 100, rng), UsageError);
  RngStream s1(99, 4), s2(99, 4);
  TestReport r1 = energy_test(a, b, 500, s1);
  TestReport r2 = energy_test(a, b, 500, s2);
  CHECK(r1.p_value == r2.p_value);
  CHECK(r1.statistic == r2.statistic);
  CHECK(r1.seed == 99);
}

TEST_CASE("energy test is calibrated under the null") {
  std::vector<double> pvals;
  for (int rep = 0; rep < 200; ++rep) {
    RngStream rng(14, rep);
    Eigen::MatrixXd a = gaussian(40, 2, 0.0, rng);
    Eigen::MatrixXd b = gaussian(50, 2, 0.0, rng);
    pvals.push_back(energy_test(a, b, 500, rng).p_value);
  }
  TestReport u = ks_test(pvals, uniform_cdf);
  INFO("uniformity p-value " << u.p_value);
  CHECK(u.p_value > 0.01);
}

TEST_CASE("ks tests") {
  RngStream rng(15, 0);
  std::vector<double> pvals, pvals2;
  for (int rep = 0; rep < 200; ++rep) {
    std::vector<double> x(10000), y(3000);
    for (double& v : x) v = rng.uniform();
    for (double& v : y) v = rng.uniform();
    pvals.push_back(ks_test(x, uniform_cdf).p_value);
    pvals2.push_back(ks_test(x, y).p_value);
  }
  CHECK(ks_test(pvals, uniform_cdf).p_value > 0.01);
  CHECK(ks_test(pvals2, uniform_cdf).p_value > 0.01);

  std::vector<double> shifted(10000);
  for (double& v : shifted) v = 0.05 + rng.uniform();
  CHECK(ks_test(shifted, uniform_cdf).p_value < 0.001);
  CHECK_THROWS_AS(ks_test(std::vector<double>{}, uniform_cdf), UsageError);
  CHECK_THROWS_AS(ks_test(std::vector<double>{}, std::vector<double>{1.0}), UsageError);
}

TEST_CASE("moment summary") {
  Eigen::MatrixXd c = Eigen::MatrixXd::Constant(100, 3, 2.5);
  MomentSummary s = moment_summary(c);
  CHECK(s.se.norm() == 0.0);
  CHECK(s.mean[1] == 2.5);
  CHECK_THROWS_AS(moment_summary(Eigen::MatrixXd::Zero(5, 2), 10), UsageError);

  RngStream rng(16, 0);
  Eigen::MatrixXd g = gaussian(10000, 1, 1.0, rng);
  MomentSummary t = moment_summary(g);
  CHECK(std::abs(t.mean[0] - 1.0) < 3.0 * t.se[0]);
  CHECK(t.se[0] == doctest::Approx(0.01).epsilon(0.5));
}

TEST_CASE("conditional check on the rank-one algebra") {
  Algebra re = make_algebra(AlgebraKind::Real, 1);
  const double p = 1.5;
  std::vector<std::pair<ConeElement, ConeElement>> pairs, single;
  RngStream rng(17, 0);
  for (int i = 0; i < 10000; ++i) {
    const double lam = rng.gamma(2.0, 1.0);
    const double ell = gig_sample_scalar_exact(p, 1.0 / lam, 1.0, rng);
    pairs.emplace_back(ConeElement(re, Eigen::VectorXd::Constant(1, lam)),
                       ConeElement(re, Eigen::VectorXd::Constant(1, ell)));
  }
  ConditionalCheckConfig cfg;
  RngStream check(18, 0);
  TestReport ok = conditional_gig_check(pairs, p, cfg, check);
  INFO("fisher p " << ok.p_value);
  CHECK(ok.p_value > 0.01);
  CHECK(ok.method == TestMethod::Chi2Binned);
  CHECK(ok.warnings.empty());

  RngStream check2(18, 0);
  TestReport bad = conditional_gig_check(pairs, p + 1.0, cfg, check2);
  CHECK(bad.p_value < 0.001);

  // Fixed Lambda = e in one bin: a plain comparison against reference draws.
  for (int i = 0; i < 2000; ++i) {
    single.emplace_back(re.identity(), ConeElement(re, Eigen::VectorXd::Constant(
                                                          1, gig_sample_scalar_exact(p, 1.0, 1.0, rng))));
  }
  ConditionalCheckConfig one = cfg;
  one.bins = 1;
  RngStream check3(19, 0);
  CHECK(conditional_gig_check(single, p, one, check3).p_value > 0.01);

  // Too few pairs for ten bins.
  std::vector<std::pair<ConeElement, ConeElement>> few(pairs.begin(), pairs.begin() + 120);
  RngStream check4(20, 0);
  TestReport widened = conditional_gig_check(few, p, cfg, check4);
  CHECK(widened.warnings.size() == 1);
}

TEST_CASE("conditional check with random-walk references") {
  Algebra s2 = make_algebra(AlgebraKind::SymReal, 2);
  const double p = 2.0;
  RngStream rng(35, 0);
  std::vector<std::pair<ConeElement, ConeElement>> pairs;
  McmcConfig long_burn{1.0, 2000, 1, 0.3, true};
  for (int i = 0; i < 2000; ++i) {
    ConeElement lam = random_cone_element(s2, rng, 0.8);
    ConeElement ell = gig_sample(make_gig_params(p, inverse(lam), s2.identity()), 1, long_burn, rng).samples[0];
    pairs.emplace_back(lam, ell);
  }
  ConditionalCheckConfig cfg;
  cfg.bins = 5;
  RngStream check(36, 0);
  TestReport ok = conditional_gig_check(pairs, p, cfg, check);
  INFO("fisher p " << ok.p_value);
  CHECK(ok.p_value > 0.01);
  RngStream check2(36, 0);
  TestReport bad = conditional_gig_check(pairs, p + 1.0, cfg, check2);
  INFO("tampered p " << bad.p_value);
  CHECK(bad.p_value < 0.001);
}
