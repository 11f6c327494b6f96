#include <algorithm>
#include <cmath>

#include "conekit/chains.hpp"
#include "conekit/errors.hpp"
#include "conekit/identities.hpp"
#include "conekit/jordan.hpp"
#include "conekit/rng.hpp"
#include "conekit/stats.hpp"
#include "doctest.h"

using namespace conekit;

namespace {

double rel_err(const ConeElement& x, const ConeElement& y) {
  return (x.coords() - y.coords()).norm() / std::max(1e-300, y.coords().norm());
}

ConeElement scalar(const Algebra& re, double v) { return ConeElement(re, Eigen::VectorXd::Constant(1, v)); }

std::vector<double> first_coord(const std::vector<ConeElement>& xs) {
  std::vector<double> v;
  for (const auto& x : xs) v.push_back(x[0]);
  return v;
}

}  // namespace

TEST_CASE("chain step on the scalar algebra") {
  Algebra re = make_algebra(AlgebraKind::Real, 1);
  const double w1 = 1.7, w2 = 0.6;
  ChainState s0 = unscaled_start(re);
  ChainState s1 = chain_step(s0, scalar(re, w1));
  ChainState s2 = chain_step(s1, scalar(re, w2));
  CHECK(s1.L[0] == doctest::Approx(w1));
  CHECK(s2.L[0] == doctest::Approx(w2 * w2 * w1 + w2));
  CHECK(s1.Lambda[0] == 1.0);
  CHECK(s1.I[0] == doctest::Approx(1.0 / w1));
  CHECK(s2.Lambda[0] == doctest::Approx((w2 + 1.0 / w1) * (w2 + 1.0 / w1)));
  CHECK(s2.I[0] == doctest::Approx(1.0 / w1 + 1.0 / (w1 * w1 * w2)));
  CHECK_THROWS_AS(chain_step(s1, scalar(re, -1.0)), UsageError);
}

TEST_CASE("first steps on a matrix algebra") {
  Algebra s2 = make_algebra(AlgebraKind::SymReal, 2);
  RngStream rng(40, 0);
  for (int t = 0; t < 10; ++t) {
    ConeElement w = random_cone_element(s2, rng);
    ChainState s1 = chain_step(unscaled_start(s2), w);
    CHECK(rel_err(s1.Lambda, s2.identity()) == 0.0);
    CHECK(rel_err(s1.I, inverse(w)) < 1e-14);
    CHECK(rel_err(s1.L, w) < 1e-14);
  }
}

TEST_CASE("run_chain is deterministic") {
  Algebra s2 = make_algebra(AlgebraKind::SymReal, 2);
  ChainConfig cfg;
  cfg.p = 2.0;
  cfg.steps = 15;
  RngStream a(41, 3), b(41, 3);
  Trajectory ta = run_chain(s2, cfg, a), tb = run_chain(s2, cfg, b);
  REQUIRE(ta.states.size() == 16);
  for (std::size_t k = 0; k < ta.states.size(); ++k) {
    CHECK(ta.states[k].L.coords() == tb.states[k].L.coords());
    CHECK(ta.states[k].Lambda.coords() == tb.states[k].Lambda.coords());
    CHECK(ta.states[k].I.coords() == tb.states[k].I.coords());
  }
  ChainConfig bad = cfg;
  bad.steps = 0;
  CHECK_THROWS_AS(run_chain(s2, bad, a), ConfigError);
  bad = cfg;
  bad.ell0 = s2.identity();
  CHECK_THROWS_AS(run_chain(s2, bad, a), ConfigError);
}

TEST_CASE("series plateaus above the threshold") {
  // L_k grows geometrically and leaves the double range near 300 steps.
  Algebra re = make_algebra(AlgebraKind::Real, 1);
  ChainConfig cfg;
  cfg.p = 2.0;
  cfg.steps = 200;
  RngStream rng(42, 0);
  Trajectory t = run_chain(re, cfg, rng);
  const double last = std::abs(t.states[200].I[0] - t.states[199].I[0]);
  CHECK(last < 1e-8);
  for (int k = 0; k < 200; ++k) CHECK(t.states[k + 1].I[0] >= t.states[k].I[0]);
}

TEST_CASE("closed forms agree with the recursions") {
  RngStream rng(43, 0);
  // The unscaled chain's condition number grows by orders of magnitude per
  // step, so its check stays on a short horizon.
  Algebra s2 = make_algebra(AlgebraKind::SymReal, 2);
  ChainConfig plain;
  plain.p = 2.0;
  plain.steps = 15;
  Trajectory t = run_chain(s2, plain, rng);
  double worst = 0.0;
  for (int k = 1; k <= plain.steps; ++k) {
    worst = std::max(worst, rel_err(closed_form_L(t.increments, k, plain), t.states[k].L));
    worst = std::max(worst, rel_err(closed_form_Lambda(t.increments, k, plain), t.states[k].Lambda));
    worst = std::max(worst, rel_err(closed_form_I(t.increments, k, 1), t.states[k].I));
    CHECK(min_eigenvalue(t.states[k].I - t.states[k - 1].I) > -1e-12 * norm(t.states[k].I));
  }
  INFO("worst relative error " << worst);
  CHECK(worst < 1e-8);
  CHECK(rel_err(closed_form_Lambda(t.increments, 0, plain), s2.identity()) == 0.0);

  for (auto alg : {make_algebra(AlgebraKind::SymReal, 2), make_algebra(AlgebraKind::Lorentz, 4)}) {
    ChainConfig scaled;
    scaled.p = 1.5;
    scaled.n_scale = 32;
    scaled.steps = 100;
    scaled.ell0 = random_cone_element(alg, rng);
    scaled.lambda0 = random_cone_element(alg, rng);
    Trajectory u = run_chain(alg, scaled, rng);
    CHECK(rel_err(u.states[0].L, *scaled.ell0) == 0.0);
    CHECK(rel_err(u.states[0].Lambda, *scaled.lambda0) == 0.0);
    double worst_scaled = 0.0;
    for (int k = 0; k <= 100; ++k) {
      worst_scaled = std::max(worst_scaled, rel_err(closed_form_L(u.increments, k, scaled), u.states[k].L));
      worst_scaled =
          std::max(worst_scaled, rel_err(closed_form_Lambda(u.increments, k, scaled), u.states[k].Lambda));
    }
    INFO(alg.label() << " worst scaled relative error " << worst_scaled);
    CHECK(worst_scaled < 1e-8);
    CHECK_THROWS_AS(closed_form_L(u.increments, 101, scaled), UsageError);
  }
}

TEST_CASE("unscaled chain reports lost cone membership") {
  Algebra s2 = make_algebra(AlgebraKind::SymReal, 2);
  ChainConfig cfg;
  cfg.p = 2.0;
  cfg.steps = 200;
  RngStream rng(53, 0);
  try {
    run_chain(s2, cfg, rng);
    FAIL("expected loss of cone membership");
  } catch (const NumericalError& e) {
    CHECK(std::string(e.what()).find("at step") != std::string::npos);
  }
}

TEST_CASE("running operators") {
  RngStream rng(44, 0);
  Algebra l4 = make_algebra(AlgebraKind::Lorentz, 4);
  ChainConfig cfg;
  cfg.steps = 12;
  Trajectory t = run_chain(l4, cfg, rng);
  const ChainState& s = t.states.back();
  const Eigen::MatrixXd prod = s.forward.matrix().transpose() * s.backward.matrix();
  const double scale = s.forward.matrix().norm() * s.backward.matrix().norm();
  CHECK((prod - Eigen::MatrixXd::Identity(4, 4)).norm() < 1e-13 * scale);
  // L_k = forward^*(I_k) for the unscaled start.
  CHECK(rel_err(s.forward.adjoint()(s.I), s.L) < 1e-10);
}

TEST_CASE("block oracle") {
  Algebra s2 = make_algebra(AlgebraKind::SymReal, 2);
  ChainConfig cfg;
  cfg.p = 2.0;
  cfg.steps = 15;
  RngStream rng(45, 0);
  Trajectory t = run_chain(s2, cfg, rng);
  auto block = block_oracle(t.increments);
  REQUIRE(block.size() == 16);
  CHECK(rel_err(block[1].first, s2.identity()) < 1e-14);
  double worst = 0.0;
  for (int k = 1; k <= cfg.steps; ++k) {
    worst = std::max(worst, rel_err(block[k].first, t.states[k].Lambda));
    worst = std::max(worst, rel_err(block[k].second, t.states[k].L));
    CHECK(in_cone(block[k].second));
  }
  INFO("worst relative error " << worst);
  CHECK(worst < 1e-8);

  ChainConfig scaled;
  scaled.p = 2.0;
  scaled.n_scale = 32;
  scaled.steps = 100;
  scaled.ell0 = random_cone_element(s2, rng);
  scaled.lambda0 = random_cone_element(s2, rng);
  Trajectory u = run_chain(s2, scaled, rng);
  auto sb = block_oracle(u.increments, scaled);
  double worst_scaled = 0.0;
  for (int k = 0; k <= 100; ++k) {
    worst_scaled = std::max(worst_scaled, rel_err(sb[k].first, u.states[k].Lambda));
    worst_scaled = std::max(worst_scaled, rel_err(sb[k].second, u.states[k].L));
    CHECK(in_cone(sb[k].second));
  }
  INFO("worst scaled relative error " << worst_scaled);
  CHECK(worst_scaled < 1e-8);

  Algebra l3 = make_algebra(AlgebraKind::Lorentz, 3);
  CHECK_THROWS_AS(block_oracle({l3.identity()}), UsageError);
}

TEST_CASE("kernel K") {
  Algebra re = make_algebra(AlgebraKind::Real, 1);
  RngStream rng(46, 0);
  ConeElement a = scalar(re, 2.5);
  std::vector<double> xs, ref;
  for (int i = 0; i < 4000; ++i) {
    auto [first, x] = kernel_K_sample(a, 1.5, McmcConfig{}, rng);
    CHECK(first[0] == 2.5);
    xs.push_back(x[0]);
    ref.push_back(gig_sample_scalar_exact(1.5, 1.0 / 2.5, 1.0, rng));
  }
  CHECK(ks_test(xs, ref).p_value > 0.01);
  Algebra s2 = make_algebra(AlgebraKind::SymReal, 2);
  auto [lam, x] = kernel_K_sample(s2.identity(), 1.0, McmcConfig{}, rng);
  CHECK(lam.coords() == s2.identity().coords());
  CHECK(in_cone(x));
}

TEST_CASE("intertwining on the scalar algebra") {
  Algebra re = make_algebra(AlgebraKind::Real, 1);
  RngStream rng(47, 0);
  IntertwiningSamples s = intertwining_experiment(scalar(re, 1.0), 2.0, 2000, McmcConfig{}, rng, 2);
  std::vector<ConeElement> l, r;
  Eigen::MatrixXd a(2000, 2), b(2000, 2);
  for (int i = 0; i < 2000; ++i) {
    a.row(i) << s.lhs[i].first[0], s.lhs[i].second[0];
    b.row(i) << s.rhs[i].first[0], s.rhs[i].second[0];
  }
  CHECK(energy_test(a, b, 500, rng).p_value > 0.01);
  // The determinism contract includes the worker count.
  RngStream again(47, 0);
  IntertwiningSamples s1 = intertwining_experiment(scalar(re, 1.0), 2.0, 2000, McmcConfig{}, again, 1);
  for (int i = 0; i < 2000; ++i) CHECK(s1.rhs[i].second[0] == s.rhs[i].second[0]);
}

TEST_CASE("conditional law along the chain") {
  Algebra re = make_algebra(AlgebraKind::Real, 1);
  RngStream rng(48, 0);
  PairSamples pairs = chain_pairs(re, 1.5, 4, 10000, McmcConfig{}, rng, 2);
  RngStream check(49, 0);
  TestReport r = conditional_gig_check(pairs, 1.5, ConditionalCheckConfig{}, check);
  INFO("fisher p " << r.p_value);
  CHECK(r.p_value > 0.01);
}

TEST_CASE("discrete perpetuity") {
  Algebra re = make_algebra(AlgebraKind::Real, 1);
  RngStream rng(50, 0);
  DufresneResult d = dufresne_estimate(re, 2.0, 300, 4000, McmcConfig{}, rng, 2);
  CHECK(d.warnings.empty());
  std::vector<double> v = first_coord(d.samples);
  // Inverse gamma with shape 2 and scale 1/2: cdf exp(-1/(2x)) (1 + 1/(2x)).
  TestReport ks = ks_test(v, [](double x) { return x <= 0 ? 0.0 : std::exp(-0.5 / x) * (1.0 + 0.5 / x); });
  CHECK(ks.p_value > 0.01);
  CHECK(*std::max_element(d.last_increment.begin(), d.last_increment.end()) < 1e-8);

  // Below the threshold the partial sums keep growing.
  RngStream r100(51, 0), r400(51, 0);
  auto median_trace = [](const DufresneResult& x) {
    std::vector<double> t;
    for (const auto& s : x.samples) t.push_back(trace(s));
    std::nth_element(t.begin(), t.begin() + t.size() / 2, t.end());
    return t[t.size() / 2];
  };
  DufresneResult d100 = dufresne_estimate(re, -0.05, 100, 1000, McmcConfig{}, r100);
  DufresneResult d400 = dufresne_estimate(re, -0.05, 400, 1000, McmcConfig{}, r400);
  CHECK(d400.warnings.size() >= 1);
  CHECK(median_trace(d400) > 10.0 * median_trace(d100));
}

TEST_CASE("stationary laws") {
  Algebra re = make_algebra(AlgebraKind::Real, 1);
  RngStream rng(52, 0);
  StationaritySamples one = stationarity_one_step(re, 2.0, 5000, McmcConfig{}, rng);
  CHECK(ks_test(first_coord(one.pushed), first_coord(one.fresh)).p_value > 0.01);
  StationaritySamples small = stationarity_small_step(re, -2.0, 8, 5000, McmcConfig{}, rng);
  CHECK(ks_test(first_coord(small.pushed), first_coord(small.fresh)).p_value > 0.01);
  CHECK_THROWS_AS(stationarity_small_step(re, 0.5, 8, 10, McmcConfig{}, rng), DomainError);

  Algebra s2 = make_algebra(AlgebraKind::SymReal, 2);
  StationaritySamples m = stationarity_one_step(s2, 3.0, 1500, McmcConfig{}, rng, 2);
  TestReport e = energy_test(to_matrix(m.pushed), to_matrix(m.fresh), 500, rng);
  INFO("energy p " << e.p_value);
  CHECK(e.p_value > 0.01);
}
