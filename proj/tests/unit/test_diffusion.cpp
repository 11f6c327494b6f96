#include <algorithm>
#include <cmath>

#include <boost/math/special_functions/gamma.hpp>
#include <unsupported/Eigen/MatrixFunctions>

#include "conekit/diffusion.hpp"
#include "conekit/errors.hpp"
#include "conekit/identities.hpp"
#include "conekit/jordan.hpp"
#include "conekit/rng.hpp"
#include "conekit/stats.hpp"
#include "doctest.h"

using namespace conekit;

namespace {

double rel_err(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y) { return (x - y).norm() / y.norm(); }

std::vector<double> first_coord(const std::vector<ConeElement>& xs) {
  std::vector<double> v;
  for (const auto& x : xs) v.push_back(x[0]);
  return v;
}

double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double variance(const std::vector<double>& v) {
  const double m = mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return s / static_cast<double>(v.size() - 1);
}

std::vector<Algebra> test_algebras() {
  return {make_algebra(AlgebraKind::Real, 1), make_algebra(AlgebraKind::SymReal, 2),
          make_algebra(AlgebraKind::SymReal, 3), make_algebra(AlgebraKind::Lorentz, 4)};
}

}  // namespace

TEST_CASE("group increment is the exponential of 2 L(v)") {
  RngStream rng(11, 0);
  for (const Algebra& alg : test_algebras()) {
    const ConeElement v = random_element(alg, rng, 0.7);
    const Eigen::MatrixXd expected = (2.0 * lmul(v).matrix()).exp();
    CHECK(rel_err(group_increment(v).matrix(), expected) < 1e-12);
  }
  const auto basis = p_basis(make_algebra(AlgebraKind::Lorentz, 3));
  for (std::size_t i = 0; i < basis.size(); ++i) {
    for (std::size_t j = 0; j < basis.size(); ++j) CHECK(inner(basis[i], basis[j]) == doctest::Approx(i == j));
  }
}

TEST_CASE("stepper matches the dense product of increments") {
  RngStream rng(12, 0);
  const double p = 0.8, h = 0.01;
  for (const Algebra& alg : test_algebras()) {
    HypoStepper s(alg, p);
    const Eigen::VectorXd scales = orthonormal_scales(alg);
    Eigen::MatrixXd g = Eigen::MatrixXd::Identity(alg.dim(), alg.dim()), back = g;
    Eigen::VectorXd iota = Eigen::VectorXd::Zero(alg.dim()), fwd = iota;
    const Eigen::VectorXd e = alg.identity().coords();
    for (int k = 0; k < 50; ++k) {
      Eigen::VectorXd dB(alg.dim());
      for (int i = 0; i < dB.size(); ++i) dB[i] = std::sqrt(h) * rng.normal();
      const ConeElement v(alg, scales.cwiseProduct(dB) + p * h * e);
      iota += h * (back * e);
      g = g * group_increment(v).matrix();
      back = back * group_increment(-v).matrix();
      fwd += h * (g * e);
      s.step_with(dB, h);
    }
    CHECK(s.time() == doctest::Approx(0.5));
    CHECK(rel_err(s.op().matrix(), g) < 1e-11);
    CHECK(rel_err(s.adj_inv_op().matrix(), back) < 1e-11);
    CHECK(rel_err(s.adj_inv_e().coords(), back * e) < 1e-11);
    CHECK(rel_err(s.iota().coords(), iota) < 1e-11);
    CHECK(rel_err(s.forward_integral().coords(), fwd) < 1e-11);
    const ConeElement x = random_cone_element(alg, rng);
    CHECK(rel_err(s.apply_adjoint(x).coords(), g.transpose() * x.coords()) < 1e-11);
  }
}

TEST_CASE("adjoint bookkeeping over unit time") {
  RngStream rng(13, 0);
  for (const Algebra& alg : test_algebras()) {
    HypoStepper s(alg, 1.5);
    for (int k = 0; k < 1000; ++k) s.step(rng, 1e-3);
    const LinOperator direct = s.op().adjoint().inverse();
    const double err = (direct.matrix() - s.adj_inv_op().matrix()).norm() / s.adj_inv_op().matrix().norm();
    CHECK(err <= 1e-6);
  }
}

TEST_CASE("scalar reduction of the adjoint inverse") {
  // log y_T = -2 B_T - 2 p T.
  Algebra re = make_algebra(AlgebraKind::Real, 1);
  RngStream rng(14, 0);
  const double p = 0.7, T = 1.0;
  std::vector<double> logs;
  for (int r = 0; r < 4000; ++r) {
    HypoStepper s(re, p);
    for (int k = 0; k < 100; ++k) s.step(rng, T / 100);
    logs.push_back(std::log(s.adj_inv_e()[0]));
  }
  CHECK(std::abs(mean(logs) + 2.0 * p * T) < 3.0 * 2.0 / std::sqrt(4000.0));
  CHECK(std::abs(variance(logs) - 4.0 * T) < 0.3);
}

TEST_CASE("halving the step leaves terminal moments unchanged") {
  Algebra s2 = make_algebra(AlgebraKind::SymReal, 2);
  RngStream rng(15, 0);
  const double p = 2.0, h = 0.01;
  Eigen::MatrixXd coarse(400, 3), fine(400, 3);
  for (int r = 0; r < 400; ++r) {
    HypoStepper a(s2, p), b(s2, p);
    for (int k = 0; k < 200; ++k) {
      Eigen::VectorXd d1(3), d2(3);
      for (int i = 0; i < 3; ++i) {
        d1[i] = std::sqrt(h / 2) * rng.normal();
        d2[i] = std::sqrt(h / 2) * rng.normal();
      }
      b.step_with(d1, h / 2);
      b.step_with(d2, h / 2);
      a.step_with(d1 + d2, h);
    }
    coarse.row(r) = a.iota().coords().transpose();
    fine.row(r) = b.iota().coords().transpose();
  }
  const MomentSummary mc = moment_summary(coarse), mf = moment_summary(fine);
  for (int i = 0; i < 3; ++i) CHECK(std::abs(mc.mean[i] - mf.mean[i]) < mf.se[i]);
}

TEST_CASE("continuous perpetuity on the scalar algebra") {
  Algebra re = make_algebra(AlgebraKind::Real, 1);
  RngStream rng(16, 0);
  const double p = 2.0;
  PerpetuityResult r = perpetuity_estimate(re, p, 30.0, 1e-3, 1000, rng, 2);
  CHECK(r.warnings.empty());
  // 1/Gamma(p, scale 2).
  auto cdf = [p](double x) { return boost::math::gamma_q(p, 0.5 / x); };
  CHECK(ks_test(first_coord(r.samples), cdf).p_value > 0.01);
  CHECK(*std::max_element(r.tail.begin(), r.tail.end()) < 1e-20);
  RngStream w(16, 1);
  CHECK_FALSE(perpetuity_estimate(re, -0.1, 1.0, 0.01, 10, w).warnings.empty());
}

TEST_CASE("continuous perpetuity on symmetric matrices") {
  Algebra s2 = make_algebra(AlgebraKind::SymReal, 2);
  RngStream rng(17, 0);
  const double p = 3.0;
  PerpetuityResult r = perpetuity_estimate(s2, p, 15.0, 2e-3, 800, rng, 4);
  RngStream ref(17, 1);
  const auto target = inv_wishart_sample(make_wishart_params(p, s2.identity()), 800, ref);
  CHECK(energy_test(to_matrix(r.samples), to_matrix(target), 500, ref).p_value > 0.01);
}

TEST_CASE("lorentz factorization of the adjoint inverse") {
  Algebra l4 = make_algebra(AlgebraKind::Lorentz, 4);
  RngStream rng(18, 0);
  const double p = 1.5, t = 0.5;
  LorentzSummary s = lorentz_factorization_experiment(l4, p, t, 1e-3, 50, 4000, rng, 4);
  CHECK(s.max_norm_error < 1e-10);
  CHECK(std::abs(mean(s.b)) < 3.0 * std::sqrt(t / 2 / 4000.0));
  // Under the trace form, b_t = <e, B_t>/2 has variance t/2.
  CHECK(std::abs(variance(s.b) - t / 2) < 0.1 * t / 2);
  // xi is a hyperbolic Brownian motion run at twice the clock; cosh R has mean
  // exp((n-1) t).
  std::vector<double> ch;
  for (double r : s.radius) ch.push_back(std::cosh(r));
  CHECK(std::abs(mean(ch) / std::exp(3.0 * t) - 1.0) < 0.05);

  Algebra s2 = make_algebra(AlgebraKind::SymReal, 2);
  CHECK_THROWS_AS(lorentz_factorization_experiment(s2, p, t, 1e-2, 0, 10, rng), UsageError);
  CHECK_THROWS_AS(lorentz_factorize({s2.identity()}, {0.0}, p), UsageError);
}

TEST_CASE("lyapunov exponent of the adjoint inverse") {
  RngStream rng(19, 0);
  Algebra re = make_algebra(AlgebraKind::Real, 1), l4 = make_algebra(AlgebraKind::Lorentz, 4);
  LyapunovResult a = lyapunov_probe(re, 1.0, 50.0, 1e-2, 200, rng);
  CHECK(a.predicted == doctest::Approx(-2.0));
  CHECK(std::abs(a.exponent / a.predicted - 1.0) < 0.1);
  LyapunovResult b = lyapunov_probe(l4, 3.0, 50.0, 1e-2, 200, rng, 4);
  CHECK(b.predicted == doctest::Approx(-4.0));
  CHECK(std::abs(b.exponent / b.predicted - 1.0) < 0.1);
  LyapunovResult c = lyapunov_probe(l4, l4.dim_over_rank() - 1.0, 50.0, 1e-2, 200, rng, 4);
  CHECK(c.predicted == doctest::Approx(0.0));
  CHECK(std::abs(c.exponent) <= 0.3);
}

TEST_CASE("time reversal of the forward integral") {
  Algebra s2 = make_algebra(AlgebraKind::SymReal, 2);
  RngStream rng(20, 0);
  const ConeElement ell0 = random_cone_element(s2, rng);
  PairedSamples r = time_reversal_samples(ell0, 0.5, 1.0, 1e-2, 1000, rng, 4);
  CHECK(energy_test(to_matrix(r.a), to_matrix(r.b), 500, rng).p_value > 0.01);
}

TEST_CASE("conditional law of the continuous pair") {
  Algebra re = make_algebra(AlgebraKind::Real, 1);
  RngStream rng(21, 0);
  const double p = 1.5;
  const auto pairs = continuous_pairs(re.identity(), p, 1.0, 1e-3, 2000, McmcConfig{}, rng, 4);
  CHECK(conditional_gig_check(pairs, p, ConditionalCheckConfig{}, rng).p_value > 0.01);
  CHECK(conditional_gig_check(pairs, p + 1.0, ConditionalCheckConfig{}, rng).p_value < 0.001);
}

TEST_CASE("continuous stationarity") {
  RngStream rng(22, 0);
  Algebra re = make_algebra(AlgebraKind::Real, 1), s2 = make_algebra(AlgebraKind::SymReal, 2);
  PairedSamples a = continuous_stationarity(re, -2.0, 1.0, 1e-3, 3000, rng, 4);
  CHECK(ks_test(first_coord(a.a), first_coord(a.b)).p_value > 0.01);
  PairedSamples b = continuous_stationarity(s2, -2.0, 1.0, 2e-3, 1000, rng, 4);
  CHECK(energy_test(to_matrix(b.a), to_matrix(b.b), 500, rng).p_value > 0.01);
  CHECK_THROWS_AS(continuous_stationarity(s2, -0.2, 1.0, 1e-2, 10, rng), DomainError);
}

TEST_CASE("scaled chain approaches the diffusion") {
  Algebra re = make_algebra(AlgebraKind::Real, 1);
  RngStream rng(23, 0);
  const ConeElement e = re.identity();
  ScalingSamples s = scaling_limit_experiment(e, e, 1.0, 64, 1.0, 1e-3, 3000, McmcConfig{}, rng, 4);
  CHECK(ks_test(first_coord(s.discrete), first_coord(s.sde)).p_value > 0.005);
}

TEST_CASE("path simulation records and validates") {
  Algebra s2 = make_algebra(AlgebraKind::SymReal, 2);
  RngStream rng(24, 0);
  GroupPathConfig cfg;
  cfg.p = 1.0;
  cfg.T = 0.5;
  cfg.h = 0.01;
  cfg.record_stride = 10;
  const auto path = simulate_hypo_bm(s2, cfg, rng);
  REQUIRE(path.size() == 6);
  CHECK(path.front().t == 0.0);
  CHECK(path.back().t == doctest::Approx(0.5));
  for (const auto& st : path) {
    CHECK(in_cone(st.ell));
    CHECK(in_cone(st.lambda));
    CHECK(rel_err(st.g_op.adjoint().inverse()(s2.identity()).coords(), st.g_adj_inv_e.coords()) < 1e-10);
  }
  CHECK(path.front().lambda[0] == doctest::Approx(1e-6));
  cfg.h = 1.0;
  CHECK_THROWS_AS(simulate_hypo_bm(s2, cfg, rng), ConfigError);
  cfg.h = 0.01;
  cfg.ell0 = make_algebra(AlgebraKind::Real, 1).identity();
  CHECK_THROWS_AS(simulate_hypo_bm(s2, cfg, rng), ConfigError);
}
