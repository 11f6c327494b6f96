#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "conekit/algebra.hpp"
#include "conekit/distributions.hpp"

namespace conekit {

class RngStream;

enum class TestMethod { EnergyPermutation, KsTwoSample, KsVsCdf, Chi2Binned };

std::string method_name(TestMethod method);

struct TestReport {
  TestMethod method = TestMethod::EnergyPermutation;
  double statistic = 0.0;
  double p_value = 1.0;
  std::size_t n_a = 0;
  std::size_t n_b = 0;
  int permutations = 0;
  std::uint64_t seed = 0;
  std::vector<std::string> warnings;
};

// Rows are observations.
Eigen::MatrixXd to_matrix(const std::vector<ConeElement>& samples);

// Energy distance with a permutation p-value. The statistic is
// nm/(n+m) times the V-statistic energy distance; the p-value is
// (1 + #{permuted >= observed}) / (1 + permutations).
TestReport energy_test(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, int permutations, RngStream& rng);

// Plain V-statistic energy distance (no scaling, no permutations).
double energy_distance(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);
// Unbiased (U-statistic) estimate of the population energy distance.
double energy_distance_unbiased(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

// Asymptotic Kolmogorov survival function Q(lambda) = P(K > lambda).
double kolmogorov_q(double lambda);

TestReport ks_test(std::vector<double> sample, const std::function<double(double)>& cdf);
TestReport ks_test(std::vector<double> a, std::vector<double> b);

double chi2_survival(double statistic, double dof);
// Fisher's combination of independent p-values.
double fisher_combine(const std::vector<double>& p_values);

struct ConditionalCheckConfig {
  int bins = 10;
  int refs_per_pair = 9;
  // Random-walk legs for algebras without an exact sampler.
  int exchange_steps = 40;
  double step_size = 1.0;
  bool prefer_exact = true;
  int workers = 1;
};

// Checks that L given Lambda follows GIG(p; Lambda^{-1}, e). For each pair,
// log det L is ranked among refs_per_pair reference draws from that law; the
// ranks are uniform under the hypothesis. Without an exact sampler the
// references come from the parallel exchangeable scheme: a reversible random
// walk runs exchange_steps from L to a hub, then refs_per_pair independent
// walks of the same length run from the hub, so L and the references are
// exchangeable whenever L has the target law. A chi-square of rank counts is run
// in each equal-mass bin of trace(Lambda) and the bins are combined with
// Fisher's method.
TestReport conditional_gig_check(const std::vector<std::pair<ConeElement, ConeElement>>& pairs, double p,
                                 const ConditionalCheckConfig& cfg, RngStream& rng);

struct MomentSummary {
  Eigen::VectorXd mean;
  Eigen::VectorXd variance;  // per-coordinate sample variance
  Eigen::VectorXd se;        // standard error of the mean from batch means
  int batches = 0;
};

MomentSummary moment_summary(const Eigen::MatrixXd& samples, int batches = 10);

}  // namespace conekit
