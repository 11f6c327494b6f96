#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "conekit/algebra.hpp"

namespace conekit {

class RngStream;

// Density proportional to det(x)^p exp(-(<a,x> + <b,x^{-1}>)/2) against the
// invariant measure det(x)^{-dim/r} dx.
struct GigParams {
  double p;
  ConeElement a;
  ConeElement b;
};

// Throws DomainError unless a and b lie in the cone.
GigParams make_gig_params(double p, const ConeElement& a, const ConeElement& b);

// gamma_{p,a}: density proportional to det(x)^{p-dim/r} exp(-<a^{-1},x>/2).
struct WishartParams {
  double p;
  ConeElement a;
};

// Throws DomainError unless p > dim/r - 1 and a lies in the cone.
WishartParams make_wishart_params(double p, const ConeElement& a);

struct McmcConfig {
  double step_size = 1.0;  // multiplier of the built-in proposal scale
  int burn_in = 5000;
  int thin = 10;
  double adapt_target = 0.3;
  bool adapt = true;  // Robbins-Monro on log step size during burn-in only
};

void validate(const McmcConfig& cfg);

// Unnormalized log density with respect to Lebesgue measure in the ambient
// coordinates; -infinity outside the cone.
double gig_logdensity_lebesgue(const GigParams& params, const ConeElement& x);

// Maximizer of the Lebesgue density.
ConeElement gig_mode(const GigParams& params);

// Gaussian random walk x' = x + s F xi with a fixed factor F and a step
// multiplier s adapted during burn-in, then frozen.
class RandomWalkChain {
 public:
  using LogDensity = std::function<double(const ConeElement&)>;

  RandomWalkChain(LogDensity log_density, ConeElement start, Eigen::MatrixXd factor, McmcConfig cfg);

  // First call runs the burn-in; every call then advances `thin` steps.
  ConeElement next(RngStream& rng);

  double step_size() const { return step_; }
  // Acceptance rate after burn-in (burn-in rate before any sample is drawn).
  double acceptance_rate() const;
  std::vector<std::string> diagnostics() const;

 private:
  bool step(RngStream& rng);

  LogDensity log_density_;
  ConeElement x_;
  double log_f_;
  Eigen::MatrixXd factor_;
  McmcConfig cfg_;
  double step_;
  bool warmed_ = false;
  long accepted_ = 0;
  long proposed_ = 0;
  long burn_accepted_ = 0;
};

// Random walk targeting GIG(p; a, b), started at the mode, with proposals
// shaped by P(mode^{1/2}) and scaled by the local curvature.
std::unique_ptr<RandomWalkChain> make_gig_chain(const GigParams& params, const McmcConfig& cfg);
// Same kernel, started at an arbitrary cone point.
std::unique_ptr<RandomWalkChain> make_gig_chain(const GigParams& params, const McmcConfig& cfg,
                                                const ConeElement& start);

struct SampleBatch {
  std::vector<ConeElement> samples;
  double acceptance_rate = 1.0;
  double step_size = 0.0;
  std::vector<std::string> warnings;
};

SampleBatch gig_sample(const GigParams& params, std::size_t count, const McmcConfig& cfg, RngStream& rng);

// Exact draw from the scalar density x^{p-1} exp(-(a x + b/x)/2).
double gig_sample_scalar_exact(double p, double a, double b, RngStream& rng);

// One draw for a target used only once: exact on rank-one algebras when
// allowed, otherwise a fresh chain after its burn-in.
ConeElement gig_single_draw(const GigParams& params, const McmcConfig& cfg, RngStream& rng, bool prefer_exact = true);

// Adapted step multiplier from a pilot chain, for reuse with adapt = false.
double tune_gig_step(const GigParams& params, const McmcConfig& cfg, RngStream& rng);

// Stream of GIG draws: exact on rank-one algebras when allowed, otherwise a
// pool of independent random-walk chains visited in turn, so consecutive
// draws come from different chains and each chain advances pool * thin
// steps between its own draws.
class GigSource {
 public:
  GigSource(const GigParams& params, const McmcConfig& cfg, bool prefer_exact = true, int pool = 8);
  ConeElement next(RngStream& rng);
  bool exact() const { return exact_; }
  double acceptance_rate() const;
  std::vector<std::string> diagnostics() const;

 private:
  GigParams params_;
  McmcConfig cfg_;
  bool exact_;
  std::size_t turn_ = 0;
  std::vector<std::unique_ptr<RandomWalkChain>> chains_;
};

std::vector<ConeElement> wishart_sample(const WishartParams& params, std::size_t count, RngStream& rng);
std::vector<ConeElement> inv_wishart_sample(const WishartParams& params, std::size_t count, RngStream& rng);

// log of (2 pi)^{(dim-r)/2} prod_j Gamma(p - (j-1) d/2).
double log_multivariate_gamma(double p, const Algebra& algebra);

// Normalized log density of gamma_{p,a} with respect to Lebesgue measure in
// the ambient coordinates; -infinity outside the cone.
double wishart_logdensity_lebesgue(const WishartParams& params, const ConeElement& x);

}  // namespace conekit
