#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "conekit/algebra.hpp"
#include "conekit/distributions.hpp"
#include "conekit/stats.hpp"

namespace conekit {

class RngStream;

enum class Experiment {
  DufresneDiscrete,
  DufresneContinuous,
  Intertwining,
  ConditionalLaw,
  Inversion,
  ScalingLimit,
  LorentzFactorization,
  Stationarity,
  GaussianLimit,
  Lyapunov,
};

std::string experiment_name(Experiment e);
// Throws UsageError for an unknown name.
Experiment experiment_from_name(const std::string& name);
const std::vector<Experiment>& all_experiments();

struct VerifyParams {
  std::size_t replicas = 2000;
  McmcConfig mcmc;
  int permutations = 500;
  int workers = 1;
  double alpha = 0.01;
  // Chain experiments.
  int steps = 200;   // Dufresne series length
  int chain_step = 4;  // step at which (Lambda, L) pairs are taken
  int n_scale = 64;
  // Diffusion experiments.
  double T = 30.0;
  double h = 1e-3;
  double t = 1.0;
  // GIG experiments.
  double concentration = 1e4;
  std::optional<ConeElement> a;  // intertwining start; default e
  std::optional<ConeElement> b;  // inversion second parameter; default e
  // Added to p inside the conditional-law check only.
  double tamper_p = 0.0;
};

struct Check {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct VerifyOutcome {
  std::string experiment;
  std::vector<Check> checks;
  std::vector<std::pair<std::string, TestReport>> reports;
  std::vector<std::pair<std::string, double>> estimates;
  std::vector<std::string> warnings;
  bool passed() const;
};

// Runs one experiment end to end. Throws UsageError when the algebra does not
// fit the experiment and DomainError when p is outside its range.
VerifyOutcome run_experiment(Experiment e, const Algebra& algebra, double p, const VerifyParams& params,
                             RngStream& rng);

// E[X] for X ~ Inv(gamma_{p,e}): e / (2 (p - dim/r)).
double inverse_wishart_mean_scale(const Algebra& algebra, double p);

}  // namespace conekit
