#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "conekit/algebra.hpp"
#include "conekit/distributions.hpp"

namespace conekit {

class RngStream;

// State after k steps. forward = P(w_1)...P(w_k) and
// backward = P(w_1^{-1})...P(w_k^{-1}) = (forward^*)^{-1}.
struct ChainState {
  int step = 0;
  ConeElement L;
  ConeElement Lambda;
  ConeElement I;
  LinOperator forward;
  LinOperator backward;
};

// L_0 = 0, I_0 = 0; Lambda is held at e until L_1 exists, so Lambda_1 = e.
ChainState unscaled_start(const Algebra& algebra);
ChainState scaled_start(const ConeElement& ell0, const ConeElement& lambda0);

// L <- P(w)L + w/n, Lambda <- P(w + L^{-1}/n)Lambda (skipped while L = 0),
// I <- I + backward(w^{-1})/n.
ChainState chain_step(const ChainState& state, const ConeElement& w, int scale = 1);

struct ChainConfig {
  double p = 1.0;
  int n_scale = 1;
  int steps = 100;
  // Both unset: the unscaled start L_0 = 0, Lambda_1 = e.
  std::optional<ConeElement> ell0;
  std::optional<ConeElement> lambda0;
  McmcConfig mcmc;
  bool prefer_exact = true;
};

void validate(const ChainConfig& cfg, const Algebra& algebra);

struct Trajectory {
  std::vector<ConeElement> increments;  // w_1 ... w_steps
  std::vector<ChainState> states;       // k = 0 ... steps
};

// Increments i.i.d. GIG(p; n e, n e). Throws NumericalError naming the step
// if L or Lambda leaves the cone through rounding.
Trajectory run_chain(const Algebra& algebra, const ChainConfig& cfg, RngStream& rng);
Trajectory run_chain_on(const Algebra& algebra, const ChainConfig& cfg, const std::vector<ConeElement>& increments);

// Recomputed from the increments without the recursions:
// L_k = P(w_k)...P(w_1)(l_0 + I_k) and
// Lambda_k = P(L_k)P(w_k^{-1})...P(w_1^{-1})P(l_0^{-1})(lambda_0); for the
// unscaled start the last two factors become P(L_1^{-1})(e) applied after
// P(w_2^{-1}).
ConeElement closed_form_I(const std::vector<ConeElement>& increments, int k, int scale);
ConeElement closed_form_L(const std::vector<ConeElement>& increments, int k, const ChainConfig& cfg);
ConeElement closed_form_Lambda(const std::vector<ConeElement>& increments, int k, const ChainConfig& cfg);

// Literal 2r x 2r block recursion G_{k+1} = G_k [[w, 0], [1/n, w^{-1}]] with
// G = [[W, 0], [Z, W^{-T}]] on matrices; returns (Lambda_k, L_k) =
// (Z_k^T Z_k, W_k^T Z_k) for k = 0 ... increments.size(). The unscaled start
// is G_0 = 1 (Lambda_0 reported as e); with start points Z_0 = lambda0^{1/2}
// and W_0 = Z_0^{-1} l_0. SymReal only.
std::vector<std::pair<ConeElement, ConeElement>> block_oracle(const std::vector<ConeElement>& increments,
                                                              const ChainConfig& cfg = ChainConfig{});

// (a, X) with X ~ GIG(p; a^{-1}, e).
std::pair<ConeElement, ConeElement> kernel_K_sample(const ConeElement& a, double p, const McmcConfig& cfg,
                                                    RngStream& rng, bool prefer_exact = true);

using PairSamples = std::vector<std::pair<ConeElement, ConeElement>>;

struct IntertwiningSamples {
  PairSamples lhs;  // (P(w + X^{-1})a, P(w)X + w)
  PairSamples rhs;  // same first coordinate mechanism, second redrawn from GIG(p; Lambda^{-1}, e)
  std::vector<std::string> warnings;
};

IntertwiningSamples intertwining_experiment(const ConeElement& a, double p, std::size_t reps,
                                            const McmcConfig& cfg, RngStream& rng, int workers = 1);

// (Lambda_k, L_k) at step k of independent unscaled chains.
PairSamples chain_pairs(const Algebra& algebra, double p, int step, std::size_t reps, const McmcConfig& cfg,
                        RngStream& rng, int workers = 1);

struct DufresneResult {
  std::vector<ConeElement> samples;   // I_steps per replica
  std::vector<double> last_increment;  // norm of the last series term
  std::size_t diverged = 0;            // replicas stopped by the trace guard
  std::vector<std::string> warnings;
};

constexpr double kDivergenceTrace = 1e12;

DufresneResult dufresne_estimate(const Algebra& algebra, double p, int steps, std::size_t reps,
                                 const McmcConfig& cfg, RngStream& rng, int workers = 1);

struct StationaritySamples {
  std::vector<ConeElement> pushed;  // one chain step applied to stationary draws
  std::vector<ConeElement> fresh;   // independent stationary draws
};

// x -> P(w^{-1})x + w^{-1}, w ~ GIG(p; e, e), from Inv(gamma_{p,e}); p > dim/r - 1.
StationaritySamples stationarity_one_step(const Algebra& algebra, double p, std::size_t reps, const McmcConfig& cfg,
                                          RngStream& rng, int workers = 1);
// x -> P(w)x + w/n, w ~ GIG(p; n e, n e), from Inv(gamma_{-p,e}); p < 1 - dim/r.
StationaritySamples stationarity_small_step(const Algebra& algebra, double p, int n_scale, std::size_t reps,
                                            const McmcConfig& cfg, RngStream& rng, int workers = 1);

// Replicas per RNG block in the experiments above.
constexpr std::size_t kReplicaBlock = 250;

}  // namespace conekit
