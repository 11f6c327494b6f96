#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "conekit/algebra.hpp"
#include "conekit/distributions.hpp"

namespace conekit {

class RngStream;

// Orthonormal basis f_i of E for the trace form; the operators L(f_i) span p.
std::vector<ConeElement> p_basis(const Algebra& algebra);

// exp_G(2 L(v)) = P(exp(v)).
LinOperator group_increment(const ConeElement& v);

// Left-invariant diffusion with Stratonovich increments
// 2 sum_i L(f_i) dB_i + 2p L(e) dt, advanced by the geometric Euler step
// g <- g P(exp(dB + p h e)). Tracks (g^*)^{-1}(e), its time integral iota and
// the integral of g(e). SymReal and Real keep an r x r factor A with
// g(x) = A x A^T; Lorentz keeps dense operators.
class HypoStepper {
 public:
  HypoStepper(const Algebra& algebra, double p, bool trapezoid = false);
  HypoStepper(HypoStepper&&) noexcept;
  HypoStepper& operator=(HypoStepper&&) noexcept;
  ~HypoStepper();

  const Algebra& algebra() const;
  double time() const;

  void step(RngStream& rng, double h);
  // dB holds coordinates in p_basis and has covariance h Id.
  void step_with(const Eigen::VectorXd& dB, double h);

  ConeElement adj_inv_e() const;         // (g^*)^{-1}(e)
  ConeElement iota() const;              // int_0^t (g_s^*)^{-1}(e) ds
  ConeElement forward_integral() const;  // int_0^t g_s(e) ds
  ConeElement apply(const ConeElement& x) const;          // g(x)
  ConeElement apply_adjoint(const ConeElement& x) const;  // g^*(x)
  LinOperator op() const;                                 // g as a dense operator
  // Product of the increment inverses P(exp(-v_1)) ... P(exp(-v_k)).
  LinOperator adj_inv_op() const;

  struct Impl;

 private:
  std::unique_ptr<Impl> impl_;
};

struct GroupPathConfig {
  double p = 1.0;
  double T = 1.0;
  double h = 1e-3;
  std::optional<ConeElement> ell0;     // default eps e
  std::optional<ConeElement> lambda0;  // default eps^2 e
  double eps = 1e-3;
  int record_stride = 0;  // 0 records only the start and the end
  bool trapezoid = false;
};

void validate(const GroupPathConfig& cfg, const Algebra& algebra);
int step_count(const GroupPathConfig& cfg);

struct DiffusionState {
  double t;
  LinOperator g_op;
  ConeElement g_adj_inv_e;
  ConeElement iota;
  ConeElement ell;     // g^*(l_0 + iota)
  ConeElement lambda;  // g^* P(l_0 + iota) P(l_0^{-1}) lambda_0
};

// Throws NumericalError with the time stamp if ell or lambda leaves the cone.
std::vector<DiffusionState> simulate_hypo_bm(const Algebra& algebra, const GroupPathConfig& cfg, RngStream& rng);

ConeElement tilde_ell(const HypoStepper& s, const ConeElement& ell0);
ConeElement tilde_lambda(const HypoStepper& s, const ConeElement& ell0, const ConeElement& lambda0);

struct PerpetuityResult {
  std::vector<ConeElement> samples;  // iota_T
  std::vector<double> tail;          // norm of (g_T^*)^{-1}(e)
  std::vector<std::string> warnings;
};

PerpetuityResult perpetuity_estimate(const Algebra& algebra, double p, double T, double h, std::size_t reps,
                                     RngStream& rng, int workers = 1);

struct ScalingSamples {
  std::vector<ConeElement> discrete;  // Lambda^n at step floor(n t)
  std::vector<ConeElement> sde;       // lambda~ at time t
  std::vector<std::string> warnings;
};

ScalingSamples scaling_limit_experiment(const ConeElement& ell0, const ConeElement& lambda0, double p, int n_scale,
                                        double t, double h, std::size_t reps, const McmcConfig& cfg,
                                        RngStream& rng, int workers = 1);

struct LorentzFactors {
  std::vector<double> b;    // -log det(y)/4 - p t
  std::vector<ConeElement> xi;  // y / sqrt(det y), on the unit hyperboloid
  std::vector<double> radius;   // arccosh(xi_0)
  double max_norm_error = 0.0;  // max |det(xi) - 1|
};

// y_k = (g^*)^{-1}(e) at times t_k. Lorentz only.
LorentzFactors lorentz_factorize(const std::vector<ConeElement>& y, const std::vector<double>& t, double p);

struct LorentzSummary {
  std::vector<double> b;       // terminal b per replica
  std::vector<double> radius;  // terminal R per replica
  double max_norm_error = 0.0;
};

LorentzSummary lorentz_factorization_experiment(const Algebra& algebra, double p, double t, double h,
                                                int record_stride, std::size_t reps, RngStream& rng,
                                                int workers = 1);

struct LyapunovResult {
  double exponent = 0.0;   // mean slope of log|(g_t^*)^{-1}(e)| over [T/2, T]
  double se = 0.0;
  double predicted = 0.0;  // -2(p - d(r-1)/2)
};

LyapunovResult lyapunov_probe(const Algebra& algebra, double p, double T, double h, std::size_t reps,
                              RngStream& rng, int workers = 1);

struct PairedSamples {
  std::vector<ConeElement> a;
  std::vector<ConeElement> b;
};

// a: ell~_t = g_t^*(l_0 + iota_t); b: int_0^t g_s(e) ds + g_t(l_0) from
// independent paths.
PairedSamples time_reversal_samples(const ConeElement& ell0, double p, double t, double h, std::size_t reps,
                                    RngStream& rng, int workers = 1);

// (lambda~_t, ell~_t) with l_0 ~ GIG(p; lambda0^{-1}, e) drawn per replica.
std::vector<std::pair<ConeElement, ConeElement>> continuous_pairs(const ConeElement& lambda0, double p, double t,
                                                                  double h, std::size_t reps,
                                                                  const McmcConfig& cfg, RngStream& rng,
                                                                  int workers = 1);

// pushed: ell~_t from l_0 ~ Inv(gamma_{-p,e}); fresh: independent draws of that
// law. Requires p < 1 - dim/r.
PairedSamples continuous_stationarity(const Algebra& algebra, double p, double t, double h, std::size_t reps,
                                      RngStream& rng, int workers = 1);

}  // namespace conekit
