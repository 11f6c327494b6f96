#include "conekit/verify.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include <boost/math/special_functions/gamma.hpp>

#include "conekit/chains.hpp"
#include "conekit/diffusion.hpp"
#include "conekit/errors.hpp"
#include "conekit/jordan.hpp"
#include "conekit/rng.hpp"

namespace conekit {

namespace {

struct NameEntry {
  Experiment e;
  const char* name;
};

constexpr NameEntry kNames[] = {
    {Experiment::DufresneDiscrete, "dufresne_discrete"},
    {Experiment::DufresneContinuous, "dufresne_continuous"},
    {Experiment::Intertwining, "intertwining"},
    {Experiment::ConditionalLaw, "conditional_law"},
    {Experiment::Inversion, "inversion"},
    {Experiment::ScalingLimit, "scaling_limit"},
    {Experiment::LorentzFactorization, "lorentz_factorization"},
    {Experiment::Stationarity, "stationarity"},
    {Experiment::GaussianLimit, "gaussian_limit"},
    {Experiment::Lyapunov, "lyapunov"},
};

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
  char buf[160];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double var_of(const std::vector<double>& v) {
  const double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return s / static_cast<double>(v.size() - 1);
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

class Builder {
 public:
  Builder(Experiment e, const VerifyParams& params) : params_(params) { out_.experiment = experiment_name(e); }

  void pvalue(const std::string& name, const TestReport& r, double alpha) {
    out_.reports.emplace_back(name, r);
    out_.checks.push_back({name, r.p_value > alpha, fmt("p=%.4g (threshold %.4g)", r.p_value, alpha)});
    warn(r.warnings);
  }
  void pvalue(const std::string& name, const TestReport& r) { pvalue(name, r, params_.alpha); }

  void check(const std::string& name, bool ok, const std::string& detail) { out_.checks.push_back({name, ok, detail}); }
  void estimate(const std::string& name, double v) { out_.estimates.emplace_back(name, v); }
  void warn(const std::vector<std::string>& w) { out_.warnings.insert(out_.warnings.end(), w.begin(), w.end()); }

  // Every coordinate of the sample mean within 3 SE of the target.
  void mean_within(const std::string& name, const std::vector<ConeElement>& xs, const ConeElement& target) {
    const MomentSummary m = moment_summary(to_matrix(xs));
    double worst = 0.0;
    for (Eigen::Index i = 0; i < m.mean.size(); ++i) {
      const double se = std::max(m.se[i], 1e-300);
      worst = std::max(worst, std::abs(m.mean[i] - target[static_cast<int>(i)]) / se);
    }
    estimate(name + ".mean_e", m.mean[0]);
    estimate(name + ".target_e", target[0]);
    estimate(name + ".se_e", m.se[0]);
    check(name, worst <= 3.0, fmt("max |mean - target| / SE = %.3g (limit 3)", worst));
  }

  VerifyOutcome done() { return std::move(out_); }

 private:
  const VerifyParams& params_;
  VerifyOutcome out_;
};

Eigen::MatrixXd joint_matrix(const PairSamples& pairs) {
  const int d = pairs.front().first.algebra().dim();
  Eigen::MatrixXd m(pairs.size(), 2 * d);
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    m.row(i).head(d) = pairs[i].first.coords().transpose();
    m.row(i).tail(d) = pairs[i].second.coords().transpose();
  }
  return m;
}

// Near-independent draws from the interleaved chain pool.
std::vector<ConeElement> gig_draws(const GigParams& gp, const VerifyParams& vp, RngStream& rng, Builder& b) {
  GigSource src(gp, vp.mcmc);
  std::vector<ConeElement> out;
  out.reserve(vp.replicas);
  for (std::size_t i = 0; i < vp.replicas; ++i) out.push_back(src.next(rng));
  b.warn(src.diagnostics());
  return out;
}

void require_replicas(const VerifyParams& params, std::size_t least) {
  if (params.replicas < least) {
    throw UsageError("verify needs at least " + std::to_string(least) + " replicas");
  }
}

VerifyOutcome dufresne_discrete(const Algebra& alg, double p, const VerifyParams& vp, RngStream& rng) {
  Builder b(Experiment::DufresneDiscrete, vp);
  const WishartParams wish = make_wishart_params(p, alg.identity());
  RngStream s0 = rng.derive(0), s1 = rng.derive(1), s2 = rng.derive(2);
  DufresneResult r = dufresne_estimate(alg, p, vp.steps, vp.replicas, vp.mcmc, s0, vp.workers);
  b.warn(r.warnings);
  b.estimate("diverged", static_cast<double>(r.diverged));
  b.estimate("max_last_increment", *std::max_element(r.last_increment.begin(), r.last_increment.end()));
  b.mean_within("mean", r.samples, alg.identity() * inverse_wishart_mean_scale(alg, p));
  const auto target = inv_wishart_sample(wish, vp.replicas, s1);
  b.pvalue("energy_vs_inverse_wishart", energy_test(to_matrix(r.samples), to_matrix(target), vp.permutations, s2));
  if (alg.kind() == AlgebraKind::Real) {
    std::vector<double> xs;
    for (const auto& x : r.samples) xs.push_back(x[0]);
    b.pvalue("ks_vs_inverse_gamma", ks_test(xs, [p](double x) { return boost::math::gamma_q(p, 0.5 / x); }));
  }
  return b.done();
}

VerifyOutcome dufresne_continuous(const Algebra& alg, double p, const VerifyParams& vp, RngStream& rng) {
  Builder b(Experiment::DufresneContinuous, vp);
  const WishartParams wish = make_wishart_params(p, alg.identity());
  RngStream s0 = rng.derive(0), s1 = rng.derive(1), s2 = rng.derive(2), s3 = rng.derive(3);
  PerpetuityResult r = perpetuity_estimate(alg, p, vp.T, vp.h, vp.replicas, s0, vp.workers);
  b.warn(r.warnings);
  b.estimate("max_tail", *std::max_element(r.tail.begin(), r.tail.end()));
  b.mean_within("mean", r.samples, alg.identity() * inverse_wishart_mean_scale(alg, p));
  const auto target = inv_wishart_sample(wish, vp.replicas, s1);
  b.pvalue("energy_vs_inverse_wishart", energy_test(to_matrix(r.samples), to_matrix(target), vp.permutations, s2));
  if (alg.kind() == AlgebraKind::Real) {
    std::vector<double> xs;
    for (const auto& x : r.samples) xs.push_back(x[0]);
    b.pvalue("ks_vs_inverse_gamma", ks_test(xs, [p](double x) { return boost::math::gamma_q(p, 0.5 / x); }));
  }
  DufresneResult d = dufresne_estimate(alg, p, vp.steps, vp.replicas, vp.mcmc, s3, vp.workers);
  b.warn(d.warnings);
  b.pvalue("energy_vs_discrete", energy_test(to_matrix(r.samples), to_matrix(d.samples), vp.permutations, s2));
  return b.done();
}

VerifyOutcome intertwining(const Algebra& alg, double p, const VerifyParams& vp, RngStream& rng) {
  Builder b(Experiment::Intertwining, vp);
  const ConeElement a = vp.a.value_or(alg.identity());
  require_same_algebra(alg, a.algebra(), "verify intertwining");
  RngStream s0 = rng.derive(0), s1 = rng.derive(1);
  IntertwiningSamples r = intertwining_experiment(a, p, vp.replicas, vp.mcmc, s0, vp.workers);
  b.warn(r.warnings);
  b.pvalue("joint_energy", energy_test(joint_matrix(r.lhs), joint_matrix(r.rhs), vp.permutations, s1));
  return b.done();
}

VerifyOutcome conditional_law(const Algebra& alg, double p, const VerifyParams& vp, RngStream& rng) {
  Builder b(Experiment::ConditionalLaw, vp);
  RngStream s0 = rng.derive(0), s1 = rng.derive(1);
  const PairSamples pairs = chain_pairs(alg, p, vp.chain_step, vp.replicas, vp.mcmc, s0, vp.workers);
  ConditionalCheckConfig cc;
  cc.workers = vp.workers;
  b.estimate("checked_p", p + vp.tamper_p);
  b.pvalue("conditional_gig", conditional_gig_check(pairs, p + vp.tamper_p, cc, s1));
  return b.done();
}

VerifyOutcome inversion(const Algebra& alg, double p, const VerifyParams& vp, RngStream& rng) {
  Builder b(Experiment::Inversion, vp);
  const ConeElement a = vp.a.value_or(alg.identity());
  const ConeElement bb = vp.b.value_or(alg.identity());
  RngStream s0 = rng.derive(0), s1 = rng.derive(1), s2 = rng.derive(2);
  const auto x = gig_draws(make_gig_params(p, a, bb), vp, s0, b);
  const auto y = gig_draws(make_gig_params(-p, bb, a), vp, s1, b);
  std::vector<ConeElement> inv;
  for (const auto& v : x) inv.push_back(inverse(v));
  b.pvalue("energy_inverse_vs_swapped", energy_test(to_matrix(inv), to_matrix(y), vp.permutations, s2));
  return b.done();
}

VerifyOutcome scaling_limit(const Algebra& alg, double p, const VerifyParams& vp, RngStream& rng) {
  Builder b(Experiment::ScalingLimit, vp);
  if (vp.n_scale < 16) throw UsageError("verify scaling_limit needs n_scale >= 16");
  const ConeElement e = alg.identity();
  const int ns[3] = {vp.n_scale / 16, vp.n_scale / 4, vp.n_scale};
  double dist[3];
  for (int k = 0; k < 3; ++k) {
    RngStream s = rng.derive(static_cast<std::uint64_t>(k));
    ScalingSamples r = scaling_limit_experiment(e, e, p, ns[k], vp.t, vp.h, vp.replicas, vp.mcmc, s, vp.workers);
    b.warn(r.warnings);
    const Eigen::MatrixXd x = to_matrix(r.discrete), y = to_matrix(r.sde);
    dist[k] = energy_distance_unbiased(x, y);
    b.estimate("energy_distance_n" + std::to_string(ns[k]), dist[k]);
    if (k == 2) {
      RngStream sp = rng.derive(10);
      b.pvalue("energy_at_n" + std::to_string(ns[k]), energy_test(x, y, vp.permutations, sp), 0.005);
    }
  }
  b.check("monotone_energy_distance", dist[0] > dist[1] && dist[1] > dist[2],
          fmt("%.4g > %.4g > %.4g", dist[0], dist[1], dist[2]));
  return b.done();
}

VerifyOutcome lorentz_factorization(const Algebra& alg, double p, const VerifyParams& vp, RngStream& rng) {
  if (alg.kind() != AlgebraKind::Lorentz) throw UsageError("verify lorentz_factorization needs a Lorentz algebra");
  require_replicas(vp, 3);
  Builder b(Experiment::LorentzFactorization, vp);
  const double t = vp.t;
  const int stride = std::max(1, static_cast<int>(std::llround(t / vp.h)) / 100);
  LorentzSummary s = lorentz_factorization_experiment(alg, p, t, vp.h, stride, vp.replicas, rng, vp.workers);
  const double n = static_cast<double>(vp.replicas);
  const double m = mean_of(s.b), v = var_of(s.b);
  const double mr = mean_of(s.radius), vr = var_of(s.radius);
  double cov = 0.0;
  for (std::size_t i = 0; i < s.b.size(); ++i) cov += (s.b[i] - m) * (s.radius[i] - mr);
  cov /= n - 1.0;
  const double corr = cov / std::sqrt(v * vr);
  b.estimate("max_hyperboloid_error", s.max_norm_error);
  b.estimate("b_mean", m);
  b.estimate("b_variance", v);
  b.estimate("t", t);
  b.estimate("corr_b_radius", corr);
  b.estimate("radius_mean", mr);
  b.check("hyperboloid", s.max_norm_error <= 1e-9, fmt("max |(xi,xi) - 1| = %.3g (limit 1e-9)", s.max_norm_error));
  const double se = std::sqrt(v / n);
  b.check("b_mean_zero", std::abs(m) <= 3.0 * se, fmt("mean %.4g, SE %.3g", m, se));
  b.check("b_variance_t", std::abs(v - t) <= 0.1 * t, fmt("variance %.4g vs t = %.4g (10%%)", v, t));
  const double se_corr = 1.0 / std::sqrt(n);
  b.check("b_radius_uncorrelated", std::abs(corr) <= 3.0 * se_corr, fmt("corr %.4g, SE %.3g", corr, se_corr));
  return b.done();
}

VerifyOutcome stationarity(const Algebra& alg, double p, const VerifyParams& vp, RngStream& rng) {
  Builder b(Experiment::Stationarity, vp);
  if (!(p > alg.dim_over_rank() - 1.0)) throw DomainError("verify stationarity requires p > dim E/r - 1");
  RngStream s0 = rng.derive(0), s1 = rng.derive(1), s2 = rng.derive(2);
  StationaritySamples d = stationarity_one_step(alg, p, vp.replicas, vp.mcmc, s0, vp.workers);
  b.pvalue("discrete_one_step", energy_test(to_matrix(d.pushed), to_matrix(d.fresh), vp.permutations, s2));
  PairedSamples c = continuous_stationarity(alg, -p, vp.t, vp.h, vp.replicas, s1, vp.workers);
  b.estimate("continuous_p", -p);
  b.pvalue("continuous_marginal", energy_test(to_matrix(c.a), to_matrix(c.b), vp.permutations, s2));
  return b.done();
}

VerifyOutcome gaussian_limit(const Algebra& alg, double p, const VerifyParams& vp, RngStream& rng) {
  Builder b(Experiment::GaussianLimit, vp);
  const double n = vp.concentration;
  const ConeElement ne = alg.identity() * n;
  const auto draws = gig_draws(make_gig_params(p, ne, ne), vp, rng, b);
  const Eigen::VectorXd scales = orthonormal_scales(alg);
  const int d = alg.dim();
  std::vector<std::vector<double>> z(d);
  std::vector<ConeElement> nlog;
  for (const auto& x : draws) {
    const ConeElement l = log(x);
    for (int i = 0; i < d; ++i) z[i].push_back(std::sqrt(n) * l[i] / scales[i]);
    nlog.push_back(l * n);
  }
  for (int i = 0; i < d; ++i) {
    b.pvalue("ks_coordinate_" + std::to_string(i), ks_test(z[i], normal_cdf));
  }
  b.mean_within("n_mean_log", nlog, alg.identity() * p);
  return b.done();
}

VerifyOutcome lyapunov(const Algebra& alg, double p, const VerifyParams& vp, RngStream& rng) {
  require_replicas(vp, 2);
  Builder b(Experiment::Lyapunov, vp);
  LyapunovResult r = lyapunov_probe(alg, p, vp.T, vp.h, vp.replicas, rng, vp.workers);
  b.estimate("exponent", r.exponent);
  b.estimate("se", r.se);
  b.estimate("predicted", r.predicted);
  if (std::abs(r.predicted) > 1e-12) {
    const double rel = std::abs(r.exponent / r.predicted - 1.0);
    b.check("exponent", rel <= 0.15, fmt("%.4g vs %.4g (relative error %.3g, limit 0.15)", r.exponent, r.predicted, rel));
  } else {
    b.check("exponent_critical", std::abs(r.exponent) <= 0.3, fmt("%.4g (limit |x| <= 0.3)", r.exponent));
  }
  return b.done();
}

}  // namespace

std::string experiment_name(Experiment e) {
  for (const auto& n : kNames) {
    if (n.e == e) return n.name;
  }
  return "?";
}

Experiment experiment_from_name(const std::string& name) {
  for (const auto& n : kNames) {
    if (name == n.name) return n.e;
  }
  throw UsageError("unknown experiment '" + name + "'");
}

const std::vector<Experiment>& all_experiments() {
  static const std::vector<Experiment> all = [] {
    std::vector<Experiment> v;
    for (const auto& n : kNames) v.push_back(n.e);
    return v;
  }();
  return all;
}

bool VerifyOutcome::passed() const {
  if (checks.empty()) return false;
  return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.passed; });
}

double inverse_wishart_mean_scale(const Algebra& algebra, double p) {
  const double gap = p - algebra.dim_over_rank();
  if (!(gap > 0.0)) throw DomainError("inverse Wishart mean requires p > dim E/r");
  return 1.0 / (2.0 * gap);
}

VerifyOutcome run_experiment(Experiment e, const Algebra& algebra, double p, const VerifyParams& params,
                             RngStream& rng) {
  require_replicas(params, 2);
  switch (e) {
    case Experiment::DufresneDiscrete: return dufresne_discrete(algebra, p, params, rng);
    case Experiment::DufresneContinuous: return dufresne_continuous(algebra, p, params, rng);
    case Experiment::Intertwining: return intertwining(algebra, p, params, rng);
    case Experiment::ConditionalLaw: return conditional_law(algebra, p, params, rng);
    case Experiment::Inversion: return inversion(algebra, p, params, rng);
    case Experiment::ScalingLimit: return scaling_limit(algebra, p, params, rng);
    case Experiment::LorentzFactorization: return lorentz_factorization(algebra, p, params, rng);
    case Experiment::Stationarity: return stationarity(algebra, p, params, rng);
    case Experiment::GaussianLimit: return gaussian_limit(algebra, p, params, rng);
    case Experiment::Lyapunov: return lyapunov(algebra, p, params, rng);
  }
  throw UsageError("unknown experiment");
}

}  // namespace conekit
