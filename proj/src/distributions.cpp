#include "conekit/distributions.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "conekit/errors.hpp"
#include "conekit/jordan.hpp"
#include "conekit/rng.hpp"

namespace conekit {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(10);
  os << v;
  return os.str();
}

void require_wishart_threshold(double p, const Algebra& alg, const char* what) {
  const double threshold = alg.dim_over_rank() - 1.0;
  if (!(p > threshold)) {
    throw DomainError(std::string(what) + ": requires p>\\dim E/r-1 (p=" + fmt(p) +
                      ", dim E/r-1=" + fmt(threshold) + ")");
  }
}

// Positive eigenvalues above the membership threshold; fills the log det.
bool cone_log_det(const ConeElement& x, double& ld) {
  if (!x.coords().allFinite()) return false;
  Eigen::VectorXd v = eigenvalues(x);
  const double lo = v[v.size() - 1];
  if (!(lo > 1e-12 * std::max(1.0, std::abs(v[0])))) return false;
  ld = v.array().log().sum();
  return true;
}

}  // namespace

GigParams make_gig_params(double p, const ConeElement& a, const ConeElement& b) {
  require_same_algebra(a.algebra(), b.algebra(), "gig params");
  if (!std::isfinite(p)) throw DomainError("gig params: p must be finite");
  if (!in_cone(a)) throw DomainError("gig params: a is not in the cone");
  if (!in_cone(b)) throw DomainError("gig params: b is not in the cone");
  return GigParams{p, a, b};
}

WishartParams make_wishart_params(double p, const ConeElement& a) {
  require_wishart_threshold(p, a.algebra(), "wishart params");
  if (!in_cone(a)) throw DomainError("wishart params: a is not in the cone");
  return WishartParams{p, a};
}

void validate(const McmcConfig& cfg) {
  if (!(cfg.step_size > 0.0)) throw ConfigError("mcmc.step_size must be positive");
  if (cfg.burn_in < 0) throw ConfigError("mcmc.burn_in must be nonnegative");
  if (cfg.thin < 1) throw ConfigError("mcmc.thin must be at least 1");
  if (!(cfg.adapt_target > 0.0 && cfg.adapt_target < 1.0)) throw ConfigError("mcmc.adapt_target must lie in (0,1)");
}

double gig_logdensity_lebesgue(const GigParams& params, const ConeElement& x) {
  require_same_algebra(params.a.algebra(), x.algebra(), "gig_logdensity_lebesgue");
  double ld = 0.0;
  if (!cone_log_det(x, ld)) return kNegInf;
  const double q = params.p - x.algebra().dim_over_rank();
  return q * ld - 0.5 * (inner(params.a, x) + inner(params.b, inverse(x)));
}

ConeElement gig_mode(const GigParams& params) {
  // With y = P(a^{1/2})x the stationarity equation reads y^2 - 2q y - b' = 0,
  // b' = P(a^{1/2})b, whose cone solution is y = q e + (q^2 e + b')^{1/2}.
  const Algebra& alg = params.a.algebra();
  const ConeElement e = alg.identity();
  const double q = params.p - alg.dim_over_rank();
  ConeElement ah = sqrt(params.a);
  ConeElement bp = quad_apply(ah, params.b);
  ConeElement y = e * q + sqrt(e * (q * q) + bp);
  return quad_apply(inverse(ah), y);
}

RandomWalkChain::RandomWalkChain(LogDensity log_density, ConeElement start, Eigen::MatrixXd factor,
                                 McmcConfig cfg)
    : log_density_(std::move(log_density)),
      x_(std::move(start)),
      log_f_(log_density_(x_)),
      factor_(std::move(factor)),
      cfg_(cfg),
      step_(cfg.step_size) {
  validate(cfg_);
  if (!(log_f_ > kNegInf)) throw DomainError("random walk: start point has zero density");
}

bool RandomWalkChain::step(RngStream& rng) {
  const int n = static_cast<int>(factor_.cols());
  Eigen::VectorXd xi(n);
  for (int i = 0; i < n; ++i) xi[i] = rng.normal();
  ConeElement prop(x_.algebra(), x_.coords() + step_ * (factor_ * xi));
  const double lf = log_density_(prop);
  const double lu = std::log(rng.uniform());
  if (lf > kNegInf && lu < lf - log_f_) {
    x_ = std::move(prop);
    log_f_ = lf;
    return true;
  }
  return false;
}

ConeElement RandomWalkChain::next(RngStream& rng) {
  if (!warmed_) {
    double log_step = std::log(step_);
    for (int k = 0; k < cfg_.burn_in; ++k) {
      const bool acc = step(rng);
      burn_accepted_ += acc;
      if (cfg_.adapt) {
        log_step += ((acc ? 1.0 : 0.0) - cfg_.adapt_target) / std::pow(k + 1.0, 0.6);
        step_ = std::exp(log_step);
      }
    }
    warmed_ = true;
  }
  for (int k = 0; k < cfg_.thin; ++k) {
    accepted_ += step(rng);
    ++proposed_;
  }
  return x_;
}

double RandomWalkChain::acceptance_rate() const {
  if (proposed_ > 0) return static_cast<double>(accepted_) / proposed_;
  if (cfg_.burn_in > 0 && warmed_) return static_cast<double>(burn_accepted_) / cfg_.burn_in;
  return 0.0;
}

std::vector<std::string> RandomWalkChain::diagnostics() const {
  std::vector<std::string> out;
  const double rate = acceptance_rate();
  if (rate < 0.05 || rate > 0.95) {
    out.push_back("acceptance rate " + fmt(rate) + " outside [0.05, 0.95]");
  }
  return out;
}

std::unique_ptr<RandomWalkChain> make_gig_chain(const GigParams& params, const McmcConfig& cfg) {
  return make_gig_chain(params, cfg, gig_mode(params));
}

std::unique_ptr<RandomWalkChain> make_gig_chain(const GigParams& params, const McmcConfig& cfg,
                                                const ConeElement& start) {
  const Algebra& alg = params.a.algebra();
  const double q = params.p - alg.dim_over_rank();
  ConeElement mode = gig_mode(params);
  GigParams captured = params;
  auto logf = [captured](const ConeElement& x) { return gig_logdensity_lebesgue(captured, x); };
  // Standardized chart x = P(mode^{1/2})(e + S u), S the orthonormal scales.
  // The curvature there is about sqrt(q^2 + beta) per direction; the proposal
  // covariance is the inverse Hessian of the log density in u, measured by
  // central differences at u = 0.
  Eigen::VectorXd beta = eigenvalues(quad_apply(sqrt(params.a), params.b));
  const double kappa = (beta.array() + q * q).sqrt().mean();
  const Eigen::MatrixXd chart = quad_rep(sqrt(mode)).matrix() * orthonormal_scales(alg).asDiagonal();
  const Eigen::VectorXd e = alg.identity().coords();
  const int n = alg.dim();
  const double du = 1e-3 / std::sqrt(std::max(kappa, 1e-6));
  auto f = [&](const Eigen::VectorXd& u) { return logf(ConeElement(alg, chart * (e + u))); };
  const double f0 = f(Eigen::VectorXd::Zero(n));
  Eigen::MatrixXd hess(n, n);
  for (int i = 0; i < n; ++i) {
    const Eigen::VectorXd ui = du * Eigen::VectorXd::Unit(n, i);
    hess(i, i) = (f(ui) - 2.0 * f0 + f(-ui)) / (du * du);
    for (int j = 0; j < i; ++j) {
      const Eigen::VectorXd uj = du * Eigen::VectorXd::Unit(n, j);
      hess(i, j) = hess(j, i) = (f(ui + uj) - f(ui - uj) - f(uj - ui) + f(-ui - uj)) / (4.0 * du * du);
    }
  }
  Eigen::LLT<Eigen::MatrixXd> llt((-hess).inverse());
  Eigen::MatrixXd shape;
  if ((-hess).llt().info() == Eigen::Success && llt.info() == Eigen::Success) {
    shape = llt.matrixL();
  } else {
    shape = Eigen::MatrixXd::Identity(n, n) / std::sqrt(kappa);
  }
  Eigen::MatrixXd factor = (2.38 / std::sqrt(static_cast<double>(n))) * chart * shape;
  return std::make_unique<RandomWalkChain>(logf, start, std::move(factor), cfg);
}

SampleBatch gig_sample(const GigParams& params, std::size_t count, const McmcConfig& cfg, RngStream& rng) {
  if (count < 1) throw UsageError("gig_sample: count must be at least 1");
  auto chain = make_gig_chain(params, cfg);
  SampleBatch batch;
  batch.samples.reserve(count);
  for (std::size_t i = 0; i < count; ++i) batch.samples.push_back(chain->next(rng));
  batch.acceptance_rate = chain->acceptance_rate();
  batch.step_size = chain->step_size();
  batch.warnings = chain->diagnostics();
  return batch;
}

ConeElement gig_single_draw(const GigParams& params, const McmcConfig& cfg, RngStream& rng, bool prefer_exact) {
  if (prefer_exact && params.a.algebra().rank() == 1) {
    const double x = gig_sample_scalar_exact(params.p, params.a[0], params.b[0], rng);
    return ConeElement(params.a.algebra(), Eigen::VectorXd::Constant(1, x));
  }
  return make_gig_chain(params, cfg)->next(rng);
}

double tune_gig_step(const GigParams& params, const McmcConfig& cfg, RngStream& rng) {
  McmcConfig pilot = cfg;
  pilot.adapt = true;
  pilot.thin = 1;
  auto chain = make_gig_chain(params, pilot);
  chain->next(rng);
  return chain->step_size();
}

namespace {

// Standardized density y^{lambda-1} exp(-omega (y + 1/y)/2), lambda >= 0.
// Three regimes: ratio of uniforms with mode shift, ratio of uniforms
// without shift, and a three-piece rejection hat for small omega.
class StandardGig {
 public:
  StandardGig(double lambda, double omega) : lambda_(lambda), omega_(omega) {}

  double log_g(double y) const { return (lambda_ - 1.0) * std::log(y) - 0.5 * omega_ * (y + 1.0 / y); }

  double mode() const {
    const double lm1 = lambda_ - 1.0;
    if (lm1 >= 0.0) return (lm1 + std::sqrt(lm1 * lm1 + omega_ * omega_)) / omega_;
    return omega_ / (-lm1 + std::sqrt(lm1 * lm1 + omega_ * omega_));
  }

  double draw(RngStream& rng) const {
    if (lambda_ > 1.0 || omega_ > 1.0) return shifted_rou(rng);
    if (omega_ >= std::min(0.5, 2.0 / 3.0 * std::sqrt(1.0 - lambda_))) return plain_rou(rng);
    return three_piece(rng);
  }

 private:
  double shifted_rou(RngStream& rng) const {
    const double m = mode();
    const double lgm = log_g(m);
    // Extremes of (y - m) sqrt(g(y)) are roots of a cubic.
    const double a = -(2.0 * (lambda_ + 1.0) / omega_ + m);
    const double b = 2.0 * (lambda_ - 1.0) * m / omega_ - 1.0;
    const double c = m;
    const double p = b - a * a / 3.0;
    const double q = 2.0 * a * a * a / 27.0 - a * b / 3.0 + c;
    const double phi = std::acos(std::clamp(-0.5 * q * std::sqrt(-27.0 / (p * p * p)), -1.0, 1.0));
    const double amp = std::sqrt(-4.0 * p / 3.0);
    const double y_minus = amp * std::cos(phi / 3.0 + 4.0 * M_PI / 3.0) - a / 3.0;
    const double y_plus = amp * std::cos(phi / 3.0) - a / 3.0;
    const double u_minus = (y_minus - m) * std::exp(0.5 * (log_g(y_minus) - lgm));
    const double u_plus = (y_plus - m) * std::exp(0.5 * (log_g(y_plus) - lgm));
    for (;;) {
      const double u = u_minus + (u_plus - u_minus) * rng.uniform();
      const double v = rng.uniform();
      const double y = u / v + m;
      if (y > 0.0 && 2.0 * std::log(v) <= log_g(y) - lgm) return y;
    }
  }

  double plain_rou(RngStream& rng) const {
    const double m = mode();
    const double lgm = log_g(m);
    const double yp = ((lambda_ + 1.0) + std::sqrt((lambda_ + 1.0) * (lambda_ + 1.0) + omega_ * omega_)) / omega_;
    const double u_max = yp * std::exp(0.5 * (log_g(yp) - lgm));
    for (;;) {
      const double u = u_max * rng.uniform();
      const double v = rng.uniform();
      const double y = u / v;
      if (2.0 * std::log(v) <= log_g(y) - lgm) return y;
    }
  }

  double three_piece(RngStream& rng) const {
    const double lam = lambda_, om = omega_;
    const double m = mode();
    const double x0 = om / (1.0 - lam);
    const double xs = std::max(x0, 2.0 / om);
    const double k1 = std::exp(log_g(m));
    const double a1 = k1 * x0;
    double k2 = 0.0, a2 = 0.0;
    if (x0 < 2.0 / om) {
      k2 = std::exp(-om);
      a2 = lam == 0.0 ? k2 * std::log(2.0 / (om * om)) : k2 * (std::pow(2.0 / om, lam) - std::pow(x0, lam)) / lam;
    }
    const double k3 = std::pow(xs, lam - 1.0);
    const double a3 = 2.0 * k3 * std::exp(-0.5 * xs * om) / om;
    const double total = a1 + a2 + a3;
    for (;;) {
      const double u = rng.uniform();
      double v = total * rng.uniform();
      double y, hat;
      if (v <= a1) {
        y = x0 * v / a1;
        hat = k1;
      } else if (v <= a1 + a2) {
        v -= a1;
        y = lam == 0.0 ? om * std::exp(v * std::exp(om)) : std::pow(std::pow(x0, lam) + v * lam / k2, 1.0 / lam);
        hat = k2 * std::pow(y, lam - 1.0);
      } else {
        v -= a1 + a2;
        y = -2.0 / om * std::log(std::exp(-0.5 * xs * om) - v * om / (2.0 * k3));
        hat = k3 * std::exp(-0.5 * om * y);
      }
      if (y > 0.0 && std::log(u * hat) <= log_g(y)) return y;
    }
  }

  double lambda_;
  double omega_;
};

}  // namespace

double gig_sample_scalar_exact(double p, double a, double b, RngStream& rng) {
  if (!(a > 0.0) || !(b > 0.0)) throw UsageError("gig_sample_scalar_exact: a and b must be positive");
  // x = alpha y with y standardized; negative p through y -> 1/y.
  const double omega = std::sqrt(a * b);
  const double alpha = std::sqrt(b / a);
  StandardGig g(std::abs(p), omega);
  const double y = g.draw(rng);
  return alpha * (p < 0.0 ? 1.0 / y : y);
}

GigSource::GigSource(const GigParams& params, const McmcConfig& cfg, bool prefer_exact, int pool)
    : params_(params), cfg_(cfg), exact_(prefer_exact && params.a.algebra().rank() == 1) {
  if (pool < 1) throw UsageError("gig source: pool must be at least 1");
  if (!exact_) {
    // Each chain advances pool * thin steps between its own draws.
    McmcConfig spaced = cfg_;
    spaced.thin = cfg_.thin * pool;
    for (int i = 0; i < pool; ++i) chains_.push_back(make_gig_chain(params_, spaced));
  }
}

ConeElement GigSource::next(RngStream& rng) {
  if (exact_) {
    const double x = gig_sample_scalar_exact(params_.p, params_.a[0], params_.b[0], rng);
    return ConeElement(params_.a.algebra(), Eigen::VectorXd::Constant(1, x));
  }
  ConeElement x = chains_[turn_]->next(rng);
  turn_ = (turn_ + 1) % chains_.size();
  return x;
}

double GigSource::acceptance_rate() const {
  if (exact_) return 1.0;
  double sum = 0.0;
  for (const auto& c : chains_) sum += c->acceptance_rate();
  return sum / chains_.size();
}

std::vector<std::string> GigSource::diagnostics() const {
  std::vector<std::string> out;
  for (const auto& c : chains_) {
    for (auto& d : c->diagnostics()) out.push_back(std::move(d));
  }
  return out;
}

namespace {

// Spectral-coordinate draw of gamma_{p,e}.
ConeElement wishart_identity_draw(double p, const Algebra& alg, RngStream& rng) {
  switch (alg.kind()) {
    case AlgebraKind::Real:
      return ConeElement(alg, Eigen::VectorXd::Constant(1, rng.gamma(p, 2.0)));
    case AlgebraKind::SymReal: {
      // Bartlett: X = A A^T, A lower triangular, A_ii^2 ~ chi2(2p - i).
      const int r = alg.rank();
      Eigen::MatrixXd a = Eigen::MatrixXd::Zero(r, r);
      for (int i = 0; i < r; ++i) {
        a(i, i) = std::sqrt(rng.gamma(0.5 * (2.0 * p - i), 2.0));
        for (int j = 0; j < i; ++j) a(i, j) = rng.normal();
      }
      return from_symmetric(alg, a * a.transpose());
    }
    case AlgebraKind::Lorentz: {
      // Eigenvalues: s = l1 + l2 ~ Gamma(2p, 2), u = l1/s has density
      // proportional to (u(1-u))^{p-dim/r} |2u-1|^d, drawn by rejection from
      // a symmetric beta.
      const int n = alg.dim();
      const double shape = p - alg.dim_over_rank() + 1.0;
      const double s = rng.gamma(2.0 * p, 2.0);
      double u;
      for (;;) {
        u = rng.beta(shape, shape);
        if (rng.uniform() <= std::pow(std::abs(2.0 * u - 1.0), alg.degree())) break;
      }
      Eigen::VectorXd phi(n - 1);
      for (int i = 0; i < n - 1; ++i) phi[i] = rng.normal();
      phi /= phi.norm();
      const double l1 = s * u, l2 = s * (1.0 - u);
      Eigen::VectorXd c(n);
      c[0] = 0.5 * (l1 + l2);
      c.tail(n - 1) = 0.5 * (l1 - l2) * phi;
      return ConeElement(alg, std::move(c));
    }
  }
  throw UsageError("wishart: unsupported algebra");
}

}  // namespace

std::vector<ConeElement> wishart_sample(const WishartParams& params, std::size_t count, RngStream& rng) {
  const Algebra& alg = params.a.algebra();
  require_wishart_threshold(params.p, alg, "wishart_sample");
  ConeElement ah = sqrt(params.a);
  std::vector<ConeElement> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) out.push_back(quad_apply(ah, wishart_identity_draw(params.p, alg, rng)));
  return out;
}

std::vector<ConeElement> inv_wishart_sample(const WishartParams& params, std::size_t count, RngStream& rng) {
  std::vector<ConeElement> out = wishart_sample(params, count, rng);
  for (auto& x : out) x = inverse(x);
  return out;
}

double log_multivariate_gamma(double p, const Algebra& algebra) {
  require_wishart_threshold(p, algebra, "multivariate_gamma");
  double v = 0.5 * (algebra.dim() - algebra.rank()) * std::log(2.0 * M_PI);
  for (int j = 1; j <= algebra.rank(); ++j) v += std::lgamma(p - 0.5 * (j - 1) * algebra.degree());
  return v;
}

double wishart_logdensity_lebesgue(const WishartParams& params, const ConeElement& x) {
  const Algebra& alg = params.a.algebra();
  require_same_algebra(alg, x.algebra(), "wishart_logdensity_lebesgue");
  double ld = 0.0;
  if (!cone_log_det(x, ld)) return kNegInf;
  // The gamma-function normalization refers to orthonormal coordinates; the
  // last term converts to the ambient ones.
  return (params.p - alg.dim_over_rank()) * ld - 0.5 * inner(inverse(params.a), x) -
         alg.rank() * params.p * std::log(2.0) - params.p * log_det(params.a) -
         log_multivariate_gamma(params.p, alg) + 0.5 * alg.dim() * std::log(alg.metric());
}

}  // namespace conekit
