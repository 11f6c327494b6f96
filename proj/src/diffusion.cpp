#include "conekit/diffusion.hpp"

#include <cmath>
#include <mutex>

#include "conekit/chains.hpp"
#include "conekit/errors.hpp"
#include "conekit/jordan.hpp"
#include "conekit/parallel.hpp"
#include "conekit/rng.hpp"

namespace conekit {

std::vector<ConeElement> p_basis(const Algebra& algebra) { return orthonormal_basis(algebra); }

LinOperator group_increment(const ConeElement& v) { return quad_rep(exp(v)); }

struct HypoStepper::Impl {
  Impl(const Algebra& a, double p_, bool trap_)
      : alg(a), p(p_), trap(trap_), e(a.identity().coords()), scales(orthonormal_scales(a)),
        y(e), iota(Eigen::VectorXd::Zero(a.dim())), fwd(Eigen::VectorXd::Zero(a.dim())) {}
  virtual ~Impl() = default;

  // Multiplies g on the right by P(exp(v)).
  virtual void advance(const Eigen::VectorXd& v) = 0;
  virtual Eigen::VectorXd adj_inv_e() const = 0;
  virtual Eigen::VectorXd forward_e() const = 0;
  virtual Eigen::VectorXd apply(const Eigen::VectorXd& x) const = 0;
  virtual Eigen::VectorXd apply_adjoint(const Eigen::VectorXd& x) const = 0;
  virtual Eigen::MatrixXd adj_inv_matrix() const = 0;

  void step(const Eigen::VectorXd& dB, double h) {
    const Eigen::VectorXd v = scales.cwiseProduct(dB) + (p * h) * e;
    const Eigen::VectorXd y_old = y;
    advance(v);
    y = adj_inv_e();
    const Eigen::VectorXd f_new = forward_e();
    // iota uses the left endpoint and the forward integral the right one, so
    // g_t^*(iota_t) and the forward sum match term by term under reversal.
    if (trap) {
      iota += (0.5 * h) * (y_old + y);
      fwd += (0.5 * h) * (f_last + f_new);
    } else {
      iota += h * y_old;
      fwd += h * f_new;
    }
    f_last = f_new;
    t += h;
  }

  Algebra alg;
  double p;
  bool trap;
  Eigen::VectorXd e, scales, y, iota, fwd;
  Eigen::VectorXd f_last = e;
  double t = 0.0;
};

namespace {

// g(x) = A x A^T on r x r symmetric matrices; Real is the case r = 1.
template <int R>
struct FactorImpl final : HypoStepper::Impl {
  using Mat = Eigen::Matrix<double, R, R>;

  FactorImpl(const Algebra& a, double p_, bool trap_) : Impl(a, p_, trap_), r(a.rank()) {
    A = Mat::Identity(r, r);
    Ainv = Mat::Identity(r, r);
  }

  Mat to_mat(const Eigen::VectorXd& c) const {
    Mat m(r, r);
    for (int i = 0; i < r; ++i) m(i, i) = c[i];
    int k = r;
    for (int i = 0; i < r; ++i) {
      for (int j = i + 1; j < r; ++j, ++k) m(i, j) = m(j, i) = c[k] / std::sqrt(2.0);
    }
    return m;
  }

  Eigen::VectorXd to_coords(const Mat& m) const {
    Eigen::VectorXd c(alg.dim());
    for (int i = 0; i < r; ++i) c[i] = m(i, i);
    int k = r;
    for (int i = 0; i < r; ++i) {
      for (int j = i + 1; j < r; ++j, ++k) c[k] = std::sqrt(2.0) * 0.5 * (m(i, j) + m(j, i));
    }
    return c;
  }

  void advance(const Eigen::VectorXd& v) override {
    const Mat V = to_mat(v);
    Eigen::SelfAdjointEigenSolver<Mat> es;
    if constexpr (R == 2) {
      es.computeDirect(V);
    } else {
      es.compute(V);
    }
    const auto& Q = es.eigenvectors();
    const auto lam = es.eigenvalues().array();
    const Mat E = Q * lam.exp().matrix().asDiagonal() * Q.transpose();
    const Mat Einv = Q * (-lam).exp().matrix().asDiagonal() * Q.transpose();
    A = (A * E).eval();
    Ainv = (Einv * Ainv).eval();
  }

  Eigen::VectorXd adj_inv_e() const override { return to_coords(Ainv.transpose() * Ainv); }
  Eigen::VectorXd forward_e() const override { return to_coords(A * A.transpose()); }
  Eigen::VectorXd apply(const Eigen::VectorXd& x) const override {
    return to_coords(A * to_mat(x) * A.transpose());
  }
  Eigen::VectorXd apply_adjoint(const Eigen::VectorXd& x) const override {
    return to_coords(A.transpose() * to_mat(x) * A);
  }
  Eigen::MatrixXd adj_inv_matrix() const override {
    const int n = alg.dim();
    Eigen::MatrixXd m(n, n);
    for (int i = 0; i < n; ++i) {
      m.col(i) = to_coords(Ainv.transpose() * to_mat(Eigen::VectorXd::Unit(n, i)) * Ainv);
    }
    return m;
  }

  int r;
  Mat A, Ainv;
};

struct DenseImpl final : HypoStepper::Impl {
  DenseImpl(const Algebra& a, double p_, bool trap_)
      : Impl(a, p_, trap_), G(Eigen::MatrixXd::Identity(a.dim(), a.dim())), Ginv(G) {}

  void advance(const Eigen::VectorXd& v) override {
    const ConeElement x(alg, v);
    G = (G * quad_rep(exp(x)).matrix()).eval();
    Ginv = (Ginv * quad_rep(exp(-x)).matrix()).eval();
  }

  Eigen::VectorXd adj_inv_e() const override { return Ginv * e; }
  Eigen::VectorXd forward_e() const override { return G * e; }
  Eigen::VectorXd apply(const Eigen::VectorXd& x) const override { return G * x; }
  Eigen::VectorXd apply_adjoint(const Eigen::VectorXd& x) const override { return G.transpose() * x; }
  Eigen::MatrixXd adj_inv_matrix() const override { return Ginv; }

  Eigen::MatrixXd G, Ginv;
};

std::unique_ptr<HypoStepper::Impl> make_impl(const Algebra& a, double p, bool trap) {
  switch (a.kind()) {
    case AlgebraKind::Real:
      return std::make_unique<FactorImpl<1>>(a, p, trap);
    case AlgebraKind::SymReal:
      if (a.rank() == 2) return std::make_unique<FactorImpl<2>>(a, p, trap);
      return std::make_unique<FactorImpl<Eigen::Dynamic>>(a, p, trap);
    case AlgebraKind::Lorentz:
      return std::make_unique<DenseImpl>(a, p, trap);
  }
  throw UsageError("HypoStepper: unknown algebra");
}

int steps_for(double T, double h) {
  if (!(h > 0.0) || !(T >= h)) throw ConfigError("diffusion needs h > 0 and T >= h");
  return static_cast<int>(std::llround(T / h));
}

}  // namespace

HypoStepper::HypoStepper(const Algebra& algebra, double p, bool trapezoid) : impl_(make_impl(algebra, p, trapezoid)) {}
HypoStepper::HypoStepper(HypoStepper&&) noexcept = default;
HypoStepper& HypoStepper::operator=(HypoStepper&&) noexcept = default;
HypoStepper::~HypoStepper() = default;

const Algebra& HypoStepper::algebra() const { return impl_->alg; }
double HypoStepper::time() const { return impl_->t; }

void HypoStepper::step(RngStream& rng, double h) {
  const double s = std::sqrt(h);
  Eigen::VectorXd dB(impl_->alg.dim());
  for (int i = 0; i < dB.size(); ++i) dB[i] = s * rng.normal();
  impl_->step(dB, h);
}

void HypoStepper::step_with(const Eigen::VectorXd& dB, double h) {
  if (dB.size() != impl_->alg.dim()) throw UsageError("HypoStepper: noise has the wrong dimension");
  impl_->step(dB, h);
}

ConeElement HypoStepper::adj_inv_e() const { return ConeElement(impl_->alg, impl_->y); }
ConeElement HypoStepper::iota() const { return ConeElement(impl_->alg, impl_->iota); }
ConeElement HypoStepper::forward_integral() const { return ConeElement(impl_->alg, impl_->fwd); }

ConeElement HypoStepper::apply(const ConeElement& x) const {
  require_same_algebra(impl_->alg, x.algebra(), "HypoStepper::apply");
  return ConeElement(impl_->alg, impl_->apply(x.coords()));
}

ConeElement HypoStepper::apply_adjoint(const ConeElement& x) const {
  require_same_algebra(impl_->alg, x.algebra(), "HypoStepper::apply_adjoint");
  return ConeElement(impl_->alg, impl_->apply_adjoint(x.coords()));
}

LinOperator HypoStepper::op() const {
  const int n = impl_->alg.dim();
  Eigen::MatrixXd m(n, n);
  for (int i = 0; i < n; ++i) m.col(i) = impl_->apply(Eigen::VectorXd::Unit(n, i));
  return LinOperator(impl_->alg, m);
}

LinOperator HypoStepper::adj_inv_op() const { return LinOperator(impl_->alg, impl_->adj_inv_matrix()); }

ConeElement tilde_ell(const HypoStepper& s, const ConeElement& ell0) { return s.apply_adjoint(ell0 + s.iota()); }

ConeElement tilde_lambda(const HypoStepper& s, const ConeElement& ell0, const ConeElement& lambda0) {
  return s.apply_adjoint(quad_apply(ell0 + s.iota(), quad_apply(inverse(ell0), lambda0)));
}

void validate(const GroupPathConfig& cfg, const Algebra& algebra) {
  steps_for(cfg.T, cfg.h);
  if (cfg.record_stride < 0) throw ConfigError("diffusion.record_stride must be non-negative");
  if (!(cfg.eps > 0.0)) throw ConfigError("diffusion.eps must be positive");
  for (const auto* x : {&cfg.ell0, &cfg.lambda0}) {
    if (!x->has_value()) continue;
    if (!((*x)->algebra() == algebra)) throw ConfigError("diffusion start points belong to another algebra");
    if (!in_cone(**x)) throw ConfigError("diffusion start points must lie in the cone");
  }
}

int step_count(const GroupPathConfig& cfg) { return steps_for(cfg.T, cfg.h); }

std::vector<DiffusionState> simulate_hypo_bm(const Algebra& algebra, const GroupPathConfig& cfg, RngStream& rng) {
  validate(cfg, algebra);
  const int steps = step_count(cfg);
  const ConeElement ell0 = cfg.ell0.value_or(algebra.identity() * cfg.eps);
  const ConeElement lambda0 = cfg.lambda0.value_or(algebra.identity() * (cfg.eps * cfg.eps));
  HypoStepper s(algebra, cfg.p, cfg.trapezoid);
  std::vector<DiffusionState> out;
  auto record = [&] {
    DiffusionState st{s.time(), s.op(), s.adj_inv_e(), s.iota(), tilde_ell(s, ell0), tilde_lambda(s, ell0, lambda0)};
    if (!in_cone(st.ell) || !in_cone(st.lambda)) {
      throw NumericalError("diffusion left the cone at t=" + std::to_string(st.t));
    }
    out.push_back(std::move(st));
  };
  record();
  for (int k = 1; k <= steps; ++k) {
    s.step(rng, cfg.h);
    if (k == steps || (cfg.record_stride > 0 && k % cfg.record_stride == 0)) record();
  }
  return out;
}

PerpetuityResult perpetuity_estimate(const Algebra& algebra, double p, double T, double h, std::size_t reps,
                                     RngStream& rng, int workers) {
  const int steps = steps_for(T, h);
  PerpetuityResult r;
  r.samples.assign(reps, ConeElement::zero(algebra));
  r.tail.assign(reps, 0.0);
  for_each_block(reps, kReplicaBlock, workers, rng, [&](std::size_t first, std::size_t size, RngStream& st) {
    for (std::size_t i = 0; i < size; ++i) {
      HypoStepper s(algebra, p);
      for (int k = 0; k < steps; ++k) s.step(st, h);
      r.samples[first + i] = s.iota();
      r.tail[first + i] = norm(s.adj_inv_e());
    }
  });
  if (p <= algebra.dim_over_rank() - 1.0) {
    r.warnings.push_back("p <= dim/r - 1: the perpetuity diverges and iota_T grows with T");
  }
  return r;
}

ScalingSamples scaling_limit_experiment(const ConeElement& ell0, const ConeElement& lambda0, double p, int n_scale,
                                        double t, double h, std::size_t reps, const McmcConfig& cfg, RngStream& rng,
                                        int workers) {
  const Algebra& alg = ell0.algebra();
  require_same_algebra(alg, lambda0.algebra(), "scaling_limit_experiment");
  if (n_scale < 1) throw UsageError("scaling_limit_experiment: n must be positive");
  const int chain_steps = static_cast<int>(std::floor(n_scale * t));
  const int sde_steps = steps_for(t, h);
  const ConeElement ne = alg.identity() * static_cast<double>(n_scale);
  const GigParams wp = make_gig_params(p, ne, ne);
  ScalingSamples out;
  out.discrete.assign(reps, ConeElement::zero(alg));
  out.sde.assign(reps, ConeElement::zero(alg));
  std::mutex mu;
  for_each_block(reps, kReplicaBlock, workers, rng, [&](std::size_t first, std::size_t size, RngStream& st) {
    RngStream sd = st.derive(0), sc = st.derive(1);
    GigSource src(wp, cfg);
    for (std::size_t i = 0; i < size; ++i) {
      ChainState c = scaled_start(ell0, lambda0);
      for (int k = 0; k < chain_steps; ++k) c = chain_step(c, src.next(sd), n_scale);
      out.discrete[first + i] = c.Lambda;
      HypoStepper s(alg, p);
      for (int k = 0; k < sde_steps; ++k) s.step(sc, h);
      out.sde[first + i] = tilde_lambda(s, ell0, lambda0);
    }
    const auto d = src.diagnostics();
    std::lock_guard<std::mutex> lock(mu);
    out.warnings.insert(out.warnings.end(), d.begin(), d.end());
  });
  return out;
}

LorentzFactors lorentz_factorize(const std::vector<ConeElement>& y, const std::vector<double>& t, double p) {
  if (y.size() != t.size()) throw UsageError("lorentz_factorize: times and points differ in length");
  LorentzFactors f;
  for (std::size_t k = 0; k < y.size(); ++k) {
    if (y[k].algebra().kind() != AlgebraKind::Lorentz) {
      throw UsageError("lorentz factorization needs a Lorentz algebra");
    }
    const double dt = det(y[k]);
    if (!(dt > 0.0)) throw NumericalError("lorentz_factorize: det(y) is not positive");
    const ConeElement xi = y[k] / std::sqrt(dt);
    f.b.push_back(-0.25 * std::log(dt) - p * t[k]);
    f.radius.push_back(std::acosh(std::max(1.0, xi[0])));
    f.max_norm_error = std::max(f.max_norm_error, std::abs(det(xi) - 1.0));
    f.xi.push_back(xi);
  }
  return f;
}

LorentzSummary lorentz_factorization_experiment(const Algebra& algebra, double p, double t, double h,
                                                int record_stride, std::size_t reps, RngStream& rng, int workers) {
  if (algebra.kind() != AlgebraKind::Lorentz) throw UsageError("lorentz factorization needs a Lorentz algebra");
  const int steps = steps_for(t, h);
  const int stride = record_stride > 0 ? record_stride : steps;
  LorentzSummary out;
  out.b.assign(reps, 0.0);
  out.radius.assign(reps, 0.0);
  std::vector<double> err(reps, 0.0);
  for_each_block(reps, kReplicaBlock, workers, rng, [&](std::size_t first, std::size_t size, RngStream& st) {
    for (std::size_t i = 0; i < size; ++i) {
      HypoStepper s(algebra, p);
      std::vector<ConeElement> ys{s.adj_inv_e()};
      std::vector<double> ts{0.0};
      for (int k = 1; k <= steps; ++k) {
        s.step(st, h);
        if (k % stride == 0 || k == steps) {
          ys.push_back(s.adj_inv_e());
          ts.push_back(s.time());
        }
      }
      const LorentzFactors f = lorentz_factorize(ys, ts, p);
      out.b[first + i] = f.b.back();
      out.radius[first + i] = f.radius.back();
      err[first + i] = f.max_norm_error;
    }
  });
  for (double e : err) out.max_norm_error = std::max(out.max_norm_error, e);
  return out;
}

LyapunovResult lyapunov_probe(const Algebra& algebra, double p, double T, double h, std::size_t reps, RngStream& rng,
                              int workers) {
  const int steps = steps_for(T, h);
  const int half = steps / 2;
  if (half < 1 || reps < 2) throw UsageError("lyapunov_probe: needs at least two steps and two replicas");
  std::vector<double> slope(reps, 0.0);
  for_each_block(reps, kReplicaBlock, workers, rng, [&](std::size_t first, std::size_t size, RngStream& st) {
    for (std::size_t i = 0; i < size; ++i) {
      HypoStepper s(algebra, p);
      double t_mid = 0.0, log_mid = 0.0;
      for (int k = 1; k <= steps; ++k) {
        s.step(st, h);
        if (k == half) {
          t_mid = s.time();
          log_mid = std::log(norm(s.adj_inv_e()));
        }
      }
      slope[first + i] = (std::log(norm(s.adj_inv_e())) - log_mid) / (s.time() - t_mid);
    }
  });
  LyapunovResult r;
  double m = 0.0;
  for (double v : slope) m += v;
  m /= static_cast<double>(reps);
  double var = 0.0;
  for (double v : slope) var += (v - m) * (v - m);
  var /= static_cast<double>(reps - 1);
  r.exponent = m;
  r.se = std::sqrt(var / static_cast<double>(reps));
  r.predicted = -2.0 * (p - algebra.degree() * (algebra.rank() - 1) / 2.0);
  return r;
}

PairedSamples time_reversal_samples(const ConeElement& ell0, double p, double t, double h, std::size_t reps,
                                    RngStream& rng, int workers) {
  const Algebra& alg = ell0.algebra();
  const int steps = steps_for(t, h);
  PairedSamples out{std::vector<ConeElement>(reps, ell0), std::vector<ConeElement>(reps, ell0)};
  for_each_block(reps, kReplicaBlock, workers, rng, [&](std::size_t first, std::size_t size, RngStream& st) {
    RngStream sa = st.derive(0), sb = st.derive(1);
    for (std::size_t i = 0; i < size; ++i) {
      HypoStepper a(alg, p), b(alg, p);
      for (int k = 0; k < steps; ++k) {
        a.step(sa, h);
        b.step(sb, h);
      }
      out.a[first + i] = tilde_ell(a, ell0);
      out.b[first + i] = b.forward_integral() + b.apply(ell0);
    }
  });
  return out;
}

std::vector<std::pair<ConeElement, ConeElement>> continuous_pairs(const ConeElement& lambda0, double p, double t,
                                                                  double h, std::size_t reps,
                                                                  const McmcConfig& cfg, RngStream& rng,
                                                                  int workers) {
  const Algebra& alg = lambda0.algebra();
  const int steps = steps_for(t, h);
  const GigParams start = make_gig_params(p, inverse(lambda0), alg.identity());
  std::vector<std::pair<ConeElement, ConeElement>> out(reps, {lambda0, lambda0});
  for_each_block(reps, kReplicaBlock, workers, rng, [&](std::size_t first, std::size_t size, RngStream& st) {
    RngStream s0 = st.derive(0), sp = st.derive(1);
    GigSource src(start, cfg);
    for (std::size_t i = 0; i < size; ++i) {
      const ConeElement ell0 = src.next(s0);
      HypoStepper s(alg, p);
      for (int k = 0; k < steps; ++k) s.step(sp, h);
      out[first + i] = {tilde_lambda(s, ell0, lambda0), tilde_ell(s, ell0)};
    }
  });
  return out;
}

PairedSamples continuous_stationarity(const Algebra& algebra, double p, double t, double h, std::size_t reps,
                                      RngStream& rng, int workers) {
  if (!(p < 1.0 - algebra.dim_over_rank())) throw DomainError("continuous stationarity requires p<1-dim E/r");
  const int steps = steps_for(t, h);
  const WishartParams wish = make_wishart_params(-p, algebra.identity());
  PairedSamples out{std::vector<ConeElement>(reps, algebra.identity()),
                    std::vector<ConeElement>(reps, algebra.identity())};
  for_each_block(reps, kReplicaBlock, workers, rng, [&](std::size_t first, std::size_t size, RngStream& st) {
    RngStream sx = st.derive(0), sp = st.derive(1), sf = st.derive(2);
    const auto x = inv_wishart_sample(wish, size, sx);
    const auto f = inv_wishart_sample(wish, size, sf);
    for (std::size_t i = 0; i < size; ++i) {
      HypoStepper s(algebra, p);
      for (int k = 0; k < steps; ++k) s.step(sp, h);
      out.a[first + i] = tilde_ell(s, x[i]);
      out.b[first + i] = f[i];
    }
  });
  return out;
}

}  // namespace conekit
