#include "conekit/chains.hpp"

#include <cmath>

#include "conekit/errors.hpp"
#include "conekit/jordan.hpp"
#include "conekit/parallel.hpp"
#include "conekit/rng.hpp"

namespace conekit {

namespace {

bool is_zero(const ConeElement& x) { return x.coords().isZero(0.0); }

std::string step_msg(const char* what, int k) { return std::string(what) + " left the cone at step " + std::to_string(k); }

GigParams increment_params(const Algebra& alg, double p, int scale) {
  const ConeElement ne = alg.identity() * static_cast<double>(scale);
  return make_gig_params(p, ne, ne);
}

}  // namespace

ChainState unscaled_start(const Algebra& algebra) {
  const LinOperator id = LinOperator::identity(algebra);
  return ChainState{0, ConeElement::zero(algebra), algebra.identity(), ConeElement::zero(algebra), id, id};
}

ChainState scaled_start(const ConeElement& ell0, const ConeElement& lambda0) {
  const Algebra& alg = ell0.algebra();
  require_same_algebra(alg, lambda0.algebra(), "scaled_start");
  if (!in_cone(ell0) || !in_cone(lambda0)) throw DomainError("scaled_start: ell0 and lambda0 must lie in the cone");
  const LinOperator id = LinOperator::identity(alg);
  return ChainState{0, ell0, lambda0, ConeElement::zero(alg), id, id};
}

ChainState chain_step(const ChainState& state, const ConeElement& w, int scale) {
  require_same_algebra(state.L.algebra(), w.algebra(), "chain_step");
  if (scale < 1) throw UsageError("chain_step: scale must be positive");
  if (!in_cone(w)) throw UsageError("chain_step: increment outside the cone");
  const double n = scale;
  const ConeElement winv = inverse(w);
  ChainState next{state.step + 1, quad_apply(w, state.L) + w / n, state.Lambda,
                  state.I + state.backward(winv) / n, state.forward * quad_rep(w),
                  state.backward * quad_rep(winv)};
  if (!is_zero(state.L)) next.Lambda = quad_apply(w + inverse(state.L) / n, state.Lambda);
  return next;
}

void validate(const ChainConfig& cfg, const Algebra& algebra) {
  if (cfg.steps < 1) throw ConfigError("chain.steps must be at least 1");
  if (cfg.n_scale < 1) throw ConfigError("chain.n_scale must be at least 1");
  if (cfg.ell0.has_value() != cfg.lambda0.has_value()) {
    throw ConfigError("chain.ell0 and chain.lambda0 must be given together");
  }
  if (cfg.ell0) {
    if (!(cfg.ell0->algebra() == algebra) || !(cfg.lambda0->algebra() == algebra)) {
      throw ConfigError("chain start points belong to another algebra");
    }
    if (!in_cone(*cfg.ell0) || !in_cone(*cfg.lambda0)) throw ConfigError("chain start points must lie in the cone");
  }
  validate(cfg.mcmc);
}

Trajectory run_chain_on(const Algebra& algebra, const ChainConfig& cfg, const std::vector<ConeElement>& increments) {
  validate(cfg, algebra);
  Trajectory t;
  t.increments = increments;
  t.states.reserve(increments.size() + 1);
  t.states.push_back(cfg.ell0 ? scaled_start(*cfg.ell0, *cfg.lambda0) : unscaled_start(algebra));
  for (const ConeElement& w : increments) {
    t.states.push_back(chain_step(t.states.back(), w, cfg.n_scale));
    const ChainState& s = t.states.back();
    if (!in_cone(s.L)) throw NumericalError(step_msg("L", s.step));
    if (!in_cone(s.Lambda)) throw NumericalError(step_msg("Lambda", s.step));
  }
  return t;
}

Trajectory run_chain(const Algebra& algebra, const ChainConfig& cfg, RngStream& rng) {
  validate(cfg, algebra);
  GigSource src(increment_params(algebra, cfg.p, cfg.n_scale), cfg.mcmc, cfg.prefer_exact);
  std::vector<ConeElement> w;
  w.reserve(cfg.steps);
  for (int k = 0; k < cfg.steps; ++k) w.push_back(src.next(rng));
  return run_chain_on(algebra, cfg, w);
}

ConeElement closed_form_I(const std::vector<ConeElement>& increments, int k, int scale) {
  if (k < 0 || k > static_cast<int>(increments.size())) throw UsageError("closed_form_I: step out of range");
  if (increments.empty()) throw UsageError("closed_form_I: no increments");
  const Algebra& alg = increments.front().algebra();
  ConeElement sum = ConeElement::zero(alg);
  for (int i = 0; i < k; ++i) {
    // P(w_1^{-1}) ... P(w_i^{-1}) (w_{i+1}^{-1}), innermost factor first.
    ConeElement term = inverse(increments[i]);
    for (int j = i - 1; j >= 0; --j) term = quad_apply(inverse(increments[j]), term);
    sum = sum + term;
  }
  return sum / static_cast<double>(scale);
}

ConeElement closed_form_L(const std::vector<ConeElement>& increments, int k, const ChainConfig& cfg) {
  ConeElement x = closed_form_I(increments, k, cfg.n_scale);
  if (cfg.ell0) x = x + *cfg.ell0;
  for (int j = 0; j < k; ++j) x = quad_apply(increments[j], x);
  return x;
}

ConeElement closed_form_Lambda(const std::vector<ConeElement>& increments, int k, const ChainConfig& cfg) {
  if (k < 0 || k > static_cast<int>(increments.size())) throw UsageError("closed_form_Lambda: step out of range");
  if (increments.empty()) throw UsageError("closed_form_Lambda: no increments");
  const Algebra& alg = increments.front().algebra();
  if (!cfg.ell0 && k == 0) return alg.identity();
  ConeElement y = alg.identity();
  int first = 0;
  if (cfg.ell0) {
    y = quad_apply(inverse(*cfg.ell0), *cfg.lambda0);
  } else {
    y = quad_apply(inverse(increments[0] / static_cast<double>(cfg.n_scale)), y);
    first = 1;
  }
  for (int j = first; j < k; ++j) y = quad_apply(inverse(increments[j]), y);
  return quad_apply(closed_form_L(increments, k, cfg), y);
}

std::vector<std::pair<ConeElement, ConeElement>> block_oracle(const std::vector<ConeElement>& increments,
                                                              const ChainConfig& cfg) {
  if (increments.empty()) throw UsageError("block_oracle: no increments");
  const Algebra& alg = increments.front().algebra();
  if (alg.kind() != AlgebraKind::SymReal) throw UsageError("block_oracle: unsupported algebra " + alg.label());
  validate(cfg, alg);
  const int r = alg.rank();
  const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(r, r);
  Eigen::MatrixXd g = Eigen::MatrixXd::Identity(2 * r, 2 * r);
  if (cfg.ell0) {
    const Eigen::MatrixXd z0 = to_symmetric(sqrt(*cfg.lambda0));
    const Eigen::MatrixXd w0 = z0.inverse() * to_symmetric(*cfg.ell0);
    g.topLeftCorner(r, r) = w0;
    g.bottomLeftCorner(r, r) = z0;
    g.bottomRightCorner(r, r) = w0.transpose().inverse();
  }
  auto read = [&]() {
    const Eigen::MatrixXd w = g.topLeftCorner(r, r), z = g.bottomLeftCorner(r, r);
    const Eigen::MatrixXd lam = z.transpose() * z, ell = w.transpose() * z;
    return std::make_pair(from_symmetric(alg, 0.5 * (lam + lam.transpose())),
                          from_symmetric(alg, 0.5 * (ell + ell.transpose())));
  };
  std::vector<std::pair<ConeElement, ConeElement>> out;
  if (cfg.ell0) {
    out.push_back(read());
  } else {
    out.emplace_back(alg.identity(), ConeElement::zero(alg));
  }
  for (const ConeElement& wk : increments) {
    const Eigen::MatrixXd w = to_symmetric(wk);
    Eigen::MatrixXd step = Eigen::MatrixXd::Zero(2 * r, 2 * r);
    step.topLeftCorner(r, r) = w;
    step.bottomLeftCorner(r, r) = id / static_cast<double>(cfg.n_scale);
    step.bottomRightCorner(r, r) = w.inverse();
    g = g * step;
    out.push_back(read());
  }
  return out;
}

std::pair<ConeElement, ConeElement> kernel_K_sample(const ConeElement& a, double p, const McmcConfig& cfg,
                                                    RngStream& rng, bool prefer_exact) {
  if (!in_cone(a)) throw DomainError("kernel_K_sample: a must lie in the cone");
  return {a, gig_single_draw(make_gig_params(p, inverse(a), a.algebra().identity()), cfg, rng, prefer_exact)};
}

IntertwiningSamples intertwining_experiment(const ConeElement& a, double p, std::size_t reps,
                                            const McmcConfig& cfg, RngStream& rng, int workers) {
  if (reps < 1) throw UsageError("intertwining_experiment: reps must be positive");
  if (!in_cone(a)) throw DomainError("intertwining_experiment: a must lie in the cone");
  const Algebra& alg = a.algebra();
  const ConeElement e = alg.identity();
  const GigParams x_params = make_gig_params(p, inverse(a), e);
  const GigParams w_params = make_gig_params(p, e, e);
  IntertwiningSamples out;
  out.lhs.resize(reps, {e, e});
  out.rhs.resize(reps, {e, e});
  std::vector<std::vector<std::string>> notes((reps + kReplicaBlock - 1) / kReplicaBlock);
  for_each_block(reps, kReplicaBlock, workers, rng, [&](std::size_t first, std::size_t size, RngStream& s) {
    RngStream s_lhs = s.derive(0), s_rhs = s.derive(1), s_cond = s.derive(2);
    GigSource xl(x_params, cfg), wl(w_params, cfg), xr(x_params, cfg), wr(w_params, cfg);
    for (std::size_t i = first; i < first + size; ++i) {
      const ConeElement x = xl.next(s_lhs), w = wl.next(s_lhs);
      out.lhs[i] = {quad_apply(w + inverse(x), a), quad_apply(w, x) + w};
      const ConeElement x2 = xr.next(s_rhs), w2 = wr.next(s_rhs);
      const ConeElement lam = quad_apply(w2 + inverse(x2), a);
      RngStream one = s_cond.derive(i);
      out.rhs[i] = {lam, gig_single_draw(make_gig_params(p, inverse(lam), e), cfg, one)};
    }
    auto& n = notes[first / kReplicaBlock];
    for (const GigSource* g : {&xl, &wl, &xr, &wr}) {
      for (auto& d : g->diagnostics()) n.push_back(std::move(d));
    }
  });
  for (auto& n : notes) out.warnings.insert(out.warnings.end(), n.begin(), n.end());
  return out;
}

PairSamples chain_pairs(const Algebra& algebra, double p, int step, std::size_t reps, const McmcConfig& cfg,
                        RngStream& rng, int workers) {
  if (step < 1) throw UsageError("chain_pairs: step must be at least 1");
  PairSamples out(reps, {algebra.identity(), algebra.identity()});
  const GigParams w_params = increment_params(algebra, p, 1);
  for_each_block(reps, kReplicaBlock, workers, rng, [&](std::size_t first, std::size_t size, RngStream& s) {
    GigSource src(w_params, cfg);
    for (std::size_t i = first; i < first + size; ++i) {
      ChainState st = unscaled_start(algebra);
      for (int k = 0; k < step; ++k) st = chain_step(st, src.next(s));
      out[i] = {st.Lambda, st.L};
    }
  });
  return out;
}

DufresneResult dufresne_estimate(const Algebra& algebra, double p, int steps, std::size_t reps,
                                 const McmcConfig& cfg, RngStream& rng, int workers) {
  if (steps < 1 || reps < 1) throw UsageError("dufresne_estimate: steps and reps must be positive");
  DufresneResult out;
  if (!(p > algebra.dim_over_rank() - 1.0)) {
    out.warnings.push_back("p=" + std::to_string(p) + " is not above dim E/r-1=" +
                           std::to_string(algebra.dim_over_rank() - 1.0) + "; the series is expected to diverge");
  }
  out.samples.assign(reps, ConeElement::zero(algebra));
  out.last_increment.assign(reps, 0.0);
  std::vector<char> diverged(reps, 0);
  const GigParams w_params = increment_params(algebra, p, 1);
  for_each_block(reps, kReplicaBlock, workers, rng, [&](std::size_t first, std::size_t size, RngStream& s) {
    GigSource src(w_params, cfg);
    for (std::size_t i = first; i < first + size; ++i) {
      // Only I and the running inverse product are needed.
      ConeElement sum = ConeElement::zero(algebra);
      LinOperator back = LinOperator::identity(algebra);
      double last = 0.0;
      for (int k = 0; k < steps; ++k) {
        const ConeElement winv = inverse(src.next(s));
        const ConeElement term = back(winv);
        sum = sum + term;
        last = norm(term);
        back = back * quad_rep(winv);
        if (trace(sum) > kDivergenceTrace) {
          diverged[i] = 1;
          break;
        }
      }
      out.samples[i] = sum;
      out.last_increment[i] = last;
    }
  });
  for (char d : diverged) out.diverged += d;
  if (out.diverged > 0) {
    out.warnings.push_back(std::to_string(out.diverged) + " replicas stopped at trace(I) > 1e12");
  }
  return out;
}

StationaritySamples stationarity_one_step(const Algebra& algebra, double p, std::size_t reps, const McmcConfig& cfg,
                                          RngStream& rng, int workers) {
  const WishartParams wish = make_wishart_params(p, algebra.identity());
  const GigParams w_params = increment_params(algebra, p, 1);
  StationaritySamples out{std::vector<ConeElement>(reps, algebra.identity()),
                          std::vector<ConeElement>(reps, algebra.identity())};
  for_each_block(reps, kReplicaBlock, workers, rng, [&](std::size_t first, std::size_t size, RngStream& s) {
    RngStream sx = s.derive(0), sw = s.derive(1), sf = s.derive(2);
    GigSource src(w_params, cfg);
    const auto x = inv_wishart_sample(wish, size, sx);
    const auto f = inv_wishart_sample(wish, size, sf);
    for (std::size_t j = 0; j < size; ++j) {
      const ConeElement winv = inverse(src.next(sw));
      out.pushed[first + j] = quad_apply(winv, x[j]) + winv;
      out.fresh[first + j] = f[j];
    }
  });
  return out;
}

StationaritySamples stationarity_small_step(const Algebra& algebra, double p, int n_scale, std::size_t reps,
                                            const McmcConfig& cfg, RngStream& rng, int workers) {
  if (!(p < 1.0 - algebra.dim_over_rank())) {
    throw DomainError("stationarity_small_step requires p<1-dim E/r (p=" + std::to_string(p) +
                      ", 1-dim E/r=" + std::to_string(1.0 - algebra.dim_over_rank()) + ")");
  }
  if (n_scale < 1) throw UsageError("stationarity_small_step: n_scale must be positive");
  const WishartParams wish = make_wishart_params(-p, algebra.identity());
  const GigParams w_params = increment_params(algebra, p, n_scale);
  StationaritySamples out{std::vector<ConeElement>(reps, algebra.identity()),
                          std::vector<ConeElement>(reps, algebra.identity())};
  for_each_block(reps, kReplicaBlock, workers, rng, [&](std::size_t first, std::size_t size, RngStream& s) {
    RngStream sx = s.derive(0), sw = s.derive(1), sf = s.derive(2);
    GigSource src(w_params, cfg);
    const auto x = inv_wishart_sample(wish, size, sx);
    const auto f = inv_wishart_sample(wish, size, sf);
    for (std::size_t j = 0; j < size; ++j) {
      const ConeElement w = src.next(sw);
      out.pushed[first + j] = quad_apply(w, x[j]) + w / static_cast<double>(n_scale);
      out.fresh[first + j] = f[j];
    }
  });
  return out;
}

}  // namespace conekit
