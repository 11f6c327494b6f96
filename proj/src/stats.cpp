#include "conekit/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <boost/math/special_functions/gamma.hpp>

#include "conekit/errors.hpp"
#include "conekit/jordan.hpp"
#include "conekit/parallel.hpp"
#include "conekit/rng.hpp"

namespace conekit {

std::string method_name(TestMethod method) {
  switch (method) {
    case TestMethod::EnergyPermutation: return "energy_permutation";
    case TestMethod::KsTwoSample: return "ks_two_sample";
    case TestMethod::KsVsCdf: return "ks_vs_cdf";
    case TestMethod::Chi2Binned: return "chi2_binned";
  }
  return "?";
}

Eigen::MatrixXd to_matrix(const std::vector<ConeElement>& samples) {
  if (samples.empty()) return Eigen::MatrixXd(0, 0);
  Eigen::MatrixXd m(samples.size(), samples.front().algebra().dim());
  for (std::size_t i = 0; i < samples.size(); ++i) m.row(i) = samples[i].coords().transpose();
  return m;
}

namespace {

void check_samples(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, const char* what) {
  if (a.rows() == 0 || b.rows() == 0) throw UsageError(std::string(what) + ": empty sample");
  if (a.cols() != b.cols()) throw UsageError(std::string(what) + ": samples differ in dimension");
}

// Observations as contiguous columns.
Eigen::MatrixXd pooled_columns(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  Eigen::MatrixXd z(a.cols(), a.rows() + b.rows());
  z.leftCols(a.rows()) = a.transpose();
  z.rightCols(b.rows()) = b.transpose();
  return z;
}

inline double dist(const double* x, const double* y, int k) {
  double s = 0.0;
  for (int t = 0; t < k; ++t) {
    const double d = x[t] - y[t];
    s += d * d;
  }
  return std::sqrt(s);
}

struct PairSums {
  long double aa = 0, bb = 0, ab = 0;  // ordered pairs
};

PairSums pair_sums(const Eigen::MatrixXd& z, Eigen::Index n, std::vector<double>* row_sums) {
  const Eigen::Index total = z.cols();
  const int k = static_cast<int>(z.rows());
  PairSums s;
  if (row_sums) row_sums->assign(total, 0.0);
  for (Eigen::Index i = 0; i < total; ++i) {
    long double acc_a = 0, acc_b = 0;
    for (Eigen::Index j = 0; j < total; ++j) {
      const double d = dist(z.col(i).data(), z.col(j).data(), k);
      if (j < n) acc_a += d; else acc_b += d;
    }
    if (row_sums) (*row_sums)[i] = static_cast<double>(acc_a + acc_b);
    if (i < n) {
      s.aa += acc_a;
      s.ab += acc_b;
    } else {
      s.bb += acc_b;
    }
  }
  return s;
}

}  // namespace

double energy_distance(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  check_samples(a, b, "energy_distance");
  const long double n = a.rows(), m = b.rows();
  PairSums s = pair_sums(pooled_columns(a, b), a.rows(), nullptr);
  return static_cast<double>(2.0L * s.ab / (n * m) - s.aa / (n * n) - s.bb / (m * m));
}

double energy_distance_unbiased(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  check_samples(a, b, "energy_distance_unbiased");
  if (a.rows() < 2 || b.rows() < 2) throw UsageError("energy_distance_unbiased: need two points per sample");
  const long double n = a.rows(), m = b.rows();
  PairSums s = pair_sums(pooled_columns(a, b), a.rows(), nullptr);
  return static_cast<double>(2.0L * s.ab / (n * m) - s.aa / (n * (n - 1)) - s.bb / (m * (m - 1)));
}

TestReport energy_test(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, int permutations, RngStream& rng) {
  check_samples(a, b, "energy_test");
  if (permutations < 500) throw UsageError("energy_test: at least 500 permutations are required");
  const Eigen::Index n = a.rows(), m = b.rows(), total = n + m;
  const int k = static_cast<int>(a.cols());
  Eigen::MatrixXd z = pooled_columns(a, b);

  std::vector<double> row;
  PairSums s = pair_sums(z, n, &row);
  const long double nl = n, ml = m;
  const double observed = static_cast<double>(2.0L * s.ab / (nl * ml) - s.aa / (nl * nl) - s.bb / (ml * ml));
  double grand = 0.0;
  for (double v : row) grand += v;
  const double mean_dist = grand / (static_cast<double>(total) * total);

  // Column 0 is the observed split; the rest are permutations. The energy
  // distance of a split with weights c (1/n on A, -1/m on B) is -c' D c,
  // and D may be double-centred because c sums to zero.
  const Eigen::Index cols = permutations + 1;
  Eigen::MatrixXf c(total, cols);
  const float wa = static_cast<float>(1.0 / n), wb = static_cast<float>(-1.0 / m);
  for (Eigen::Index i = 0; i < total; ++i) c(i, 0) = i < n ? wa : wb;
  std::vector<Eigen::Index> idx(total);
  for (int p = 1; p <= permutations; ++p) {
    RngStream ps = rng.derive(static_cast<std::uint64_t>(p));
    std::iota(idx.begin(), idx.end(), 0);
    std::shuffle(idx.begin(), idx.end(), ps.engine());
    for (Eigen::Index t = 0; t < total; ++t) c(idx[t], p) = t < n ? wa : wb;
  }

  const double inv_n = 1.0 / static_cast<double>(total);
  const double centre = grand * inv_n * inv_n;
  std::vector<double> stat(cols, 0.0);
  const Eigen::Index block = 256;
  Eigen::MatrixXf dblock(block, total);
  for (Eigen::Index i0 = 0; i0 < total; i0 += block) {
    const Eigen::Index rows = std::min(block, total - i0);
    for (Eigen::Index j = 0; j < total; ++j) {
      for (Eigen::Index ii = 0; ii < rows; ++ii) {
        const Eigen::Index i = i0 + ii;
        const double d = dist(z.col(i).data(), z.col(j).data(), k);
        dblock(ii, j) = static_cast<float>(d - (row[i] + row[j]) * inv_n + centre);
      }
    }
    Eigen::MatrixXf y = dblock.topRows(rows) * c;
    for (Eigen::Index p = 0; p < cols; ++p) {
      stat[p] -= static_cast<double>(y.col(p).dot(c.col(p).segment(i0, rows)));
    }
  }

  const double tol = 1e-5 * mean_dist * inv_n;
  int exceed = 0;
  for (Eigen::Index p = 1; p < cols; ++p) exceed += stat[p] >= stat[0] - tol;

  TestReport rep;
  rep.method = TestMethod::EnergyPermutation;
  rep.statistic = std::max(0.0, observed) * static_cast<double>(n) * m / total;
  rep.p_value = (1.0 + exceed) / (1.0 + permutations);
  rep.n_a = n;
  rep.n_b = m;
  rep.permutations = permutations;
  rep.seed = rng.seed();
  return rep;
}

double kolmogorov_q(double lambda) {
  if (lambda <= 0.0) return 1.0;
  if (lambda < 1.18) {
    // Jacobi-transformed series for the distribution function, odd k.
    const double c = -M_PI * M_PI / (8.0 * lambda * lambda);
    double sum = 0.0;
    for (int k = 1; k < 41; k += 2) {
      const double term = std::exp(c * k * k);
      sum += term;
      if (term < 1e-17 * sum) break;
    }
    return std::clamp(1.0 - std::sqrt(2.0 * M_PI) / lambda * sum, 0.0, 1.0);
  }
  double sum = 0.0, sign = 1.0;
  for (int k = 1; k < 100; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    sum += sign * term;
    if (term < 1e-17) break;
    sign = -sign;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

namespace {

double ks_pvalue(double d, double ne) {
  const double s = std::sqrt(ne);
  return kolmogorov_q((s + 0.12 + 0.11 / s) * d);
}

}  // namespace

TestReport ks_test(std::vector<double> sample, const std::function<double(double)>& cdf) {
  if (sample.empty()) throw UsageError("ks_test: empty sample");
  std::sort(sample.begin(), sample.end());
  const double n = static_cast<double>(sample.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const double f = cdf(sample[i]);
    d = std::max({d, (i + 1) / n - f, f - i / n});
  }
  TestReport rep;
  rep.method = TestMethod::KsVsCdf;
  rep.statistic = d;
  rep.p_value = ks_pvalue(d, n);
  rep.n_a = sample.size();
  return rep;
}

TestReport ks_test(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw UsageError("ks_test: empty sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double n = static_cast<double>(a.size()), m = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::abs(i / n - j / m));
  }
  TestReport rep;
  rep.method = TestMethod::KsTwoSample;
  rep.statistic = d;
  rep.p_value = ks_pvalue(d, n * m / (n + m));
  rep.n_a = a.size();
  rep.n_b = b.size();
  return rep;
}

double chi2_survival(double statistic, double dof) {
  if (statistic <= 0.0) return 1.0;
  return boost::math::gamma_q(0.5 * dof, 0.5 * statistic);
}

double fisher_combine(const std::vector<double>& p_values) {
  if (p_values.empty()) throw UsageError("fisher_combine: no p-values");
  double x = 0.0;
  for (double p : p_values) x -= 2.0 * std::log(std::max(p, 1e-300));
  return chi2_survival(x, 2.0 * p_values.size());
}

TestReport conditional_gig_check(const std::vector<std::pair<ConeElement, ConeElement>>& pairs, double p,
                                 const ConditionalCheckConfig& cfg, RngStream& rng) {
  if (pairs.empty()) throw UsageError("conditional_gig_check: no pairs");
  if (cfg.bins < 1) throw UsageError("conditional_gig_check: bins must be positive");
  if (cfg.refs_per_pair < 1) throw UsageError("conditional_gig_check: refs_per_pair must be positive");
  if (cfg.exchange_steps < 1) throw UsageError("conditional_gig_check: exchange_steps must be positive");
  const std::size_t count = pairs.size();
  const int refs = cfg.refs_per_pair;
  TestReport rep;
  rep.method = TestMethod::Chi2Binned;
  rep.n_a = count;
  rep.n_b = count * refs;
  rep.seed = rng.seed();

  std::vector<int> rank(count);
  parallel_for(count, cfg.workers, [&](std::size_t i) {
    const ConeElement& lam = pairs[i].first;
    const ConeElement& ell = pairs[i].second;
    RngStream s = rng.derive(i);
    const GigParams g = make_gig_params(p, inverse(lam), lam.algebra().identity());
    const double t = log_det(ell);
    int below = 0;
    if (cfg.prefer_exact && lam.algebra().rank() == 1) {
      for (int r = 0; r < refs; ++r) below += gig_sample_scalar_exact(g.p, g.a[0], g.b[0], s) < ell[0];
    } else {
      const McmcConfig leg{cfg.step_size, 0, cfg.exchange_steps, 0.3, false};
      const ConeElement hub = make_gig_chain(g, leg, ell)->next(s);
      for (int r = 0; r < refs; ++r) below += log_det(make_gig_chain(g, leg, hub)->next(s)) < t;
    }
    rank[i] = below;
  });

  std::vector<std::size_t> order(count);
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> tr(count);
  for (std::size_t i = 0; i < count; ++i) tr[i] = trace(pairs[i].first);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return tr[x] < tr[y]; });

  int bins = cfg.bins;
  if (count / bins < 50) {
    const int widened = std::max<int>(1, static_cast<int>(count / 50));
    rep.warnings.push_back("bins widened from " + std::to_string(bins) + " to " + std::to_string(widened) +
                           " to keep at least 50 points per bin");
    bins = widened;
  }
  std::vector<double> pvals;
  for (int b = 0; b < bins; ++b) {
    const std::size_t lo = count * b / bins, hi = count * (b + 1) / bins;
    std::vector<double> counts(refs + 1, 0.0);
    for (std::size_t t = lo; t < hi; ++t) counts[rank[order[t]]] += 1.0;
    const double expect = static_cast<double>(hi - lo) / (refs + 1);
    double chi2 = 0.0;
    for (double o : counts) chi2 += (o - expect) * (o - expect) / expect;
    pvals.push_back(chi2_survival(chi2, refs));
  }
  double fisher = 0.0;
  for (double pv : pvals) fisher -= 2.0 * std::log(std::max(pv, 1e-300));
  rep.statistic = fisher;
  rep.p_value = fisher_combine(pvals);
  return rep;
}

MomentSummary moment_summary(const Eigen::MatrixXd& samples, int batches) {
  const Eigen::Index n = samples.rows();
  if (batches < 2) throw UsageError("moment_summary: at least two batches are required");
  if (batches > n) throw UsageError("moment_summary: more batches than samples");
  MomentSummary s;
  s.batches = batches;
  s.mean = samples.colwise().mean().transpose();
  Eigen::MatrixXd centred = samples.rowwise() - s.mean.transpose();
  s.variance = Eigen::VectorXd::Zero(samples.cols());
  if (n > 1) s.variance = (centred.array().square().colwise().sum() / (n - 1.0)).matrix().transpose();
  Eigen::MatrixXd bm(batches, samples.cols());
  for (int b = 0; b < batches; ++b) {
    const Eigen::Index lo = n * b / batches, hi = n * (b + 1) / batches;
    bm.row(b) = samples.middleRows(lo, hi - lo).colwise().mean();
  }
  Eigen::MatrixXd bc = bm.rowwise() - bm.colwise().mean();
  s.se = (bc.array().square().colwise().sum() / (batches - 1.0) / batches).sqrt().matrix().transpose();
  return s;
}

}  // namespace conekit
