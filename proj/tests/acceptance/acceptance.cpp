// Acceptance run: one PASS/FAIL line per criterion, exit 0 iff all pass.
// Usage: acceptance [criterion numbers...]; no arguments runs everything.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "conekit/chains.hpp"
#include "conekit/diffusion.hpp"
#include "conekit/distributions.hpp"
#include "conekit/errors.hpp"
#include "conekit/identities.hpp"
#include "conekit/jordan.hpp"
#include "conekit/rng.hpp"
#include "conekit/stats.hpp"
#include "conekit/verify.hpp"

namespace fs = std::filesystem;
using namespace conekit;

namespace {

constexpr std::uint64_t kSeed = 20240611;

struct Result {
  bool passed = true;
  std::vector<std::string> lines;
  void add(bool ok, const std::string& line) {
    passed = passed && ok;
    lines.push_back(std::string(ok ? "ok   " : "FAIL ") + line);
  }
};

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(4);
  os << v;
  return os.str();
}

double rel_err(const ConeElement& a, const ConeElement& b) {
  return norm(a - b) / std::max(norm(b), 1e-300);
}

Algebra sym(int r) { return make_algebra(AlgebraKind::SymReal, r); }
Algebra lor(int n) { return make_algebra(AlgebraKind::Lorentz, n); }
Algebra real() { return make_algebra(AlgebraKind::Real, 1); }

VerifyParams base_params(std::size_t replicas) {
  VerifyParams vp;
  vp.replicas = replicas;
  return vp;
}

// Runs one experiment and records every check it makes.
void experiment(Result& res, const std::string& tag, Experiment e, const Algebra& alg, double p,
                const VerifyParams& vp, std::uint64_t stream) {
  RngStream rng(kSeed, stream);
  const VerifyOutcome o = run_experiment(e, alg, p, vp, rng);
  for (const Check& c : o.checks) res.add(c.passed, tag + " " + c.name + ": " + c.detail);
}

Result identities() {
  Result res;
  RngStream rng(kSeed, 1);
  for (const Algebra& alg : {real(), sym(2), sym(3), sym(5), lor(3), lor(4), lor(8)}) {
    const IdentityReport rep = run_identity_suite(alg, 1000, rng);
    double worst = 0.0;
    for (const auto& r : rep.results) worst = std::max(worst, r.max_error / r.tolerance);
    std::string failed;
    for (const auto& f : rep.failures()) failed += " " + f;
    res.add(rep.passed(), alg.label() + " " + std::to_string(rep.results.size()) +
                              " identities, worst error/tolerance " + fmt(worst) + failed);
  }
  return res;
}

Result jacobian() {
  Result res;
  RngStream rng(kSeed, 2);
  for (const Algebra& alg : {sym(2), lor(3)}) {
    double worst = 0.0;
    for (int i = 0; i < 50; ++i) {
      const ConeElement x = random_cone_element(alg, rng);
      const ConeElement y = random_cone_element(alg, rng);
      worst = std::max(worst, jacobian_lemma_check(x, y).rel_error);
    }
    res.add(worst <= 1e-4, alg.label() + " worst relative error " + fmt(worst) + " (limit 1e-4)");
  }
  return res;
}

Result gig_sampler() {
  Result res;
  const Algebra r1 = real();
  const std::size_t n = 5000;
  RngStream rng(kSeed, 3);
  const GigParams gp = make_gig_params(1.5, r1.identity() * 2.0, r1.identity() * 0.5);
  GigSource chain(gp, McmcConfig{}, false);
  std::vector<double> mc, exact;
  for (std::size_t i = 0; i < n; ++i) mc.push_back(chain.next(rng)[0]);
  for (std::size_t i = 0; i < n; ++i) exact.push_back(gig_sample_scalar_exact(1.5, 2.0, 0.5, rng));
  const TestReport ks = ks_test(mc, exact);
  res.add(ks.p_value > 0.01, "Real MCMC vs exact KS p = " + fmt(ks.p_value));

  VerifyParams vp = base_params(4000);
  vp.concentration = 1e4;
  experiment(res, "SymReal(2) p=1.5", Experiment::GaussianLimit, sym(2), 1.5, vp, 31);
  experiment(res, "Lorentz(3) p=-0.5", Experiment::GaussianLimit, lor(3), -0.5, vp, 32);
  return res;
}

Result inversion() {
  Result res;
  // Random a, b move the target away from the shape the proposal adapts to
  // best; longer thinning keeps 3000 draws close to independent.
  VerifyParams vp = base_params(3000);
  vp.mcmc.thin = 30;
  RngStream setup(kSeed, 40);
  vp.a = random_cone_element(sym(2), setup);
  vp.b = random_cone_element(sym(2), setup);
  experiment(res, "SymReal(2) p=1.3", Experiment::Inversion, sym(2), 1.3, vp, 41);
  vp.a = random_cone_element(lor(4), setup);
  vp.b = random_cone_element(lor(4), setup);
  experiment(res, "Lorentz(4) p=-0.7", Experiment::Inversion, lor(4), -0.7, vp, 42);
  return res;
}

Result intertwining() {
  Result res;
  RngStream setup(kSeed, 50);
  std::uint64_t stream = 51;
  for (const Algebra& alg : {real(), sym(2)}) {
    const double p = alg.kind() == AlgebraKind::Real ? 1.5 : 2.0;
    VerifyParams vp = base_params(5000);
    experiment(res, alg.label() + " a=e", Experiment::Intertwining, alg, p, vp, stream++);
    vp.a = random_cone_element(alg, setup);
    experiment(res, alg.label() + " a random", Experiment::Intertwining, alg, p, vp, stream++);
    VerifyParams cp = base_params(2000);
    experiment(res, alg.label() + " conditional", Experiment::ConditionalLaw, alg, p, cp, stream++);
    cp.tamper_p = 1.0;
    RngStream rng(kSeed, stream++);
    const VerifyOutcome o = run_experiment(Experiment::ConditionalLaw, alg, p, cp, rng);
    double pv = 1.0;
    for (const auto& [name, rep] : o.reports) pv = std::min(pv, rep.p_value);
    res.add(pv < 1e-3, alg.label() + " tampered p+1 rejected, p = " + fmt(pv) + " (limit 1e-3)");
  }
  return res;
}

Result closed_forms() {
  Result res;
  const Algebra s2 = sym(2);
  RngStream rng(kSeed, 6);
  ChainConfig cfg;
  cfg.p = 2.0;
  cfg.n_scale = 32;
  cfg.steps = 100;
  cfg.ell0 = random_cone_element(s2, rng);
  cfg.lambda0 = random_cone_element(s2, rng);
  const Trajectory t = run_chain(s2, cfg, rng);
  const auto block = block_oracle(t.increments, cfg);
  double closed = 0.0, oracle = 0.0;
  for (int k = 0; k <= cfg.steps; ++k) {
    closed = std::max(closed, rel_err(closed_form_L(t.increments, k, cfg), t.states[k].L));
    closed = std::max(closed, rel_err(closed_form_Lambda(t.increments, k, cfg), t.states[k].Lambda));
    closed = std::max(closed, rel_err(closed_form_I(t.increments, k, cfg.n_scale), t.states[k].I));
    oracle = std::max(oracle, rel_err(block[k].first, t.states[k].Lambda));
    oracle = std::max(oracle, rel_err(block[k].second, t.states[k].L));
  }
  res.add(closed <= 1e-8, "closed forms over 100 steps, worst relative error " + fmt(closed) + " (limit 1e-8)");
  res.add(oracle <= 1e-8, "block oracle over 100 steps, worst relative error " + fmt(oracle) + " (limit 1e-8)");
  return res;
}

Result dufresne_discrete() {
  Result res;
  experiment(res, "Real p=2", Experiment::DufresneDiscrete, real(), 2.0, base_params(10000), 71);
  experiment(res, "SymReal(2) p=3", Experiment::DufresneDiscrete, sym(2), 3.0, base_params(3000), 72);
  return res;
}

Result dufresne_continuous() {
  Result res;
  experiment(res, "Real p=2", Experiment::DufresneContinuous, real(), 2.0, base_params(5000), 81);
  experiment(res, "SymReal(2) p=3", Experiment::DufresneContinuous, sym(2), 3.0, base_params(2000), 82);
  return res;
}

Result stationarity() {
  Result res;
  experiment(res, "Real p=1.5", Experiment::Stationarity, real(), 1.5, base_params(3000), 91);
  experiment(res, "SymReal(2) p=2", Experiment::Stationarity, sym(2), 2.0, base_params(2000), 92);
  return res;
}

Result scaling_limit() {
  Result res;
  VerifyParams vp = base_params(10000);
  vp.n_scale = 64;
  experiment(res, "Real p=1.5", Experiment::ScalingLimit, real(), 1.5, vp, 101);
  experiment(res, "Lorentz(3) p=1.5", Experiment::ScalingLimit, lor(3), 1.5, vp, 102);
  return res;
}

Result lorentz_factorization() {
  Result res;
  experiment(res, "Lorentz(4) p=1.5", Experiment::LorentzFactorization, lor(4), 1.5, base_params(10000), 111);
  return res;
}

Result lyapunov() {
  Result res;
  const VerifyParams vp = base_params(200);
  experiment(res, "Real p=1", Experiment::Lyapunov, real(), 1.0, vp, 121);
  experiment(res, "Lorentz(4) p=3", Experiment::Lyapunov, lor(4), 3.0, vp, 122);
  experiment(res, "Lorentz(4) critical p=1", Experiment::Lyapunov, lor(4), 1.0, vp, 123);
  return res;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

// Runs every CLI command with the same seed and config in fresh directories,
// at 1 and 4 workers and twice at each, and compares the files byte for byte.
Result determinism() {
  Result res;
  const fs::path root = fs::temp_directory_path() / ("conekit_acceptance_" + std::to_string(::getpid()));
  fs::remove_all(root);
  fs::create_directories(root);
  const fs::path config = root / "config.json";
  std::ofstream(config) << R"({"algebra": {"kind": "sym_real", "size": 2}, "p": 2.5, "seed": 77, "replicas": 300,
 "chain": {"steps": 50, "n_scale": 32, "ell0": 1.0, "lambda0": 1.0}, "diffusion": {"T": 0.5, "h": 0.005, "record_stride": 10},
 "distribution": {"family": "gig", "a": 1.5, "b": 0.5, "count": 2}})";
  const std::vector<std::pair<std::string, std::vector<std::string>>> commands = {
      {"sample", {"samples.csv", "samples.json"}},
      {"chain", {"trajectory.csv", "chain.json"}},
      {"diffuse", {"path.csv", "diffuse.json"}},
      {"verify dufresne_discrete", {"verify_dufresne_discrete.json"}},
  };
  const int workers[4] = {1, 1, 4, 4};
  for (std::size_t c = 0; c < commands.size(); ++c) {
    const auto& [cmd, files] = commands[c];
    std::vector<fs::path> dirs;
    bool ran = true;
    for (int i = 0; i < 4; ++i) {
      const fs::path dir = root / ("c" + std::to_string(c) + "_" + std::to_string(i));
      fs::create_directories(dir);
      const std::string line = "cd '" + dir.string() + "' && CONEKIT_THREADS=" + std::to_string(workers[i]) + " '" +
                               CONEKIT_CLI_PATH + "' " + cmd + " --config '" + config.string() +
                               "' --out . > stdout.txt 2>&1";
      const int code = std::system(line.c_str());
      ran = ran && code == 0;
      dirs.push_back(dir);
    }
    bool same = ran;
    for (const auto& f : files) {
      const std::string first = slurp(dirs[0] / f);
      same = same && !first.empty();
      for (int i = 1; i < 4; ++i) same = same && slurp(dirs[i] / f) == first;
    }
    res.add(same, cmd + ": outputs identical over two runs at 1 and 4 workers");
  }

  // Library level: an experiment run with different worker counts.
  VerifyParams vp = base_params(1000);
  std::string reference;
  bool same = true;
  for (int w : {1, 3, 4}) {
    vp.workers = w;
    RngStream rng(kSeed, 13);
    const VerifyOutcome o = run_experiment(Experiment::Intertwining, sym(2), 2.0, vp, rng);
    std::ostringstream os;
    os.precision(17);
    for (const auto& [name, rep] : o.reports) os << name << ' ' << rep.statistic << ' ' << rep.p_value << '\n';
    if (reference.empty()) reference = os.str();
    same = same && os.str() == reference;
  }
  res.add(same, "intertwining statistics identical at 1, 3 and 4 workers");
  fs::remove_all(root);
  return res;
}

struct Criterion {
  int number;
  std::string title;
  std::function<Result()> run;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> criteria = {
      {1, "algebra identity suite", identities},
      {2, "change-of-variables Jacobian", jacobian},
      {3, "GIG sampler validity", gig_sampler},
      {4, "GIG inversion symmetry", inversion},
      {5, "intertwining and conditional law", intertwining},
      {6, "closed-form chain and block oracle", closed_forms},
      {7, "discrete Dufresne identity", dufresne_discrete},
      {8, "continuous Dufresne identity", dufresne_continuous},
      {9, "stationarity", stationarity},
      {10, "scaling limit", scaling_limit},
      {11, "Lorentz factorization", lorentz_factorization},
      {12, "Lyapunov probe", lyapunov},
      {13, "determinism", determinism},
  };
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));

  int failed = 0;
  for (const auto& c : criteria) {
    if (!selected.empty() && !selected.count(c.number)) continue;
    const auto start = std::chrono::steady_clock::now();
    Result r;
    try {
      r = c.run();
    } catch (const std::exception& e) {
      r.add(false, std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    for (const auto& line : r.lines) std::cout << "    " << line << '\n';
    std::printf("%s criterion %d: %s (%.1f s)\n", r.passed ? "PASS" : "FAIL", c.number, c.title.c_str(), secs);
    std::fflush(stdout);
    if (!r.passed) ++failed;
  }
  std::cout << (failed == 0 ? "all criteria passed" : std::to_string(failed) + " criteria failed") << '\n';
  return failed == 0 ? 0 : 1;
}
