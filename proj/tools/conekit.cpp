// conekit: command-line front end for the cone processes library.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "conekit/chains.hpp"
#include "conekit/diffusion.hpp"
#include "conekit/distributions.hpp"
#include "conekit/errors.hpp"
#include "conekit/identities.hpp"
#include "conekit/io.hpp"
#include "conekit/parallel.hpp"
#include "conekit/rng.hpp"
#include "conekit/verify.hpp"

namespace fs = std::filesystem;
using namespace conekit;

namespace {

constexpr int kPass = 0;
constexpr int kFail = 1;
constexpr int kUsage = 2;

struct CommonFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> replicas;
  std::optional<std::string> out;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config, "JSON run configuration");
  cmd->add_option("--seed", f.seed, "Master seed (overrides the config)");
  cmd->add_option("--replicas", f.replicas, "Replica count (overrides the config)");
  cmd->add_option("--out", f.out, "Output directory (overrides the config)");
}

RunConfig resolve(const CommonFlags& f) { return with_overrides(load_config(f.config), f.seed, f.replicas, f.out); }

fs::path output_path(const RunConfig& cfg, const std::string& name) {
  fs::path dir(cfg.output_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw ConfigError("cannot create output directory '" + cfg.output_dir + "'");
  return dir / name;
}

void write_json(const RunConfig& cfg, const std::string& name, const Json& j) {
  std::ofstream os(output_path(cfg, name));
  os << j.dump(2) << '\n';
  if (!os) throw ConfigError("cannot write " + name);
}

template <class Fn>
void write_csv(const RunConfig& cfg, const std::string& name, Fn&& fn) {
  std::ofstream os(output_path(cfg, name));
  fn(os);
  if (!os) throw ConfigError("cannot write " + name);
}

int cmd_algebra_check(const RunConfig& cfg, bool corrupt) {
  RngStream rng(cfg.seed, 0);
  const IdentityReport rep =
      run_identity_suite(cfg.algebra, static_cast<int>(cfg.replicas), rng, corrupt ? corrupted_product(0.1) : nullptr);
  Json j = output_header(cfg, "algebra-check");
  j["draws"] = rep.draws;
  j["passed"] = rep.passed();
  Json ids = Json::array();
  for (const auto& r : rep.results) {
    ids.push_back({{"name", r.name}, {"max_error", r.max_error}, {"tolerance", r.tolerance}, {"passed", r.passed()}});
  }
  j["identities"] = ids;
  j["failures"] = rep.failures();
  write_json(cfg, "algebra_check.json", j);
  for (const auto& r : rep.results) {
    std::cout << (r.passed() ? "PASS " : "FAIL ") << r.name << " max_error=" << format_double(r.max_error)
              << " tolerance=" << format_double(r.tolerance) << '\n';
  }
  return rep.passed() ? kPass : kFail;
}

int cmd_sample(const RunConfig& cfg, int workers) {
  const DistributionBlock d = cfg.distribution.value_or(DistributionBlock{});
  const ConeElement e = cfg.algebra.identity();
  const ConeElement a = d.a.value_or(e), b = d.b.value_or(e);
  RngStream rng(cfg.seed, 0);
  std::vector<std::vector<ConeElement>> draws(cfg.replicas);
  std::vector<double> rates(cfg.replicas, 1.0);
  std::vector<std::string> warnings;
  std::mutex mu;
  Json params;
  params["p"] = cfg.p;
  params["a"] = std::vector<double>(a.coords().data(), a.coords().data() + a.coords().size());
  if (d.family == DistributionFamily::Gig) {
    params["family"] = "gig";
    params["b"] = std::vector<double>(b.coords().data(), b.coords().data() + b.coords().size());
    const GigParams gp = make_gig_params(cfg.p, a, b);
    for_each_block(cfg.replicas, kReplicaBlock, workers, rng, [&](std::size_t first, std::size_t size, RngStream& s) {
      GigSource src(gp, cfg.mcmc);
      for (std::size_t i = 0; i < size; ++i) {
        for (int k = 0; k < d.count; ++k) draws[first + i].push_back(src.next(s));
        rates[first + i] = src.acceptance_rate();
      }
      const auto w = src.diagnostics();
      std::lock_guard<std::mutex> lock(mu);
      warnings.insert(warnings.end(), w.begin(), w.end());
    });
  } else {
    const bool inv = d.family == DistributionFamily::InverseWishart;
    params["family"] = inv ? "inverse_wishart" : "wishart";
    const WishartParams wp = make_wishart_params(cfg.p, a);
    for_each_block(cfg.replicas, kReplicaBlock, workers, rng, [&](std::size_t first, std::size_t size, RngStream& s) {
      for (std::size_t i = 0; i < size; ++i) {
        draws[first + i] = inv ? inv_wishart_sample(wp, d.count, s) : wishart_sample(wp, d.count, s);
      }
    });
  }
  write_csv(cfg, "samples.csv", [&](std::ostream& os) { write_sample_csv(os, cfg, draws); });
  Json j = output_header(cfg, "sample");
  j["params"] = params;
  double mean_rate = 0.0;
  for (double r : rates) mean_rate += r;
  j["acceptance_rate"] = mean_rate / static_cast<double>(rates.size());
  j["samples"] = cfg.replicas * static_cast<std::size_t>(d.count);
  j["warnings"] = warnings;
  write_json(cfg, "samples.json", j);
  std::cout << "wrote " << (cfg.replicas * d.count) << " samples to " << output_path(cfg, "samples.csv").string()
            << '\n';
  return kPass;
}

int cmd_chain(const RunConfig& cfg, int workers) {
  const ChainConfig cc = to_chain_config(cfg);
  RngStream rng(cfg.seed, 0);
  std::vector<Trajectory> runs(cfg.replicas);
  parallel_for(cfg.replicas, workers, [&](std::size_t r) {
    RngStream s = rng.derive(r);
    runs[r] = run_chain(cfg.algebra, cc, s);
  });
  write_csv(cfg, "trajectory.csv", [&](std::ostream& os) { write_trajectory_csv(os, cfg, runs); });
  Json j = output_header(cfg, "chain");
  j["steps"] = cc.steps;
  j["n_scale"] = cc.n_scale;
  j["replicas"] = cfg.replicas;
  write_json(cfg, "chain.json", j);
  std::cout << "wrote " << cfg.replicas << " trajectories to " << output_path(cfg, "trajectory.csv").string() << '\n';
  return kPass;
}

int cmd_diffuse(const RunConfig& cfg, int workers) {
  const GroupPathConfig gc = to_path_config(cfg);
  RngStream rng(cfg.seed, 0);
  std::vector<std::vector<DiffusionState>> runs(cfg.replicas);
  parallel_for(cfg.replicas, workers, [&](std::size_t r) {
    RngStream s = rng.derive(r);
    runs[r] = simulate_hypo_bm(cfg.algebra, gc, s);
  });
  write_csv(cfg, "path.csv", [&](std::ostream& os) { write_path_csv(os, cfg, runs); });
  Json j = output_header(cfg, "diffuse");
  j["T"] = gc.T;
  j["h"] = gc.h;
  j["steps"] = step_count(gc);
  j["replicas"] = cfg.replicas;
  write_json(cfg, "diffuse.json", j);
  std::cout << "wrote " << cfg.replicas << " paths to " << output_path(cfg, "path.csv").string() << '\n';
  return kPass;
}

int cmd_verify(const RunConfig& cfg, const std::string& which, int workers) {
  const Experiment e = experiment_from_name(which);
  require_block(cfg, e);
  RngStream rng(cfg.seed, 0);
  RngStream setup = rng.derive(1000);
  const VerifyParams vp = to_verify_params(cfg, e, workers, setup);
  const VerifyOutcome o = run_experiment(e, cfg.algebra, cfg.p, vp, rng);
  Json j = output_header(cfg, "verify " + which);
  j.update(to_json(o));
  write_json(cfg, "verify_" + which + ".json", j);
  for (const Check& c : o.checks) std::cout << (c.passed ? "PASS " : "FAIL ") << c.name << ": " << c.detail << '\n';
  for (const auto& [name, v] : o.estimates) std::cout << "  " << name << " = " << format_double(v) << '\n';
  for (const auto& w : o.warnings) std::cout << "  warning: " << w << '\n';
  return o.passed() ? kPass : kFail;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Jordan-algebra cone processes: samplers, chains, diffusions and checks"};
  app.require_subcommand(1);

  CommonFlags check_flags, sample_flags, chain_flags, diffuse_flags, verify_flags;
  bool corrupt = false;
  std::string which;

  auto* check = app.add_subcommand("algebra-check", "Run the identity suite on random draws");
  add_common(check, check_flags);
  check->add_flag("--corrupt-product", corrupt, "Test hook: check a deliberately broken product")->group("");
  auto* sample = app.add_subcommand("sample", "Draw GIG or Wishart samples to CSV");
  add_common(sample, sample_flags);
  auto* chain = app.add_subcommand("chain", "Simulate chain trajectories to CSV");
  add_common(chain, chain_flags);
  auto* diffuse = app.add_subcommand("diffuse", "Simulate diffusion paths to CSV");
  add_common(diffuse, diffuse_flags);
  auto* verify = app.add_subcommand("verify", "Run one named experiment and report");
  add_common(verify, verify_flags);
  std::vector<std::string> names;
  for (Experiment e : all_experiments()) names.push_back(experiment_name(e));
  verify->add_option("which", which, "Experiment name")->required()->check(CLI::IsMember(names));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  const int workers = worker_count_from_env();
  try {
    if (*check) return cmd_algebra_check(resolve(check_flags), corrupt);
    if (*sample) return cmd_sample(resolve(sample_flags), workers);
    if (*chain) return cmd_chain(resolve(chain_flags), workers);
    if (*diffuse) return cmd_diffuse(resolve(diffuse_flags), workers);
    if (*verify) return cmd_verify(resolve(verify_flags), which, workers);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kUsage;
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const DomainError& e) {
    std::cerr << "domain error: " << e.what() << '\n';
    return kUsage;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kFail;
  }
  return kUsage;
}
