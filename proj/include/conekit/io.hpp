#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "json.hpp"

#include "conekit/algebra.hpp"
#include "conekit/chains.hpp"
#include "conekit/diffusion.hpp"
#include "conekit/distributions.hpp"
#include "conekit/stats.hpp"
#include "conekit/verify.hpp"

namespace conekit {

inline constexpr const char* kLibraryVersion = "0.1.0";

using Json = nlohmann::json;

enum class DistributionFamily { Gig, Wishart, InverseWishart };

struct DistributionBlock {
  DistributionFamily family = DistributionFamily::Gig;
  std::optional<ConeElement> a;
  std::optional<ConeElement> b;
  int count = 1;  // draws per replica
  double concentration = 1e4;
};

// Unset n_scale and steps take the defaults of the command that reads them.
struct ChainBlock {
  std::optional<int> n_scale;
  std::optional<int> steps;
  int pair_step = 4;
  std::optional<ConeElement> ell0;
  std::optional<ConeElement> lambda0;
  bool prefer_exact = true;
};

struct DiffusionBlock {
  std::optional<double> T;  // path length; unset takes the command default
  double h = 1e-3;
  double t = 1.0;
  int record_stride = 0;
  double eps = 1e-3;
  bool trapezoid = false;
  std::optional<ConeElement> ell0;
  std::optional<ConeElement> lambda0;
};

struct VerifyBlock {
  double tamper_p = 0.0;
  int permutations = 500;
  bool random_a = false;
};

// Cone elements in a config are either a number c (meaning c e) or the full
// coordinate list in the ambient basis.
struct RunConfig {
  Json raw;  // effective config, echoed into every output
  Algebra algebra = make_algebra(AlgebraKind::SymReal, 3);
  double p = 2.0;
  std::uint64_t seed = 1;
  std::size_t replicas = 1000;
  std::string output_dir = ".";
  McmcConfig mcmc;
  std::optional<DistributionBlock> distribution;
  std::optional<ChainBlock> chain;
  std::optional<DiffusionBlock> diffusion;
  VerifyBlock verify;
};

// Throws ConfigError on unknown keys, wrong types or invalid values.
RunConfig parse_config(const Json& j);
RunConfig load_config(const std::string& path);  // empty path: defaults

// Re-parses after replacing top-level fields, so raw stays the echo of what ran.
RunConfig with_overrides(const RunConfig& cfg, std::optional<std::uint64_t> seed,
                         std::optional<std::size_t> replicas, std::optional<std::string> output_dir);

// FNV-1a over the compact dump of the effective config, as 16 hex digits.
std::string config_hash(const Json& raw);

// Shortest round-trip decimal form.
std::string format_double(double v);

ChainConfig to_chain_config(const RunConfig& cfg);
GroupPathConfig to_path_config(const RunConfig& cfg);
VerifyParams to_verify_params(const RunConfig& cfg, Experiment e, int workers, RngStream& rng);
// Throws ConfigError when the block an experiment reads is missing.
void require_block(const RunConfig& cfg, Experiment e);

// Every output file starts with these fields.
Json output_header(const RunConfig& cfg, const std::string& command);

Json to_json(const TestReport& r);
Json to_json(const VerifyOutcome& o);

// CSV writers; every file starts with a comment line naming the version and
// config hash.
void write_sample_csv(std::ostream& os, const RunConfig& cfg,
                      const std::vector<std::vector<ConeElement>>& per_replica);
void write_trajectory_csv(std::ostream& os, const RunConfig& cfg, const std::vector<Trajectory>& runs);
// g_flat rows hold dim^2 entries; the other rows are padded with empty fields.
void write_path_csv(std::ostream& os, const RunConfig& cfg, const std::vector<std::vector<DiffusionState>>& runs);

}  // namespace conekit
