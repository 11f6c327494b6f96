#include "conekit/io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <initializer_list>
#include <set>

#include "conekit/errors.hpp"
#include "conekit/identities.hpp"
#include "conekit/jordan.hpp"
#include "conekit/rng.hpp"

namespace conekit {

namespace {

void only_keys(const Json& j, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw ConfigError(where + " must be an object");
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!ok.count(it.key())) throw ConfigError("unknown key '" + it.key() + "' in " + where);
  }
}

std::string path(const std::string& where, const char* key) { return where.empty() ? key : where + "." + key; }

double get_number(const Json& j, const std::string& where, const char* key, double fallback) {
  if (!j.contains(key)) return fallback;
  const Json& v = j.at(key);
  if (!v.is_number()) throw ConfigError(path(where, key) + " must be a number");
  return v.get<double>();
}

long long get_int(const Json& j, const std::string& where, const char* key, long long fallback) {
  if (!j.contains(key)) return fallback;
  const Json& v = j.at(key);
  if (!v.is_number_integer()) throw ConfigError(path(where, key) + " must be an integer");
  return v.get<long long>();
}

bool get_bool(const Json& j, const std::string& where, const char* key, bool fallback) {
  if (!j.contains(key)) return fallback;
  const Json& v = j.at(key);
  if (!v.is_boolean()) throw ConfigError(path(where, key) + " must be true or false");
  return v.get<bool>();
}

std::optional<ConeElement> get_element(const Json& j, const std::string& where, const char* key, const Algebra& alg) {
  if (!j.contains(key)) return std::nullopt;
  const Json& v = j.at(key);
  const std::string name = path(where, key);
  ConeElement x = ConeElement::zero(alg);
  if (v.is_number()) {
    x = alg.identity() * v.get<double>();
  } else if (v.is_array()) {
    if (static_cast<int>(v.size()) != alg.dim()) {
      throw ConfigError(name + " needs " + std::to_string(alg.dim()) + " coordinates");
    }
    Eigen::VectorXd c(alg.dim());
    for (int i = 0; i < alg.dim(); ++i) {
      if (!v[i].is_number()) throw ConfigError(name + " coordinates must be numbers");
      c[i] = v[i].get<double>();
    }
    x = ConeElement(alg, c);
  } else {
    throw ConfigError(name + " must be a number or a coordinate list");
  }
  if (!in_cone(x)) throw ConfigError(name + " must lie in the open cone");
  return x;
}

int positive_int(long long v, const std::string& name) {
  if (v < 1 || v > 1000000000LL) throw ConfigError(name + " must be a positive integer");
  return static_cast<int>(v);
}

void append_double(std::string& out, double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  out.append(buf, res.ptr);
}

std::string csv_preamble(const RunConfig& cfg) {
  return std::string("# conekit ") + kLibraryVersion + " config_hash=" + config_hash(cfg.raw) + "\n";
}

void append_coords(std::string& line, const Eigen::VectorXd& c, int width) {
  for (int i = 0; i < width; ++i) {
    line += ',';
    if (i < c.size()) append_double(line, c[i]);
  }
}

std::string coord_header(int width) {
  std::string h;
  for (int i = 0; i < width; ++i) h += ",c" + std::to_string(i);
  return h;
}

}  // namespace

RunConfig parse_config(const Json& j) {
  only_keys(j, "config", {"algebra", "p", "seed", "replicas", "output_dir", "mcmc", "distribution", "chain",
                          "diffusion", "verify"});
  RunConfig cfg;
  cfg.raw = j;
  if (j.contains("algebra")) {
    const Json& a = j.at("algebra");
    only_keys(a, "algebra", {"kind", "size"});
    if (!a.contains("kind") || !a.at("kind").is_string()) throw ConfigError("algebra.kind must be a string");
    const long long size = get_int(a, "algebra", "size", 0);
    cfg.algebra = Algebra::from_name(a.at("kind").get<std::string>(), static_cast<int>(size));
  }
  const Algebra& alg = cfg.algebra;
  cfg.p = get_number(j, "", "p", cfg.p);
  if (j.contains("seed")) {
    if (!j.at("seed").is_number_unsigned() && !(j.at("seed").is_number_integer() && j.at("seed").get<long long>() >= 0)) {
      throw ConfigError("seed must be a nonnegative integer");
    }
    cfg.seed = j.at("seed").get<std::uint64_t>();
  }
  cfg.replicas = static_cast<std::size_t>(positive_int(get_int(j, "", "replicas", 1000), "replicas"));
  if (j.contains("output_dir")) {
    if (!j.at("output_dir").is_string()) throw ConfigError("output_dir must be a string");
    cfg.output_dir = j.at("output_dir").get<std::string>();
  }
  if (j.contains("mcmc")) {
    const Json& m = j.at("mcmc");
    only_keys(m, "mcmc", {"step_size", "burn_in", "thin", "adapt_target", "adapt"});
    cfg.mcmc.step_size = get_number(m, "mcmc", "step_size", cfg.mcmc.step_size);
    cfg.mcmc.burn_in = static_cast<int>(get_int(m, "mcmc", "burn_in", cfg.mcmc.burn_in));
    cfg.mcmc.thin = static_cast<int>(get_int(m, "mcmc", "thin", cfg.mcmc.thin));
    cfg.mcmc.adapt_target = get_number(m, "mcmc", "adapt_target", cfg.mcmc.adapt_target);
    cfg.mcmc.adapt = get_bool(m, "mcmc", "adapt", cfg.mcmc.adapt);
  }
  validate(cfg.mcmc);
  if (j.contains("distribution")) {
    const Json& d = j.at("distribution");
    only_keys(d, "distribution", {"family", "a", "b", "count", "concentration"});
    DistributionBlock b;
    if (d.contains("family")) {
      if (!d.at("family").is_string()) throw ConfigError("distribution.family must be a string");
      const std::string f = d.at("family").get<std::string>();
      if (f == "gig") {
        b.family = DistributionFamily::Gig;
      } else if (f == "wishart") {
        b.family = DistributionFamily::Wishart;
      } else if (f == "inverse_wishart") {
        b.family = DistributionFamily::InverseWishart;
      } else {
        throw ConfigError("unknown distribution.family '" + f + "'");
      }
    }
    b.a = get_element(d, "distribution", "a", alg);
    b.b = get_element(d, "distribution", "b", alg);
    b.count = positive_int(get_int(d, "distribution", "count", b.count), "distribution.count");
    b.concentration = get_number(d, "distribution", "concentration", b.concentration);
    if (!(b.concentration > 0.0)) throw ConfigError("distribution.concentration must be positive");
    cfg.distribution = b;
  }
  if (j.contains("chain")) {
    const Json& c = j.at("chain");
    only_keys(c, "chain", {"n_scale", "steps", "pair_step", "ell0", "lambda0", "prefer_exact"});
    ChainBlock b;
    if (c.contains("n_scale")) b.n_scale = positive_int(get_int(c, "chain", "n_scale", 1), "chain.n_scale");
    if (c.contains("steps")) b.steps = positive_int(get_int(c, "chain", "steps", 1), "chain.steps");
    b.pair_step = positive_int(get_int(c, "chain", "pair_step", b.pair_step), "chain.pair_step");
    b.ell0 = get_element(c, "chain", "ell0", alg);
    b.lambda0 = get_element(c, "chain", "lambda0", alg);
    b.prefer_exact = get_bool(c, "chain", "prefer_exact", b.prefer_exact);
    cfg.chain = b;
  }
  if (j.contains("diffusion")) {
    const Json& d = j.at("diffusion");
    only_keys(d, "diffusion", {"T", "h", "t", "record_stride", "eps", "trapezoid", "ell0", "lambda0"});
    DiffusionBlock b;
    if (d.contains("T")) b.T = get_number(d, "diffusion", "T", 1.0);
    b.h = get_number(d, "diffusion", "h", b.h);
    b.t = get_number(d, "diffusion", "t", b.t);
    b.record_stride = static_cast<int>(get_int(d, "diffusion", "record_stride", b.record_stride));
    b.eps = get_number(d, "diffusion", "eps", b.eps);
    b.trapezoid = get_bool(d, "diffusion", "trapezoid", b.trapezoid);
    b.ell0 = get_element(d, "diffusion", "ell0", alg);
    b.lambda0 = get_element(d, "diffusion", "lambda0", alg);
    if (!(b.h > 0.0) || !(b.T.value_or(b.h) >= b.h) || !(b.t >= b.h)) {
      throw ConfigError("diffusion needs h > 0, T >= h and t >= h");
    }
    cfg.diffusion = b;
  }
  if (j.contains("verify")) {
    const Json& v = j.at("verify");
    only_keys(v, "verify", {"tamper_p", "permutations", "random_a"});
    cfg.verify.tamper_p = get_number(v, "verify", "tamper_p", 0.0);
    cfg.verify.permutations = static_cast<int>(get_int(v, "verify", "permutations", 500));
    if (cfg.verify.permutations < 500) throw ConfigError("verify.permutations must be at least 500");
    cfg.verify.random_a = get_bool(v, "verify", "random_a", false);
  }
  if (cfg.chain) validate(to_chain_config(cfg), alg);
  if (cfg.diffusion) validate(to_path_config(cfg), alg);
  return cfg;
}

RunConfig load_config(const std::string& file) {
  if (file.empty()) return parse_config(Json::object());
  std::ifstream in(file);
  if (!in) throw ConfigError("cannot open config '" + file + "'");
  Json j;
  try {
    j = Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  return parse_config(j);
}

RunConfig with_overrides(const RunConfig& cfg, std::optional<std::uint64_t> seed, std::optional<std::size_t> replicas,
                         std::optional<std::string> output_dir) {
  Json j = cfg.raw.is_null() ? Json::object() : cfg.raw;
  if (seed) j["seed"] = *seed;
  if (replicas) j["replicas"] = *replicas;
  if (output_dir) j["output_dir"] = *output_dir;
  return parse_config(j);
}

std::string config_hash(const Json& raw) {
  const std::string s = raw.dump();
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string format_double(double v) {
  std::string s;
  append_double(s, v);
  return s;
}

ChainConfig to_chain_config(const RunConfig& cfg) {
  ChainConfig c;
  c.p = cfg.p;
  c.mcmc = cfg.mcmc;
  if (cfg.chain) {
    c.n_scale = cfg.chain->n_scale.value_or(c.n_scale);
    c.steps = cfg.chain->steps.value_or(c.steps);
    c.ell0 = cfg.chain->ell0;
    c.lambda0 = cfg.chain->lambda0;
    c.prefer_exact = cfg.chain->prefer_exact;
  }
  return c;
}

GroupPathConfig to_path_config(const RunConfig& cfg) {
  GroupPathConfig g;
  g.p = cfg.p;
  if (cfg.diffusion) {
    g.T = cfg.diffusion->T.value_or(g.T);
    g.h = cfg.diffusion->h;
    g.ell0 = cfg.diffusion->ell0;
    g.lambda0 = cfg.diffusion->lambda0;
    g.eps = cfg.diffusion->eps;
    g.record_stride = cfg.diffusion->record_stride;
    g.trapezoid = cfg.diffusion->trapezoid;
  }
  return g;
}

void require_block(const RunConfig& cfg, Experiment e) {
  const char* need = nullptr;
  bool have = false;
  switch (e) {
    case Experiment::DufresneDiscrete:
    case Experiment::Intertwining:
    case Experiment::ConditionalLaw:
    case Experiment::Stationarity:
      need = "chain";
      have = cfg.chain.has_value();
      break;
    case Experiment::DufresneContinuous:
    case Experiment::ScalingLimit:
    case Experiment::LorentzFactorization:
    case Experiment::Lyapunov:
      need = "diffusion";
      have = cfg.diffusion.has_value();
      break;
    case Experiment::Inversion:
    case Experiment::GaussianLimit:
      need = "distribution";
      have = cfg.distribution.has_value();
      break;
  }
  if (!have) throw ConfigError("verify " + experiment_name(e) + " needs a '" + need + "' block");
}

VerifyParams to_verify_params(const RunConfig& cfg, Experiment e, int workers, RngStream& rng) {
  VerifyParams v;
  v.replicas = cfg.replicas;
  v.mcmc = cfg.mcmc;
  v.permutations = cfg.verify.permutations;
  v.workers = workers;
  v.tamper_p = cfg.verify.tamper_p;
  if (cfg.chain) {
    v.steps = cfg.chain->steps.value_or(v.steps);
    v.chain_step = cfg.chain->pair_step;
    v.n_scale = cfg.chain->n_scale.value_or(v.n_scale);
  }
  if (cfg.diffusion) {
    v.T = cfg.diffusion->T.value_or(v.T);
    v.h = cfg.diffusion->h;
    v.t = cfg.diffusion->t;
  }
  if (cfg.distribution) {
    v.a = cfg.distribution->a;
    v.b = cfg.distribution->b;
    v.concentration = cfg.distribution->concentration;
  }
  if (cfg.verify.random_a && e == Experiment::Intertwining) v.a = random_cone_element(cfg.algebra, rng);
  return v;
}

Json output_header(const RunConfig& cfg, const std::string& command) {
  Json h;
  h["command"] = command;
  h["version"] = kLibraryVersion;
  h["config_hash"] = config_hash(cfg.raw);
  h["config"] = cfg.raw;
  h["seed"] = cfg.seed;
  h["algebra"] = cfg.algebra.label();
  return h;
}

Json to_json(const TestReport& r) {
  Json j;
  j["method"] = method_name(r.method);
  j["statistic"] = r.statistic;
  j["p_value"] = r.p_value;
  j["n_a"] = r.n_a;
  j["n_b"] = r.n_b;
  j["permutations"] = r.permutations;
  j["seed"] = r.seed;
  j["warnings"] = r.warnings;
  return j;
}

Json to_json(const VerifyOutcome& o) {
  Json j;
  j["experiment"] = o.experiment;
  j["passed"] = o.passed();
  Json checks = Json::array();
  for (const Check& c : o.checks) checks.push_back({{"name", c.name}, {"passed", c.passed}, {"detail", c.detail}});
  j["checks"] = checks;
  Json reports = Json::array();
  for (const auto& [name, r] : o.reports) {
    Json x = to_json(r);
    x["name"] = name;
    reports.push_back(x);
  }
  j["reports"] = reports;
  Json est = Json::object();
  for (const auto& [name, v] : o.estimates) est[name] = v;
  j["estimates"] = est;
  j["warnings"] = o.warnings;
  return j;
}

void write_sample_csv(std::ostream& os, const RunConfig& cfg, const std::vector<std::vector<ConeElement>>& per_replica) {
  const int dim = cfg.algebra.dim();
  os << csv_preamble(cfg) << "replica,index" << coord_header(dim) << '\n';
  std::string line;
  for (std::size_t r = 0; r < per_replica.size(); ++r) {
    for (std::size_t i = 0; i < per_replica[r].size(); ++i) {
      line = std::to_string(r) + ',' + std::to_string(i);
      append_coords(line, per_replica[r][i].coords(), dim);
      os << line << '\n';
    }
  }
}

void write_trajectory_csv(std::ostream& os, const RunConfig& cfg, const std::vector<Trajectory>& runs) {
  const int dim = cfg.algebra.dim();
  os << csv_preamble(cfg) << "replica,step,which" << coord_header(dim) << '\n';
  std::string line;
  for (std::size_t r = 0; r < runs.size(); ++r) {
    for (const ChainState& s : runs[r].states) {
      const std::pair<const char*, const ConeElement*> rows[] = {{"L", &s.L}, {"Lambda", &s.Lambda}, {"I", &s.I}};
      for (const auto& [which, x] : rows) {
        line = std::to_string(r) + ',' + std::to_string(s.step) + ',' + which;
        append_coords(line, x->coords(), dim);
        os << line << '\n';
      }
    }
  }
}

void write_path_csv(std::ostream& os, const RunConfig& cfg, const std::vector<std::vector<DiffusionState>>& runs) {
  const int dim = cfg.algebra.dim();
  const int width = dim * dim;
  os << csv_preamble(cfg) << "replica,t,which" << coord_header(width) << '\n';
  std::string line;
  for (std::size_t r = 0; r < runs.size(); ++r) {
    for (const DiffusionState& s : runs[r]) {
      const std::string head = std::to_string(r) + ',' + format_double(s.t) + ',';
      const Eigen::MatrixXd rm = s.g_op.matrix().transpose();  // column-major storage of the transpose is row-major
      line = head + "g_flat";
      append_coords(line, Eigen::Map<const Eigen::VectorXd>(rm.data(), width), width);
      os << line << '\n';
      const std::pair<const char*, const ConeElement*> rows[] = {
          {"iota", &s.iota}, {"ell", &s.ell}, {"lambda", &s.lambda}, {"y", &s.g_adj_inv_e}};
      for (const auto& [which, x] : rows) {
        line = head + which;
        append_coords(line, x->coords(), width);
        os << line << '\n';
      }
    }
  }
}

}  // namespace conekit
