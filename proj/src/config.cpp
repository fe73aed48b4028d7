#include "stinla/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <charconv>
#include <cmath>
#include <filesystem>
#include <map>
#include <set>
#include <sstream>

namespace stinla {

namespace {

namespace pt = boost::property_tree;
namespace fs = std::filesystem;

const std::map<std::string, std::set<std::string>>& known_keys() {
  static const std::map<std::string, std::set<std::string>> keys{
      {"model",
       {"n_v", "n_s", "n_t", "n_r", "m", "length", "dt", "fixed_effect_precision", "synthetic", "calibrate_gamma_e",
        "gamma_e", "c", "g", "m0", "m1", "m2", "design", "observations"}},
      {"theta", {"true", "initial", "prior_mean", "prior_sd"}},
      {"optimizer", {"h", "h2", "gtol", "ftol", "max_iter", "max_step"}},
      {"parallel", {"workers", "partitions", "lb"}},
      {"benchmark", {"partitions", "lb", "n", "b", "a", "repeats"}},
      {"validate", {"instances"}},
      {"output", {"dir"}},
      {"run", {"seed"}},
  };
  return keys;
}

std::string trim(std::string s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::string clean_value(std::string v) {
  bool quoted = false;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (v[i] == '"') quoted = !quoted;
    if (v[i] == '#' && !quoted) {
      v.resize(i);
      break;
    }
  }
  v = trim(v);
  if (v.size() >= 2 && v.front() == '[' && v.back() == ']') v = trim(v.substr(1, v.size() - 2));
  if (v.size() >= 2 && v.front() == '"' && v.back() == '"') v = v.substr(1, v.size() - 2);
  return v;
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = clean_value(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

double parse_double(const std::string& key, const std::string& v) {
  double x = 0.0;
  const auto* end = v.data() + v.size();
  const auto r = std::from_chars(v.data(), end, x);
  if (r.ec != std::errc() || r.ptr != end) throw ConfigError(key + ": '" + v + "' is not a number");
  return x;
}

Index parse_index(const std::string& key, const std::string& v) {
  long long x = 0;
  const auto* end = v.data() + v.size();
  const auto r = std::from_chars(v.data(), end, x);
  if (r.ec != std::errc() || r.ptr != end) throw ConfigError(key + ": '" + v + "' is not an integer");
  return Index(x);
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError(key + ": '" + v + "' is not a boolean");
}

Vector parse_vector(const std::string& key, const std::string& v) {
  const auto items = split_list(v);
  Vector out(Index(items.size()));
  for (std::size_t i = 0; i < items.size(); ++i) out[Index(i)] = parse_double(key, items[i]);
  return out;
}

class Reader {
public:
  explicit Reader(const pt::ptree& tree) : tree_(tree) {}

  std::optional<std::string> get(const std::string& section, const std::string& key) const {
    const auto sec = tree_.get_child_optional(section);
    if (!sec) return std::nullopt;
    const auto val = sec->get_optional<std::string>(key);
    if (!val) return std::nullopt;
    return clean_value(*val);
  }

  void real(const std::string& s, const std::string& k, double& out) const {
    if (auto v = get(s, k)) out = parse_double(s + "." + k, *v);
  }
  void integer(const std::string& s, const std::string& k, Index& out) const {
    if (auto v = get(s, k)) out = parse_index(s + "." + k, *v);
  }
  void boolean(const std::string& s, const std::string& k, bool& out) const {
    if (auto v = get(s, k)) out = parse_bool(s + "." + k, *v);
  }
  void text(const std::string& s, const std::string& k, std::string& out) const {
    if (auto v = get(s, k)) out = *v;
  }
  void vector(const std::string& s, const std::string& k, Vector& out) const {
    if (auto v = get(s, k)) out = parse_vector(s + "." + k, *v);
  }
  void strings(const std::string& s, const std::string& k, std::vector<std::string>& out) const {
    if (auto v = get(s, k)) out = split_list(*v);
  }

private:
  const pt::ptree& tree_;
};

void check_keys(const pt::ptree& tree) {
  const auto& keys = known_keys();
  for (const auto& [section, child] : tree) {
    const auto it = keys.find(section);
    if (it == keys.end()) throw ConfigError("unknown config section [" + section + "]");
    if (child.empty() && !child.data().empty()) throw ConfigError("key '" + section + "' outside of a section");
    for (const auto& [key, value] : child) {
      (void)value;
      if (!it->second.count(key)) throw ConfigError("unknown key '" + key + "' in [" + section + "]");
    }
  }
}

bool all_finite(const Vector& v) { return v.allFinite(); }

}  // namespace

std::string RunConfig::resolve(const std::string& path) const {
  const fs::path p(path);
  if (p.is_absolute()) return path;
  return (fs::path(base_dir) / p).lexically_normal().string();
}

void RunConfig::validate() const {
  if (n_v < 1) throw ConfigError("model.n_v must be at least 1");
  if (n_s < 1) throw ConfigError("model.n_s must be at least 1");
  if (n_t < 1) throw ConfigError("model.n_t must be at least 1");
  if (n_r < 0) throw ConfigError("model.n_r must be non-negative");
  if (synthetic && m < 1) throw ConfigError("model.m must be at least 1");
  if (!(length > 0.0) || !(dt > 0.0)) throw ConfigError("model.length and model.dt must be positive");
  if (!(fixed_effect_precision > 0.0)) throw ConfigError("model.fixed_effect_precision must be positive");
  if (!gamma_e.empty()) {
    if (n_v == 1) throw ConfigError("model.gamma_e applies to coregional models; use theta for n_v = 1");
    if (Index(gamma_e.size()) != n_v) throw ConfigError("model.gamma_e needs one entry per process");
    for (double g : gamma_e)
      if (!(g > 0.0) || !std::isfinite(g)) throw ConfigError("model.gamma_e entries must be positive");
  }
  if (calibrate_gamma_e && n_v == 1) throw ConfigError("model.calibrate_gamma_e applies to coregional models");
  if (calibrate_gamma_e && !gamma_e.empty()) throw ConfigError("model.gamma_e and model.calibrate_gamma_e conflict");

  const Index d = dim_theta();
  const auto check_theta = [d](const Vector& v, const std::string& name) {
    if (v.size() == 0) return;
    if (v.size() != d)
      throw ConfigError(name + " has " + std::to_string(v.size()) + " entries, expected dim(theta) = " +
                        std::to_string(d));
    if (!all_finite(v)) throw ConfigError(name + " must be finite");
  };
  check_theta(theta_true, "theta.true");
  check_theta(theta_initial, "theta.initial");
  check_theta(prior_mean, "theta.prior_mean");
  if (prior_sd.size() != 1 && prior_sd.size() != d)
    throw ConfigError("theta.prior_sd needs one value or dim(theta) values");
  for (Index i = 0; i < prior_sd.size(); ++i)
    if (!(prior_sd[i] > 0.0) || !std::isfinite(prior_sd[i])) throw ConfigError("theta.prior_sd must be positive");
  if (synthetic && theta_true.size() == 0) throw ConfigError("synthetic models need theta.true");

  if (!(optimizer.h > 0.0) || !(optimizer.h2 > 0.0)) throw ConfigError("optimizer.h and optimizer.h2 must be positive");
  if (!(optimizer.gtol > 0.0)) throw ConfigError("optimizer.gtol must be positive");
  if (!(optimizer.ftol >= 0.0)) throw ConfigError("optimizer.ftol must be non-negative");
  if (optimizer.max_iter < 1) throw ConfigError("optimizer.max_iter must be at least 1");
  if (!(optimizer.max_step >= 0.0)) throw ConfigError("optimizer.max_step must be non-negative");

  if (workers < 1) throw ConfigError("parallel.workers must be at least 1");
  if (partitions < 1) throw ConfigError("parallel.partitions must be at least 1");
  if (!(lb >= 1.0) || !std::isfinite(lb)) throw ConfigError("parallel.lb must be at least 1");
  if (partitions > 1 && n_t < 2 * partitions)
    throw ConfigError("planning error: n_t = " + std::to_string(n_t) + " time steps cannot be split into " +
                      std::to_string(partitions) + " partitions (need n_t >= 2P = " +
                      std::to_string(2 * partitions) + ")");

  if (bench_partitions.empty() || bench_lb.empty()) throw ConfigError("benchmark sweeps must not be empty");
  for (Index p : bench_partitions)
    if (p < 1) throw ConfigError("benchmark.partitions entries must be at least 1");
  for (double l : bench_lb)
    if (!(l >= 1.0)) throw ConfigError("benchmark.lb entries must be at least 1");
  if (bench_n < 1 || bench_b < 1 || bench_a < 0 || bench_repeats < 1)
    throw ConfigError("benchmark dimensions must be positive");
  if (validate_instances < 1) throw ConfigError("validate.instances must be at least 1");
  if (out_dir.empty()) throw ConfigError("output.dir must not be empty");

  if (!synthetic) {
    const auto need_file = [this](const std::string& p, const std::string& key) {
      if (p.empty()) throw ConfigError("model." + key + " is required when synthetic = false");
      if (!fs::exists(resolve(p))) throw ConfigError("model." + key + ": file not found: " + resolve(p));
    };
    need_file(c_path, "c");
    need_file(g_path, "g");
    need_file(m0_path, "m0");
    need_file(m1_path, "m1");
    need_file(m2_path, "m2");
    if (Index(design_paths.size()) != n_v || Index(observation_paths.size()) != n_v)
      throw ConfigError("model.design and model.observations need one file per process");
    for (const auto& p : design_paths) need_file(p, "design");
    for (const auto& p : observation_paths) need_file(p, "observations");
  }
}

RunConfig load_config(const std::string& path) {
  pt::ptree tree;
  try {
    pt::read_ini(path, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError("cannot read config: " + std::string(e.what()));
  }
  check_keys(tree);
  const Reader r(tree);

  RunConfig cfg;
  cfg.base_dir = fs::path(path).parent_path().string();
  if (cfg.base_dir.empty()) cfg.base_dir = ".";

  r.integer("model", "n_v", cfg.n_v);
  r.integer("model", "n_s", cfg.n_s);
  r.integer("model", "n_t", cfg.n_t);
  r.integer("model", "n_r", cfg.n_r);
  r.integer("model", "m", cfg.m);
  r.real("model", "length", cfg.length);
  r.real("model", "dt", cfg.dt);
  r.real("model", "fixed_effect_precision", cfg.fixed_effect_precision);
  r.boolean("model", "synthetic", cfg.synthetic);
  r.boolean("model", "calibrate_gamma_e", cfg.calibrate_gamma_e);
  Vector ge;
  r.vector("model", "gamma_e", ge);
  cfg.gamma_e.assign(ge.data(), ge.data() + ge.size());
  r.text("model", "c", cfg.c_path);
  r.text("model", "g", cfg.g_path);
  r.text("model", "m0", cfg.m0_path);
  r.text("model", "m1", cfg.m1_path);
  r.text("model", "m2", cfg.m2_path);
  r.strings("model", "design", cfg.design_paths);
  r.strings("model", "observations", cfg.observation_paths);

  r.vector("theta", "true", cfg.theta_true);
  r.vector("theta", "initial", cfg.theta_initial);
  r.vector("theta", "prior_mean", cfg.prior_mean);
  cfg.prior_sd = Vector::Constant(1, 10.0);
  r.vector("theta", "prior_sd", cfg.prior_sd);

  r.real("optimizer", "h", cfg.optimizer.h);
  r.real("optimizer", "h2", cfg.optimizer.h2);
  r.real("optimizer", "gtol", cfg.optimizer.gtol);
  r.real("optimizer", "ftol", cfg.optimizer.ftol);
  r.integer("optimizer", "max_iter", cfg.optimizer.max_iter);
  r.real("optimizer", "max_step", cfg.optimizer.max_step);

  r.integer("parallel", "workers", cfg.workers);
  r.integer("parallel", "partitions", cfg.partitions);
  r.real("parallel", "lb", cfg.lb);

  if (auto v = r.get("benchmark", "partitions")) {
    cfg.bench_partitions.clear();
    for (const auto& s : split_list(*v)) cfg.bench_partitions.push_back(parse_index("benchmark.partitions", s));
  }
  if (auto v = r.get("benchmark", "lb")) {
    const Vector l = parse_vector("benchmark.lb", *v);
    cfg.bench_lb.assign(l.data(), l.data() + l.size());
  }
  r.integer("benchmark", "n", cfg.bench_n);
  r.integer("benchmark", "b", cfg.bench_b);
  r.integer("benchmark", "a", cfg.bench_a);
  r.integer("benchmark", "repeats", cfg.bench_repeats);

  r.integer("validate", "instances", cfg.validate_instances);
  r.text("output", "dir", cfg.out_dir);
  if (auto v = r.get("run", "seed")) {
    const Index s = parse_index("run.seed", *v);
    if (s < 0) throw ConfigError("run.seed must be non-negative");
    cfg.seed = std::uint64_t(s);
  }
  return cfg;
}

void apply_overrides(RunConfig& cfg, const ConfigOverrides& o) {
  if (o.seed) cfg.seed = *o.seed;
  if (o.workers) cfg.workers = *o.workers;
  if (o.partitions) cfg.partitions = *o.partitions;
  if (o.lb) cfg.lb = *o.lb;
  if (o.out_dir) cfg.out_dir = *o.out_dir;
}

SynthSettings synth_settings(const RunConfig& cfg) {
  SynthSettings s;
  s.n_v = cfg.n_v;
  s.n_s = cfg.n_s;
  s.n_t = cfg.n_t;
  s.n_r = cfg.n_r;
  s.m = cfg.m;
  s.length = cfg.length;
  s.dt = cfg.dt;
  s.fixed_effect_precision = cfg.fixed_effect_precision;
  s.gamma_e = cfg.gamma_e;
  return s;
}

namespace {

std::vector<double> calibrated_gamma_e(const ModelSpec& spec, const Vector& theta) {
  const HyperParams hp{spec.n_v, theta};
  std::vector<double> out;
  for (Index i = 0; i < spec.n_v; ++i) {
    const UnivariateHypers h = hp.process_hypers(i, 1.0);
    out.push_back(unit_variance_gamma_e(spec.spatial[std::size_t(i)], spec.temporal[std::size_t(i)], h));
  }
  return out;
}

}  // namespace

LoadedModel load_model(const RunConfig& cfg) {
  cfg.validate();
  LoadedModel out;
  const Index d = cfg.dim_theta();
  out.theta_initial = cfg.theta_initial.size() ? cfg.theta_initial
                      : cfg.theta_true.size() ? cfg.theta_true
                                              : Vector(Vector::Zero(d));
  out.theta_true = cfg.theta_true;

  if (cfg.synthetic) {
    SynthSettings s = synth_settings(cfg);
    if (cfg.calibrate_gamma_e) {
      ModelSpec mesh;
      mesh.n_v = cfg.n_v;
      for (Index i = 0; i < cfg.n_v; ++i) {
        mesh.spatial.push_back(path_graph_spatial(cfg.n_s, cfg.length));
        mesh.temporal.push_back(uniform_temporal(cfg.n_t, cfg.dt));
      }
      s.gamma_e = calibrated_gamma_e(mesh, out.theta_initial);
    }
    SyntheticData data = generate_synthetic(s, cfg.theta_true, cfg.seed);
    out.spec = std::move(data.spec);
    out.x_true = std::move(data.x_true);
  } else {
    ModelSpec& spec = out.spec;
    spec.n_v = cfg.n_v;
    spec.n_s = cfg.n_s;
    spec.n_t = cfg.n_t;
    spec.n_r = cfg.n_r;
    spec.fixed_effect_precision = cfg.fixed_effect_precision;
    SpatialDiscretization sp{read_matrix_market(cfg.resolve(cfg.c_path)), read_matrix_market(cfg.resolve(cfg.g_path))};
    TemporalDiscretization tm{read_matrix_market(cfg.resolve(cfg.m0_path)),
                              read_matrix_market(cfg.resolve(cfg.m1_path)),
                              read_matrix_market(cfg.resolve(cfg.m2_path))};
    if (sp.size() != cfg.n_s || tm.size() != cfg.n_t)
      throw ConfigError("discretization files do not match model.n_s / model.n_t");
    for (Index i = 0; i < cfg.n_v; ++i) {
      spec.spatial.push_back(sp);
      spec.temporal.push_back(tm);
      SparseMatrix a = read_matrix_market(cfg.resolve(cfg.design_paths[std::size_t(i)]));
      Vector y = read_vector_csv(cfg.resolve(cfg.observation_paths[std::size_t(i)]));
      if (a.cols() != spec.latent_size())
        throw ConfigError("design " + std::to_string(i) + " has " + std::to_string(a.cols()) +
                          " columns, expected n_s n_t + n_r = " + std::to_string(spec.latent_size()));
      if (a.rows() != y.size())
        throw ConfigError("design " + std::to_string(i) + " and observations " + std::to_string(i) +
                          " disagree on the number of rows");
      spec.design.push_back(std::move(a));
      spec.observations.push_back(std::move(y));
    }
    spec.gamma_e = cfg.calibrate_gamma_e ? calibrated_gamma_e(spec, out.theta_initial) : cfg.gamma_e;
    try {
      spec.validate();
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("model inputs: ") + e.what());
    }
  }

  const Vector mean = cfg.prior_mean.size() ? cfg.prior_mean : out.theta_initial;
  const Vector sd = cfg.prior_sd.size() == 1 ? Vector(Vector::Constant(d, cfg.prior_sd[0])) : cfg.prior_sd;
  out.prior = ThetaPrior{mean, sd};
  return out;
}

LayerAllocation run_allocation(const RunConfig& cfg) {
  return allocate(cfg.workers, cfg.dim_theta(), cfg.partitions <= 1, cfg.partitions);
}

SolverLayout run_layout(const RunConfig& cfg, const LayerAllocation& alloc) {
  SolverLayout l;
  l.partitions = cfg.partitions;
  l.lb = cfg.lb;
  l.s3_workers = std::min<Index>(alloc.g3, cfg.partitions);
  l.s2_width = alloc.g2;
  return l;
}

}  // namespace stinla
