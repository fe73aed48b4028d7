#pragma once

#include "stinla/inla.hpp"
#include "stinla/synth.hpp"

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace stinla {

class ConfigError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// One run of the command-line tool. Read from a sectioned key = value file:
///
///   [model]     n_v n_s n_t n_r m length dt fixed_effect_precision
///               synthetic calibrate_gamma_e gamma_e
///               c g m0 m1 m2 design observations   (file inputs)
///   [theta]     true initial prior_mean prior_sd
///   [optimizer] h h2 gtol ftol max_iter max_step
///   [parallel]  workers partitions lb
///   [benchmark] partitions lb n b a repeats
///   [validate]  instances
///   [output]    dir
///   [run]       seed
///
/// Lists are comma separated. Relative file paths resolve against the
/// directory of the config file.
struct RunConfig {
  Index n_v = 1;
  Index n_s = 20;
  Index n_t = 10;
  Index n_r = 1;
  Index m = 300;
  double length = 1.0;
  double dt = 1.0;
  double fixed_effect_precision = 1e-3;
  bool synthetic = true;
  bool calibrate_gamma_e = false;
  std::vector<double> gamma_e;

  std::string c_path, g_path, m0_path, m1_path, m2_path;
  std::vector<std::string> design_paths;
  std::vector<std::string> observation_paths;

  Vector theta_true;
  Vector theta_initial;
  Vector prior_mean;
  Vector prior_sd;

  OptimizerOptions optimizer;

  Index workers = 1;
  Index partitions = 1;
  double lb = 1.0;

  std::vector<Index> bench_partitions{1, 2, 3, 4};
  std::vector<double> bench_lb{1.0, 1.6};
  Index bench_n = 64;
  Index bench_b = 4;
  Index bench_a = 4;
  Index bench_repeats = 3;

  Index validate_instances = 20;

  std::string out_dir = "out";
  std::uint64_t seed = 1;

  std::string base_dir = ".";

  Index dim_theta() const { return HyperParams::dimension(n_v); }
  std::string resolve(const std::string& path) const;
  /// Dimension, range and file checks; throws ConfigError.
  void validate() const;
};

RunConfig load_config(const std::string& path);

/// Command-line values that take precedence over the file.
struct ConfigOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<Index> workers;
  std::optional<Index> partitions;
  std::optional<double> lb;
  std::optional<std::string> out_dir;
};

void apply_overrides(RunConfig& cfg, const ConfigOverrides& o);

SynthSettings synth_settings(const RunConfig& cfg);

struct LoadedModel {
  ModelSpec spec;
  /// Latent field the synthetic data were drawn from (empty for file inputs).
  Vector x_true;
  Vector theta_true;
  Vector theta_initial;
  ThetaPrior prior;
};

/// Builds the model from files or the synthetic generator. With
/// calibrate_gamma_e, a coregional model gets per-process gamma_e fixed so the
/// prior marginal variance at the initial theta averages one.
LoadedModel load_model(const RunConfig& cfg);

/// Worker allocation and solver layout for the configured W and P.
LayerAllocation run_allocation(const RunConfig& cfg);
SolverLayout run_layout(const RunConfig& cfg, const LayerAllocation& alloc);

}  // namespace stinla
