#pragma once

#include "stinla/bta_dist.hpp"
#include "stinla/config.hpp"
#include "stinla/inla.hpp"

#include <string>
#include <vector>

namespace stinla {

/// Writes summary.json, latent.csv, trace.csv (deterministic) and
/// timings.csv (wall clock) into `dir`. `partial` marks outputs of a run that
/// did not converge.
void write_fit_outputs(const std::string& dir, const RunConfig& cfg, const Model& model,
                       const PosteriorSummary& summary, double seconds);

/// Columns index, process, time, space, mean, sd; fixed effects carry
/// time = -1 and their fixed-effect index in the space column.
void write_latent_csv(const std::string& path, const ModelSpec& spec, const Vector& mean, const Vector& sd);
Vector read_latent_mean(const std::string& path);

void write_prediction_csv(const std::string& path, const Vector& pred);

struct BenchmarkRow {
  std::string routine;
  Index partitions = 1;
  double lb = 1.0;
  Index n = 0, b = 0, a = 0;
  std::string phase;
  double seconds = 0.0;
  double flops = 0.0;
};

void write_benchmark_csv(const std::string& path, const std::vector<BenchmarkRow>& rows);

/// Formats a double with 17 significant digits.
std::string format_real(double x);

}  // namespace stinla
