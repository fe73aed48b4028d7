#pragma once

#include "stinla/bta.hpp"
#include "stinla/model.hpp"

#include <cstdint>
#include <random>

namespace stinla {

struct SynthSettings {
  Index n_v = 1;
  Index n_s = 20;
  Index n_t = 10;
  Index n_r = 1;
  /// Observations per process.
  Index m = 300;
  double length = 1.0;
  double dt = 1.0;
  double fixed_effect_precision = 1e-3;
  /// Per-process gamma_e for coregional models (empty: all 1).
  std::vector<double> gamma_e;

  void validate() const;
};

struct SyntheticData {
  ModelSpec spec;
  /// Latent draw used to simulate y, variable-major.
  Vector x_true;
};

/// Random observation design: every row picks a time step and a point of
/// the 1D mesh, interpolates linearly between the two neighbouring nodes,
/// and carries an intercept plus standard normal covariates for the fixed
/// effects.
SparseMatrix interpolation_design(Index n_s, Index n_t, Index n_r, Index m, std::mt19937_64& rng);

/// x ~ N(0, Q_p(theta_true)^{-1}) by back substitution with the BTA Cholesky
/// factor, then y_i = A_i x_i + N(0, 1 / tau_i).
SyntheticData generate_synthetic(const SynthSettings& s, const Vector& theta_true, std::uint64_t seed);

/// Standalone draw from N(0, Q^{-1}) for a matrix in BTA order.
Vector sample_gmrf(const BTAMatrix& q, std::mt19937_64& rng);

}  // namespace stinla
