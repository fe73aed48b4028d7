#pragma once

#include "stinla/sparse.hpp"

#include <vector>

namespace stinla {

/// Lumped (diagonal, positive) mass matrix C and symmetric PSD stiffness G.
struct SpatialDiscretization {
  SparseMatrix c;
  SparseMatrix g;

  Index size() const { return c.rows(); }
  void validate() const;
};

/// Temporal mass M0 (diagonal), first-order coupling M1 and second-difference
/// M2, all with bandwidth at most one.
struct TemporalDiscretization {
  SparseMatrix m0;
  SparseMatrix m1;
  SparseMatrix m2;

  Index size() const { return m0.rows(); }
  void validate() const;
};

/// Hyperparameters of one spatio-temporal process, in natural scale.
struct UnivariateHypers {
  double gamma_s = 1.0;
  double gamma_t = 1.0;
  double gamma_e = 1.0;
  double tau_y = 1.0;

  void validate() const;
};

struct ModelSpec {
  Index n_v = 1;
  Index n_s = 0;
  Index n_t = 0;
  Index n_r = 0;

  /// One entry per process.
  std::vector<SpatialDiscretization> spatial;
  std::vector<TemporalDiscretization> temporal;
  /// A_i, m_i x (n_s n_t + n_r), columns in time-major order t * n_s + s,
  /// followed by the n_r fixed effects.
  std::vector<SparseMatrix> design;
  std::vector<Vector> observations;

  double fixed_effect_precision = 1e-3;
  /// Variance scale gamma_e per process for coregional models (where it is
  /// not a hyperparameter). Empty means 1 for every process.
  std::vector<double> gamma_e;

  Index latent_size() const { return n_s * n_t + n_r; }
  Index observation_count() const;
  double process_gamma_e(Index process) const;
  void validate() const;
};

Index joint_dimension(Index n_v, Index n_s, Index n_t, Index n_r);
Index joint_dimension(const ModelSpec& spec);

/// Q_p^i = blkdiag(gamma_e (M0 x q3 + gamma_t M1 x q2 + gamma_t^2 M2 x q1), tau_f I)
/// with q1 = gamma_s^2 C + G, q2 = q1 C^{-1} q1, q3 = q1 C^{-1} q2.
SparseMatrix build_univariate_prior(const ModelSpec& spec, const UnivariateHypers& h, Index process);

/// Spatio-temporal block only (no fixed effects).
SparseMatrix build_spatiotemporal_precision(const SpatialDiscretization& s, const TemporalDiscretization& t,
                                            const UnivariateHypers& h);

/// Q_c = Q_p + A^T diag(d) A.
SparseMatrix build_conditional_precision(const SparseMatrix& qp, const SparseMatrix& a, const Vector& d);

/// Uniform 1D mesh on [0, length]: lumped mass with halved end nodes and the
/// path-graph stiffness scaled by 1/h.
SpatialDiscretization path_graph_spatial(Index n_s, double length = 1.0);

/// Uniform time grid: M0 = dt diag(1/2, 1, ..., 1, 1/2), M1 = tridiag(1/2, 0, 1/2),
/// M2 = (1/dt) path Laplacian (end diagonal entries 1).
TemporalDiscretization uniform_temporal(Index n_t, double dt = 1.0);

}  // namespace stinla
