#pragma once

// Dense reference implementations used by the test suite and the validate
// command. Everything here works on full matrices with textbook algorithms
// and shares no numerical code with the structured solvers.

#include "stinla/bta.hpp"
#include "stinla/coreg.hpp"
#include "stinla/inla.hpp"
#include "stinla/model.hpp"

#include <random>

namespace stinla::oracle {

/// Random symmetric matrix on the full BTA pattern made strictly diagonally
/// dominant (hence SPD). `zero_arrow` leaves the arrow blocks empty.
BTAMatrix random_spd_bta(Index n, Index b, Index a, std::mt19937_64& rng, bool zero_arrow = false);

Matrix dense_cholesky(const Matrix& m);
double dense_logdet(const Matrix& m);
Matrix dense_inverse(const Matrix& m);
double rel_error(const Matrix& got, const Matrix& want);
double max_rel_entry_error(const Matrix& got, const Matrix& want);

Matrix dense_kron(const Matrix& a, const Matrix& b);
/// gamma_e (M0 x q3 + gamma_t M1 x q2 + gamma_t^2 M2 x q1) with dense products.
Matrix dense_spatiotemporal_precision(const SpatialDiscretization& s, const TemporalDiscretization& t,
                                      const UnivariateHypers& h);

/// Closed-form mixing matrix for up to three processes.
Matrix mixing_matrix(const Vector& sigma, const Vector& lambda);
/// Lambda~^{-T} blkdiag(Q^k) Lambda~^{-1} with Lambda~ = Lambda kron I.
Matrix dense_joint_precision(const std::vector<Matrix>& q, const Matrix& lambda);
/// Lambda~ blkdiag(Sigma_k) Lambda~^T.
Matrix dense_joint_covariance(const std::vector<Matrix>& sigma, const Matrix& lambda);
/// The explicit three-process block formula, block by block.
Matrix three_process_blocks(const Matrix& q1, const Matrix& q2, const Matrix& q3, const Vector& sigma,
                            const Vector& lambda);

/// Permutation matrix P with (P x)[forward[i]] = x[i].
Matrix permutation_matrix(const std::vector<Index>& forward);

/// Small random model built from the 1D generators with random mesh
/// scales, random interpolation designs and random observations.
ModelSpec random_model(Index n_v, Index n_s, Index n_t, Index n_r, Index m, std::mt19937_64& rng);
Vector random_theta(Index n_v, std::mt19937_64& rng);

struct DenseObjective {
  double f = 0.0;
  Vector mu;
  Vector sd;
  Matrix qp;
  Matrix qc;
};

/// Objective, conditional mean and posterior sds evaluated with dense
/// linear algebra and an independent decoding of theta.
DenseObjective dense_objective(const ModelSpec& spec, const Vector& theta, const ThetaPrior& prior);

/// Same three-point / four-point stencil as fd_hessian, on -f of the dense
/// objective, evaluated sequentially.
Matrix dense_fd_hessian(const ModelSpec& spec, const Vector& theta, const ThetaPrior& prior, double h2);

}  // namespace stinla::oracle
