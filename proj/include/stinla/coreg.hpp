#pragma once

#include "stinla/bta.hpp"
#include "stinla/sparse.hpp"

#include <span>
#include <vector>

namespace stinla {

/// Linear model of coregionalization. The mixing matrix is
/// Lambda = L diag(sigma), with L the inverse of the unit lower triangular
/// matrix  M(i, j) = -lambda_{k(i, j)}  (i > j). For three processes this
/// reproduces
///   [ s1            0      0  ]
///   [ l1 s1         s2     0  ]
///   [ (l3 + l1 l2) s1  l2 s2  s3 ].
/// Couplings are indexed diagonal by diagonal: first sub-diagonal top to
/// bottom, then the second sub-diagonal, and so on.
struct Coregionalization {
  Vector sigma;
  Vector lambda;

  Index n_v() const { return sigma.size(); }
  void validate() const;

  /// Lambda^{-1} = diag(1/sigma) M, with M unit lower triangular.
  Matrix inverse_mixing() const;
  /// Lambda (dense n_v x n_v), by forward substitution on M.
  Matrix mixing() const;
};

/// Position of coupling (row, col), row > col, inside the lambda vector.
Index lambda_index(Index row, Index col, Index n_v);
Index lambda_count(Index n_v);

/// Q^{n_v} = Lambda~^{-T} blkdiag(Q^1, ..., Q^{n_v}) Lambda~^{-1}, where
/// Lambda~ carries the mixing coefficients times the latent-size identity.
/// Block (i, j) keeps the union of the patterns of Q^k, k >= max(i, j), so
/// the structural pattern is independent of sigma and lambda.
SparseMatrix assemble_joint_precision(std::span<const SparseMatrix> q, const Coregionalization& coreg);

/// Reordering from variable-major to BTA order plus a per-nonzero scatter
/// into the block-dense workspace.
struct PermutationMap {
  Index n_v = 0, n_s = 0, n_t = 0, n_r = 0;
  /// forward[old] = new
  std::vector<Index> forward;
  /// One entry per stored value of the bound sparse pattern: flat offset into
  /// BTAMatrix::values(), or -1 for upper block-triangle mirrors.
  std::vector<std::int64_t> data_map;
  std::vector<int> pattern_outer;
  std::vector<int> pattern_inner;

  Index n() const { return n_t; }
  Index b() const { return n_v * n_s; }
  Index a() const { return n_v * n_r; }
  Index size() const { return n() * b() + a(); }
  bool bound() const { return !pattern_outer.empty(); }
};

PermutationMap build_permutation(Index n_v, Index n_s, Index n_t, Index n_r);

/// Identity ordering for matrices that are already in BTA order.
PermutationMap identity_permutation(Index n, Index b, Index a);

/// Precomputes data_map for the pattern of `q` (given in the original
/// ordering). Throws DimensionError for nonzeros outside the BTA envelope.
void bind_pattern(PermutationMap& map, const SparseMatrix& q);

/// Symmetric permutation P Q P^T.
SparseMatrix permute(const SparseMatrix& q, const PermutationMap& map);
Vector to_bta_order(const Vector& x, const PermutationMap& map);
Vector from_bta_order(const Vector& x, const PermutationMap& map);

/// Scatters the values of `q` into `ws` through the bound data_map, touching
/// only pattern positions (O(nnz)). `ws` must be freshly allocated or have
/// been filled through the same map before; it is reallocated when its
/// dimensions do not match.
void map_to_bta(const SparseMatrix& q, const PermutationMap& map, BTAMatrix& ws);
BTAMatrix map_to_bta(const SparseMatrix& q, const PermutationMap& map);

}  // namespace stinla
