#pragma once

#include "stinla/kernels.hpp"
#include "stinla/sparse.hpp"

#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace stinla {

/// Block-dense storage of a symmetric block-tridiagonal-arrowhead matrix of
/// size N = n*b + a. Only the lower block triangle is held:
///   diag(i)  : b x b, i in [0, n)       (full symmetric block)
///   lower(i) : b x b, i in [0, n-1)     (block row i+1, block column i)
///   arrow(i) : a x b, i in [0, n)       (arrow rows, block column i)
///   tip()    : a x a                    (full symmetric block)
/// All blocks live in one contiguous column-major value buffer in the order
/// diag, lower, arrow, tip.
class BTAMatrix {
public:
  using BlockMap = Eigen::Map<Matrix>;
  using ConstBlockMap = Eigen::Map<const Matrix>;

  BTAMatrix() = default;
  BTAMatrix(Index n, Index b, Index a);

  Index n() const { return n_; }
  Index b() const { return b_; }
  Index a() const { return a_; }
  Index size() const { return n_ * b_ + a_; }

  BlockMap diag(Index i) { return {data_.data() + diag_offset(i), b_, b_}; }
  ConstBlockMap diag(Index i) const { return {data_.data() + diag_offset(i), b_, b_}; }
  BlockMap lower(Index i) { return {data_.data() + lower_offset(i), b_, b_}; }
  ConstBlockMap lower(Index i) const { return {data_.data() + lower_offset(i), b_, b_}; }
  BlockMap arrow(Index i) { return {data_.data() + arrow_offset(i), a_, b_}; }
  ConstBlockMap arrow(Index i) const { return {data_.data() + arrow_offset(i), a_, b_}; }
  BlockMap tip() { return {data_.data() + tip_offset(), a_, a_}; }
  ConstBlockMap tip() const { return {data_.data() + tip_offset(), a_, a_}; }

  std::size_t diag_offset(Index i) const { return std::size_t(i * b_ * b_); }
  std::size_t lower_offset(Index i) const { return std::size_t((n_ + i) * b_ * b_); }
  std::size_t arrow_offset(Index i) const {
    return std::size_t((n_ + std::max<Index>(n_ - 1, 0)) * b_ * b_ + i * a_ * b_);
  }
  std::size_t tip_offset() const { return std::size_t((n_ + std::max<Index>(n_ - 1, 0)) * b_ * b_ + n_ * a_ * b_); }

  /// Flat offset of matrix entry (row, col) inside the value buffer, or -1
  /// when the entry lies in the strict upper block triangle (mirror of a
  /// stored entry). Throws DimensionError for entries outside the envelope.
  std::int64_t offset_of(Index row, Index col) const;

  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }
  std::size_t storage_doubles() const { return data_.size(); }

  void set_zero();
  bool arrow_is_zero() const;

  /// Symmetric matvec using the stored lower block triangle.
  Vector multiply(const Vector& x) const;

  Matrix to_dense() const;
  SparseMatrix to_sparse() const;
  static BTAMatrix from_dense(const Matrix& m, Index n, Index b, Index a);

private:
  Index n_ = 0;
  Index b_ = 0;
  Index a_ = 0;
  std::vector<double> data_;
};

/// Raised when a diagonal block (or the arrow tip) is not positive definite.
/// This is an expected signal for infeasible hyperparameters.
class NotPositiveDefinite : public std::runtime_error {
public:
  /// block == n denotes the arrow tip; partition == -1 denotes the
  /// sequential solver or the reduced system.
  NotPositiveDefinite(Index block, int partition = -1);
  Index block() const { return block_; }
  int partition() const { return partition_; }

private:
  Index block_;
  int partition_;
};

/// Cholesky factor in BTA layout: diag holds L_ii, lower holds L_{i+1,i},
/// arrow holds L_{a,i}, tip holds the Cholesky factor of the Schur
/// complemented tip.
struct BTAFactor {
  BTAMatrix l;
  bool arrow_zero = false;
  FlopCounter flops;
};

BTAFactor factorize(BTAMatrix m);
double logdet(const BTAFactor& f);
Vector solve(const BTAFactor& f, const Vector& rhs);
/// L^{-T} z, used to draw samples from N(0, M^{-1}).
Vector solve_lower_transpose(const BTAFactor& f, const Vector& z);
/// Entries of M^{-1} on the BTA pattern.
BTAMatrix selected_invert(const BTAFactor& f, FlopCounter* flops = nullptr);

/// Matrix Market dump of the block pattern (debug/oracle cross-checks).
void write_bta_matrix_market(const std::string& path, const BTAMatrix& m);

}  // namespace stinla
