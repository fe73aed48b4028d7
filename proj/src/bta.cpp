#include "stinla/bta.hpp"

#include <algorithm>
#include <cmath>

namespace stinla {

BTAMatrix::BTAMatrix(Index n, Index b, Index a) : n_(n), b_(b), a_(a) {
  if (n < 0 || b < 0 || a < 0) throw DimensionError("BTA dimensions must be non-negative");
  if (n == 0 && b != 0) throw DimensionError("BTA matrix with zero blocks must have b = 0");
  const Index lower_blocks = std::max<Index>(n - 1, 0);
  data_.assign(std::size_t((n + lower_blocks) * b * b + n * a * b + a * a), 0.0);
}

std::int64_t BTAMatrix::offset_of(Index row, Index col) const {
  const Index N = size();
  if (row < 0 || col < 0 || row >= N || col >= N) throw DimensionError("BTA entry index out of range");
  const Index nb = n_ * b_;
  if (row < nb && col < nb) {
    const Index bi = row / b_, bj = col / b_;
    const Index r = row % b_, c = col % b_;
    if (bi == bj) return std::int64_t(diag_offset(bi) + std::size_t(c * b_ + r));
    if (bi == bj + 1) return std::int64_t(lower_offset(bj) + std::size_t(c * b_ + r));
    if (bj == bi + 1) return -1;
    throw DimensionError("entry (" + std::to_string(row) + ", " + std::to_string(col) +
                         ") lies outside the block-tridiagonal envelope");
  }
  if (row >= nb && col < nb) {
    const Index r = row - nb, bj = col / b_, c = col % b_;
    return std::int64_t(arrow_offset(bj) + std::size_t(c * a_ + r));
  }
  if (row < nb && col >= nb) return -1;
  return std::int64_t(tip_offset() + std::size_t((col - nb) * a_ + (row - nb)));
}

void BTAMatrix::set_zero() { std::fill(data_.begin(), data_.end(), 0.0); }

bool BTAMatrix::arrow_is_zero() const {
  if (a_ == 0) return true;
  const auto begin = data_.begin() + std::ptrdiff_t(arrow_offset(0));
  const auto end = data_.begin() + std::ptrdiff_t(tip_offset());
  return std::all_of(begin, end, [](double v) { return v == 0.0; });
}

Vector BTAMatrix::multiply(const Vector& x) const {
  if (x.size() != size()) throw DimensionError("BTA multiply: length mismatch");
  Vector y = Vector::Zero(size());
  const Index nb = n_ * b_;
  for (Index i = 0; i < n_; ++i) {
    y.segment(i * b_, b_).noalias() += diag(i) * x.segment(i * b_, b_);
    if (i + 1 < n_) {
      y.segment((i + 1) * b_, b_).noalias() += lower(i) * x.segment(i * b_, b_);
      y.segment(i * b_, b_).noalias() += lower(i).transpose() * x.segment((i + 1) * b_, b_);
    }
    if (a_ > 0) {
      y.segment(nb, a_).noalias() += arrow(i) * x.segment(i * b_, b_);
      y.segment(i * b_, b_).noalias() += arrow(i).transpose() * x.segment(nb, a_);
    }
  }
  if (a_ > 0) y.segment(nb, a_).noalias() += tip() * x.segment(nb, a_);
  return y;
}

Matrix BTAMatrix::to_dense() const {
  Matrix d = Matrix::Zero(size(), size());
  const Index nb = n_ * b_;
  for (Index i = 0; i < n_; ++i) {
    d.block(i * b_, i * b_, b_, b_) = diag(i);
    if (i + 1 < n_) {
      d.block((i + 1) * b_, i * b_, b_, b_) = lower(i);
      d.block(i * b_, (i + 1) * b_, b_, b_) = lower(i).transpose();
    }
    d.block(nb, i * b_, a_, b_) = arrow(i);
    d.block(i * b_, nb, b_, a_) = arrow(i).transpose();
  }
  d.block(nb, nb, a_, a_) = tip();
  return d;
}

SparseMatrix BTAMatrix::to_sparse() const {
  const Matrix d = to_dense();
  std::vector<Triplet> t;
  for (Index c = 0; c < d.cols(); ++c)
    for (Index r = 0; r < d.rows(); ++r) {
      // keep the full block pattern, zeros included
      const Index nb = n_ * b_;
      bool in_pattern = true;
      if (r < nb && c < nb) in_pattern = std::abs(r / b_ - c / b_) <= 1;
      if (in_pattern) t.emplace_back(int(r), int(c), d(r, c));
    }
  SparseMatrix s(size(), size());
  s.setFromTriplets(t.begin(), t.end());
  return s;
}

BTAMatrix BTAMatrix::from_dense(const Matrix& m, Index n, Index b, Index a) {
  BTAMatrix out(n, b, a);
  if (m.rows() != out.size() || m.cols() != out.size()) throw DimensionError("from_dense: size mismatch");
  const Index nb = n * b;
  for (Index i = 0; i < n; ++i) {
    out.diag(i) = m.block(i * b, i * b, b, b);
    if (i + 1 < n) out.lower(i) = m.block((i + 1) * b, i * b, b, b);
    out.arrow(i) = m.block(nb, i * b, a, b);
  }
  out.tip() = m.block(nb, nb, a, a);
  return out;
}

NotPositiveDefinite::NotPositiveDefinite(Index block, int partition)
    : std::runtime_error("matrix is not positive definite at block " + std::to_string(block) +
                         (partition >= 0 ? " of partition " + std::to_string(partition) : std::string())),
      block_(block),
      partition_(partition) {}

BTAFactor factorize(BTAMatrix m) {
  using namespace kernels;
  BTAFactor f;
  f.arrow_zero = m.arrow_is_zero();
  FlopCounter& fc = f.flops;
  const Index n = m.n();
  const bool arrow = m.a() > 0 && !f.arrow_zero;
  for (Index i = 0; i < n; ++i) {
    auto lii = m.diag(i);
    if (!potrf(lii, fc)) throw NotPositiveDefinite(i);
    if (i + 1 < n) {
      trsm_right_lower_t(lii, m.lower(i), fc);
      syrk_sub(m.diag(i + 1), m.lower(i), fc);
    }
    if (arrow) {
      trsm_right_lower_t(lii, m.arrow(i), fc);
      if (i + 1 < n) gemm_nt(m.arrow(i + 1), m.arrow(i), m.lower(i), -1.0, fc);
      syrk_sub(m.tip(), m.arrow(i), fc);
    }
  }
  if (!potrf(m.tip(), fc)) throw NotPositiveDefinite(n);
  f.l = std::move(m);
  return f;
}

double logdet(const BTAFactor& f) {
  double s = 0.0;
  for (Index i = 0; i < f.l.n(); ++i) s += f.l.diag(i).diagonal().array().log().sum();
  if (f.l.a() > 0) s += f.l.tip().diagonal().array().log().sum();
  return 2.0 * s;
}

Vector solve(const BTAFactor& f, const Vector& rhs) {
  using namespace kernels;
  const BTAMatrix& l = f.l;
  if (rhs.size() != l.size()) throw DimensionError("solve: rhs length mismatch");
  FlopCounter fc;
  const Index n = l.n(), b = l.b(), a = l.a(), nb = n * b;
  const bool arrow = a > 0 && !f.arrow_zero;
  Vector x = rhs;
  for (Index i = 0; i < n; ++i) {
    auto xi = x.segment(i * b, b);
    if (i > 0) gemv(xi, l.lower(i - 1), x.segment((i - 1) * b, b), -1.0, fc);
    trsv_lower(l.diag(i), xi, fc);
    if (arrow) gemv(x.segment(nb, a), l.arrow(i), xi, -1.0, fc);
  }
  trsv_lower(l.tip(), x.segment(nb, a), fc);
  trsv_lower_t(l.tip(), x.segment(nb, a), fc);
  for (Index i = n - 1; i >= 0; --i) {
    auto xi = x.segment(i * b, b);
    if (i + 1 < n) gemv_t(xi, l.lower(i), x.segment((i + 1) * b, b), -1.0, fc);
    if (arrow) gemv_t(xi, l.arrow(i), x.segment(nb, a), -1.0, fc);
    trsv_lower_t(l.diag(i), xi, fc);
  }
  return x;
}

Vector solve_lower_transpose(const BTAFactor& f, const Vector& z) {
  using namespace kernels;
  const BTAMatrix& l = f.l;
  if (z.size() != l.size()) throw DimensionError("solve_lower_transpose: length mismatch");
  FlopCounter fc;
  const Index n = l.n(), b = l.b(), a = l.a(), nb = n * b;
  const bool arrow = a > 0 && !f.arrow_zero;
  Vector x = z;
  trsv_lower_t(l.tip(), x.segment(nb, a), fc);
  for (Index i = n - 1; i >= 0; --i) {
    auto xi = x.segment(i * b, b);
    if (i + 1 < n) gemv_t(xi, l.lower(i), x.segment((i + 1) * b, b), -1.0, fc);
    if (arrow) gemv_t(xi, l.arrow(i), x.segment(nb, a), -1.0, fc);
    trsv_lower_t(l.diag(i), xi, fc);
  }
  return x;
}

BTAMatrix selected_invert(const BTAFactor& f, FlopCounter* flops) {
  using namespace kernels;
  const BTAMatrix& l = f.l;
  FlopCounter local;
  FlopCounter& fc = flops ? *flops : local;
  const Index n = l.n(), b = l.b(), a = l.a();
  const bool arrow = a > 0 && !f.arrow_zero;
  BTAMatrix s(n, b, a);

  if (a > 0) {
    const Matrix tinv = lower_inverse(l.tip(), fc);
    s.tip().noalias() = tinv.transpose() * tinv;
    fc.gemm += double(a) * double(a) * double(a);
  }
  for (Index i = n - 1; i >= 0; --i) {
    const Matrix linv = lower_inverse(l.diag(i), fc);
    Matrix sii = linv.transpose();
    if (i + 1 < n) {
      // Sigma_{i+1,i} = -(Sigma_{i+1,i+1} L_{i+1,i} + Sigma_{a,i+1}^T L_{a,i}) L_ii^{-1}
      Matrix t = Matrix::Zero(b, b);
      gemm_nn(t, s.diag(i + 1), l.lower(i), -1.0, fc);
      if (arrow) gemm_tn(t, s.arrow(i + 1), l.arrow(i), -1.0, fc);
      s.lower(i).setZero();
      gemm_nn(s.lower(i), t, linv, 1.0, fc);
    }
    if (arrow) {
      Matrix t = Matrix::Zero(a, b);
      if (i + 1 < n) gemm_nn(t, s.arrow(i + 1), l.lower(i), -1.0, fc);
      gemm_nn(t, s.tip(), l.arrow(i), -1.0, fc);
      s.arrow(i).setZero();
      gemm_nn(s.arrow(i), t, linv, 1.0, fc);
    }
    if (i + 1 < n) gemm_tn(sii, s.lower(i), l.lower(i), -1.0, fc);
    if (arrow) gemm_tn(sii, s.arrow(i), l.arrow(i), -1.0, fc);
    Matrix d = Matrix::Zero(b, b);
    gemm_nn(d, sii, linv, 1.0, fc);
    s.diag(i) = 0.5 * (d + d.transpose());
  }
  return s;
}

void write_bta_matrix_market(const std::string& path, const BTAMatrix& m) {
  write_matrix_market(path, m.to_sparse());
}

}  // namespace stinla
