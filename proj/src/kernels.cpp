#include "stinla/kernels.hpp"

#include <cmath>

namespace stinla::kernels {

bool potrf(MatRef a, FlopCounter& fc) {
  const Index n = a.rows();
  fc.potrf += double(n) * double(n) * double(n) / 3.0;
  if (n == 0) return true;
  Eigen::LLT<Eigen::Ref<Matrix>> llt(a);
  if (llt.info() != Eigen::Success) return false;
  for (Index i = 0; i < n; ++i)
    if (!(a(i, i) > 0.0) || !std::isfinite(a(i, i))) return false;
  a.triangularView<Eigen::StrictlyUpper>().setZero();
  return true;
}

void trsm_right_lower_t(ConstMatRef l, MatRef x, FlopCounter& fc) {
  fc.trsm += double(x.rows()) * double(l.rows()) * double(l.rows());
  if (x.size() == 0) return;
  l.transpose().triangularView<Eigen::Upper>().solveInPlace<Eigen::OnTheRight>(x);
}

void trsm_right_lower(ConstMatRef l, MatRef x, FlopCounter& fc) {
  fc.trsm += double(x.rows()) * double(l.rows()) * double(l.rows());
  if (x.size() == 0) return;
  l.triangularView<Eigen::Lower>().solveInPlace<Eigen::OnTheRight>(x);
}

Matrix lower_inverse(ConstMatRef l, FlopCounter& fc) {
  const double n = double(l.rows());
  fc.trsm += n * n * n / 3.0;
  Matrix inv = Matrix::Identity(l.rows(), l.cols());
  if (l.size() == 0) return inv;
  l.triangularView<Eigen::Lower>().solveInPlace(inv);
  return inv;
}

void gemm_nt(MatRef c, ConstMatRef a, ConstMatRef b, double alpha, FlopCounter& fc) {
  fc.gemm += 2.0 * double(a.rows()) * double(b.rows()) * double(a.cols());
  if (c.size() == 0 || a.cols() == 0) return;
  c.noalias() += alpha * a * b.transpose();
}

void gemm_nn(MatRef c, ConstMatRef a, ConstMatRef b, double alpha, FlopCounter& fc) {
  fc.gemm += 2.0 * double(a.rows()) * double(b.cols()) * double(a.cols());
  if (c.size() == 0 || a.cols() == 0) return;
  c.noalias() += alpha * a * b;
}

void gemm_tn(MatRef c, ConstMatRef a, ConstMatRef b, double alpha, FlopCounter& fc) {
  fc.gemm += 2.0 * double(a.cols()) * double(b.cols()) * double(a.rows());
  if (c.size() == 0 || a.rows() == 0) return;
  c.noalias() += alpha * a.transpose() * b;
}

void syrk_sub(MatRef c, ConstMatRef a, FlopCounter& fc) {
  fc.syrk += double(a.rows()) * double(a.rows()) * double(a.cols());
  if (c.size() == 0 || a.cols() == 0) return;
  c.noalias() -= a * a.transpose();
}

void trsv_lower(ConstMatRef l, VecRef x, FlopCounter& fc) {
  fc.vector += double(l.rows()) * double(l.rows());
  if (x.size() == 0) return;
  l.triangularView<Eigen::Lower>().solveInPlace(x);
}

void trsv_lower_t(ConstMatRef l, VecRef x, FlopCounter& fc) {
  fc.vector += double(l.rows()) * double(l.rows());
  if (x.size() == 0) return;
  l.transpose().triangularView<Eigen::Upper>().solveInPlace(x);
}

void gemv(VecRef y, ConstMatRef a, ConstVecRef x, double alpha, FlopCounter& fc) {
  fc.vector += 2.0 * double(a.rows()) * double(a.cols());
  if (y.size() == 0 || x.size() == 0) return;
  y.noalias() += alpha * a * x;
}

void gemv_t(VecRef y, ConstMatRef a, ConstVecRef x, double alpha, FlopCounter& fc) {
  fc.vector += 2.0 * double(a.rows()) * double(a.cols());
  if (y.size() == 0 || x.size() == 0) return;
  y.noalias() += alpha * a.transpose() * x;
}

}  // namespace stinla::kernels
