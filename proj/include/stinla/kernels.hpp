#pragma once

// Narrow dense block layer used by the structured solvers. Every block
// operation of the BTA routines goes through these functions, which also
// account the floating point work they perform.

#include "stinla/sparse.hpp"

namespace stinla {

/// Floating point operation tally, split by kernel family. Standard LAPACK
/// operation counts are used (potrf n^3/3, trsm m n^2, gemm 2mnk, syrk n^2 k).
struct FlopCounter {
  double potrf = 0.0;
  double trsm = 0.0;
  double gemm = 0.0;
  double syrk = 0.0;
  double vector = 0.0;

  double total() const { return potrf + trsm + gemm + syrk + vector; }
  FlopCounter& operator+=(const FlopCounter& o) {
    potrf += o.potrf;
    trsm += o.trsm;
    gemm += o.gemm;
    syrk += o.syrk;
    vector += o.vector;
    return *this;
  }
};

namespace kernels {

using MatRef = Eigen::Ref<Matrix>;
using ConstMatRef = Eigen::Ref<const Matrix>;
using VecRef = Eigen::Ref<Vector>;
using ConstVecRef = Eigen::Ref<const Vector>;

/// In-place lower Cholesky; the strict upper triangle is zeroed. Returns false
/// on a non-positive or non-finite pivot.
bool potrf(MatRef a, FlopCounter& fc);

/// x <- x * l^{-T}
void trsm_right_lower_t(ConstMatRef l, MatRef x, FlopCounter& fc);
/// x <- x * l^{-1}
void trsm_right_lower(ConstMatRef l, MatRef x, FlopCounter& fc);
/// x <- l^{-1} (identity when l is empty)
Matrix lower_inverse(ConstMatRef l, FlopCounter& fc);

/// c += alpha * a * b^T
void gemm_nt(MatRef c, ConstMatRef a, ConstMatRef b, double alpha, FlopCounter& fc);
/// c += alpha * a * b
void gemm_nn(MatRef c, ConstMatRef a, ConstMatRef b, double alpha, FlopCounter& fc);
/// c += alpha * a^T * b
void gemm_tn(MatRef c, ConstMatRef a, ConstMatRef b, double alpha, FlopCounter& fc);
/// c -= a * a^T, both triangles of c are kept.
void syrk_sub(MatRef c, ConstMatRef a, FlopCounter& fc);

/// x <- l^{-1} x
void trsv_lower(ConstMatRef l, VecRef x, FlopCounter& fc);
/// x <- l^{-T} x
void trsv_lower_t(ConstMatRef l, VecRef x, FlopCounter& fc);
/// y += alpha * a * x
void gemv(VecRef y, ConstMatRef a, ConstVecRef x, double alpha, FlopCounter& fc);
/// y += alpha * a^T * x
void gemv_t(VecRef y, ConstMatRef a, ConstVecRef x, double alpha, FlopCounter& fc);

}  // namespace kernels
}  // namespace stinla
