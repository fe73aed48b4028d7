#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace stinla {

using Index = Eigen::Index;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Column-compressed sparse matrix. Assembly routines keep explicit zeros so
/// that the structural pattern depends only on the model, never on the
/// hyperparameter values.
using SparseMatrix = Eigen::SparseMatrix<double, Eigen::ColMajor, int>;
using Triplet = Eigen::Triplet<double, int>;

class DimensionError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

class IoError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

SparseMatrix sparse_identity(Index n);
SparseMatrix sparse_diagonal(const Vector& d);

/// Symmetric tridiagonal matrix from a main diagonal and an off-diagonal.
SparseMatrix sparse_tridiagonal(const Vector& diag, const Vector& off);

/// Kronecker product with the structural pattern of both factors preserved.
SparseMatrix kron(const SparseMatrix& a, const SparseMatrix& b);

bool is_diagonal(const SparseMatrix& m);
double max_asymmetry(const SparseMatrix& m);
/// Largest |i - j| over stored entries.
Index bandwidth(const SparseMatrix& m);

/// Matrix Market coordinate format. `symmetric` files are expanded to both
/// triangles on read.
SparseMatrix read_matrix_market(const std::string& path);
void write_matrix_market(const std::string& path, const SparseMatrix& m);

/// Single-column CSV of reals, optional non-numeric header line.
Vector read_vector_csv(const std::string& path);
void write_vector_csv(const std::string& path, const Vector& v, const std::string& header = "value");

}  // namespace stinla
