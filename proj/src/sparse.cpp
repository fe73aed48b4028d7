#include "stinla/sparse.hpp"

#include <unsupported/Eigen/KroneckerProduct>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace stinla {

SparseMatrix sparse_identity(Index n) {
  SparseMatrix m(n, n);
  m.setIdentity();
  return m;
}

SparseMatrix sparse_diagonal(const Vector& d) {
  std::vector<Triplet> t;
  t.reserve(static_cast<std::size_t>(d.size()));
  for (Index i = 0; i < d.size(); ++i) t.emplace_back(int(i), int(i), d[i]);
  SparseMatrix m(d.size(), d.size());
  m.setFromTriplets(t.begin(), t.end());
  return m;
}

SparseMatrix sparse_tridiagonal(const Vector& diag, const Vector& off) {
  const Index n = diag.size();
  if (n > 0 && off.size() != n - 1) throw DimensionError("tridiagonal: off-diagonal length must be n-1");
  std::vector<Triplet> t;
  for (Index i = 0; i < n; ++i) {
    t.emplace_back(int(i), int(i), diag[i]);
    if (i + 1 < n) {
      t.emplace_back(int(i + 1), int(i), off[i]);
      t.emplace_back(int(i), int(i + 1), off[i]);
    }
  }
  SparseMatrix m(n, n);
  m.setFromTriplets(t.begin(), t.end());
  return m;
}

SparseMatrix kron(const SparseMatrix& a, const SparseMatrix& b) {
  SparseMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
  Eigen::KroneckerProductSparse<SparseMatrix, SparseMatrix> k(a, b);
  k.evalTo(out);
  out.makeCompressed();
  return out;
}

bool is_diagonal(const SparseMatrix& m) {
  for (Index c = 0; c < m.outerSize(); ++c)
    for (SparseMatrix::InnerIterator it(m, c); it; ++it)
      if (it.row() != it.col() && it.value() != 0.0) return false;
  return true;
}

double max_asymmetry(const SparseMatrix& m) {
  SparseMatrix d = SparseMatrix(m.transpose()) - m;
  double worst = 0.0;
  for (Index k = 0; k < d.nonZeros(); ++k) worst = std::max(worst, std::abs(d.valuePtr()[k]));
  return worst;
}

Index bandwidth(const SparseMatrix& m) {
  Index bw = 0;
  for (Index c = 0; c < m.outerSize(); ++c)
    for (SparseMatrix::InnerIterator it(m, c); it; ++it) bw = std::max(bw, std::abs(it.row() - it.col()));
  return bw;
}

namespace {

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return char(std::tolower(c)); });
  return s;
}

}  // namespace

SparseMatrix read_matrix_market(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open Matrix Market file: " + path);
  std::string line;
  if (!std::getline(in, line)) throw IoError("empty Matrix Market file: " + path);
  std::istringstream banner(lower(line));
  std::string tag, object, format, field, symmetry;
  banner >> tag >> object >> format >> field >> symmetry;
  if (tag != "%%matrixmarket" || object != "matrix" || format != "coordinate")
    throw IoError("unsupported Matrix Market banner in " + path + ": " + line);
  if (field != "real" && field != "integer" && field != "pattern")
    throw IoError("unsupported Matrix Market field '" + field + "' in " + path);
  const bool symmetric = symmetry == "symmetric";
  if (!symmetric && symmetry != "general") throw IoError("unsupported Matrix Market symmetry '" + symmetry + "'");

  while (std::getline(in, line)) {
    if (!line.empty() && line[0] != '%') break;
  }
  std::istringstream header(line);
  long rows = 0, cols = 0, nnz = 0;
  if (!(header >> rows >> cols >> nnz) || rows < 0 || cols < 0 || nnz < 0)
    throw IoError("malformed Matrix Market size line in " + path);

  std::vector<Triplet> t;
  t.reserve(std::size_t(symmetric ? 2 * nnz : nnz));
  for (long k = 0; k < nnz; ++k) {
    long i = 0, j = 0;
    double v = 1.0;
    if (!(in >> i >> j)) throw IoError("truncated Matrix Market data in " + path);
    if (field != "pattern" && !(in >> v)) throw IoError("truncated Matrix Market data in " + path);
    if (i < 1 || j < 1 || i > rows || j > cols) throw IoError("Matrix Market index out of range in " + path);
    t.emplace_back(int(i - 1), int(j - 1), v);
    if (symmetric && i != j) t.emplace_back(int(j - 1), int(i - 1), v);
  }
  SparseMatrix m(rows, cols);
  m.setFromTriplets(t.begin(), t.end());
  m.makeCompressed();
  return m;
}

void write_matrix_market(const std::string& path, const SparseMatrix& m) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write Matrix Market file: " + path);
  out << "%%MatrixMarket matrix coordinate real general\n";
  out << m.rows() << ' ' << m.cols() << ' ' << m.nonZeros() << '\n';
  char buf[64];
  for (Index c = 0; c < m.outerSize(); ++c)
    for (SparseMatrix::InnerIterator it(m, c); it; ++it) {
      std::snprintf(buf, sizeof buf, "%.17g", it.value());
      out << it.row() + 1 << ' ' << it.col() + 1 << ' ' << buf << '\n';
    }
}

Vector read_vector_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open CSV file: " + path);
  std::vector<double> values;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma != std::string::npos) throw IoError("expected a single-column CSV: " + path);
    char* end = nullptr;
    const double v = std::strtod(line.c_str(), &end);
    if (end == line.c_str()) {
      if (first) {
        first = false;
        continue;
      }
      throw IoError("non-numeric CSV entry '" + line + "' in " + path);
    }
    first = false;
    values.push_back(v);
  }
  return Eigen::Map<Vector>(values.data(), Index(values.size()));
}

void write_vector_csv(const std::string& path, const Vector& v, const std::string& header) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write CSV file: " + path);
  out << header << '\n';
  char buf[64];
  for (Index i = 0; i < v.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g", v[i]);
    out << buf << '\n';
  }
}

}  // namespace stinla
