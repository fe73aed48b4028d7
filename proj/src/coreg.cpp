#include "stinla/coreg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace stinla {

Index lambda_count(Index n_v) { return n_v * (n_v - 1) / 2; }

Index lambda_index(Index row, Index col, Index n_v) {
  if (!(row > col && col >= 0 && row < n_v)) throw DimensionError("lambda index must address the strict lower triangle");
  const Index d = row - col;  // sub-diagonal number, 1-based
  // entries on sub-diagonals 1 .. d-1 come first: sum_{k<d} (n_v - k)
  const Index before = (d - 1) * n_v - (d - 1) * d / 2;
  return before + col;
}

void Coregionalization::validate() const {
  const Index nv = n_v();
  if (nv < 1) throw DimensionError("coregionalization needs at least one process");
  if (lambda.size() != lambda_count(nv)) throw DimensionError("lambda must have n_v (n_v - 1) / 2 entries");
  for (Index i = 0; i < nv; ++i)
    if (!(sigma[i] > 0.0) || !std::isfinite(sigma[i])) throw std::invalid_argument("sigma must be strictly positive");
  for (Index k = 0; k < lambda.size(); ++k)
    if (!std::isfinite(lambda[k])) throw std::invalid_argument("lambda must be finite");
}

Matrix Coregionalization::inverse_mixing() const {
  validate();
  const Index nv = n_v();
  Matrix m = Matrix::Identity(nv, nv);
  for (Index i = 1; i < nv; ++i)
    for (Index j = 0; j < i; ++j) m(i, j) = -lambda[lambda_index(i, j, nv)];
  for (Index i = 0; i < nv; ++i) m.row(i) /= sigma[i];
  return m;
}

Matrix Coregionalization::mixing() const {
  validate();
  const Index nv = n_v();
  // L = M^{-1} column by column (M unit lower triangular)
  Matrix l = Matrix::Identity(nv, nv);
  for (Index j = 0; j < nv; ++j)
    for (Index i = j + 1; i < nv; ++i) {
      double acc = 0.0;
      for (Index k = j; k < i; ++k) acc += lambda[lambda_index(i, k, nv)] * l(k, j);
      l(i, j) = acc;
    }
  return l * sigma.asDiagonal();
}

SparseMatrix assemble_joint_precision(std::span<const SparseMatrix> q, const Coregionalization& coreg) {
  coreg.validate();
  const Index nv = coreg.n_v();
  if (Index(q.size()) != nv) throw DimensionError("need one precision matrix per process");
  const Index dim = q.empty() ? 0 : q[0].rows();
  for (const auto& qi : q)
    if (qi.rows() != dim || qi.cols() != dim) throw DimensionError("all univariate precisions must share one dimension");

  const Matrix minv = coreg.inverse_mixing();
  std::size_t reserve = 0;
  for (Index k = 0; k < nv; ++k) reserve += std::size_t(q[std::size_t(k)].nonZeros() * (k + 1) * (k + 1));
  std::vector<Triplet> trip;
  trip.reserve(reserve);
  // Q^{nv}_{ij} = sum_k minv(k, i) minv(k, j) Q^k ; minv(k, i) = 0 for k < i.
  for (Index i = 0; i < nv; ++i)
    for (Index j = 0; j < nv; ++j)
      for (Index k = std::max(i, j); k < nv; ++k) {
        const double c = minv(k, i) * minv(k, j);
        const SparseMatrix& qk = q[std::size_t(k)];
        for (Index col = 0; col < qk.outerSize(); ++col)
          for (SparseMatrix::InnerIterator it(qk, col); it; ++it)
            trip.emplace_back(int(i * dim + it.row()), int(j * dim + it.col()), c * it.value());
      }
  SparseMatrix out(nv * dim, nv * dim);
  out.setFromTriplets(trip.begin(), trip.end());
  out.makeCompressed();
  return out;
}

PermutationMap build_permutation(Index n_v, Index n_s, Index n_t, Index n_r) {
  if (n_v < 1 || n_s < 1 || n_t < 1 || n_r < 0) throw DimensionError("invalid model dimensions for permutation");
  PermutationMap map;
  map.n_v = n_v;
  map.n_s = n_s;
  map.n_t = n_t;
  map.n_r = n_r;
  const Index latent = n_s * n_t + n_r;
  map.forward.resize(std::size_t(n_v * latent));
  for (Index v = 0; v < n_v; ++v) {
    for (Index t = 0; t < n_t; ++t)
      for (Index s = 0; s < n_s; ++s)
        map.forward[std::size_t(v * latent + t * n_s + s)] = t * (n_v * n_s) + v * n_s + s;
    for (Index j = 0; j < n_r; ++j)
      map.forward[std::size_t(v * latent + n_s * n_t + j)] = n_v * n_s * n_t + v * n_r + j;
  }
  return map;
}

PermutationMap identity_permutation(Index n, Index b, Index a) {
  PermutationMap map;
  map.n_v = 1;
  map.n_s = b;
  map.n_t = n;
  map.n_r = a;
  map.forward.resize(std::size_t(n * b + a));
  std::iota(map.forward.begin(), map.forward.end(), Index(0));
  return map;
}

void bind_pattern(PermutationMap& map, const SparseMatrix& q) {
  if (q.rows() != map.size() || q.cols() != map.size()) throw DimensionError("pattern size does not match permutation");
  if (!q.isCompressed()) throw DimensionError("pattern must be in compressed form");
  const BTAMatrix probe(map.n(), map.b(), map.a());
  map.data_map.assign(std::size_t(q.nonZeros()), -1);
  for (Index c = 0; c < q.outerSize(); ++c)
    for (SparseMatrix::InnerIterator it(q, c); it; ++it) {
      const Index k = Index(&it.value() - q.valuePtr());
      map.data_map[std::size_t(k)] =
          probe.offset_of(map.forward[std::size_t(it.row())], map.forward[std::size_t(it.col())]);
    }
  map.pattern_outer.assign(q.outerIndexPtr(), q.outerIndexPtr() + q.outerSize() + 1);
  map.pattern_inner.assign(q.innerIndexPtr(), q.innerIndexPtr() + q.nonZeros());
}

SparseMatrix permute(const SparseMatrix& q, const PermutationMap& map) {
  if (q.rows() != map.size() || q.cols() != map.size()) throw DimensionError("matrix size does not match permutation");
  std::vector<Triplet> trip;
  trip.reserve(std::size_t(q.nonZeros()));
  for (Index c = 0; c < q.outerSize(); ++c)
    for (SparseMatrix::InnerIterator it(q, c); it; ++it)
      trip.emplace_back(int(map.forward[std::size_t(it.row())]), int(map.forward[std::size_t(it.col())]), it.value());
  SparseMatrix out(q.rows(), q.cols());
  out.setFromTriplets(trip.begin(), trip.end());
  out.makeCompressed();
  return out;
}

Vector to_bta_order(const Vector& x, const PermutationMap& map) {
  if (x.size() != map.size()) throw DimensionError("vector length does not match permutation");
  Vector out(x.size());
  for (Index i = 0; i < x.size(); ++i) out[map.forward[std::size_t(i)]] = x[i];
  return out;
}

Vector from_bta_order(const Vector& x, const PermutationMap& map) {
  if (x.size() != map.size()) throw DimensionError("vector length does not match permutation");
  Vector out(x.size());
  for (Index i = 0; i < x.size(); ++i) out[i] = x[map.forward[std::size_t(i)]];
  return out;
}

void map_to_bta(const SparseMatrix& q, const PermutationMap& map, BTAMatrix& ws) {
  if (!map.bound()) throw DimensionError("permutation map has no bound pattern");
  if (q.rows() != map.size() || q.nonZeros() != Index(map.data_map.size()) || !q.isCompressed() ||
      !std::equal(map.pattern_outer.begin(), map.pattern_outer.end(), q.outerIndexPtr()) ||
      !std::equal(map.pattern_inner.begin(), map.pattern_inner.end(), q.innerIndexPtr()))
    throw DimensionError("sparse pattern differs from the pattern bound to the permutation map");
  if (ws.n() != map.n() || ws.b() != map.b() || ws.a() != map.a()) ws = BTAMatrix(map.n(), map.b(), map.a());
  auto values = ws.values();
  const double* src = q.valuePtr();
  for (std::size_t k = 0; k < map.data_map.size(); ++k) {
    const std::int64_t off = map.data_map[k];
    if (off >= 0) values[std::size_t(off)] = src[k];
  }
}

BTAMatrix map_to_bta(const SparseMatrix& q, const PermutationMap& map) {
  BTAMatrix ws(map.n(), map.b(), map.a());
  map_to_bta(q, map, ws);
  return ws;
}

}  // namespace stinla
