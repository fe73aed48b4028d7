#include "stinla/model.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace stinla {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw DimensionError(what);
}

bool positive(double v) { return std::isfinite(v) && v > 0.0; }

}  // namespace

void SpatialDiscretization::validate() const {
  require(c.rows() == c.cols() && g.rows() == g.cols(), "spatial matrices must be square");
  require(c.rows() == g.rows(), "C and G must have the same size");
  require(is_diagonal(c), "C must be a diagonal (lumped) mass matrix");
  const Vector d = c.diagonal();
  for (Index i = 0; i < d.size(); ++i) require(positive(d[i]), "C must be strictly positive on the diagonal");
  double scale = 1.0;
  for (Index k = 0; k < g.nonZeros(); ++k) scale = std::max(scale, std::abs(g.valuePtr()[k]));
  require(max_asymmetry(g) <= 1e-12 * scale, "G must be symmetric");
}

void TemporalDiscretization::validate() const {
  const Index n = m0.rows();
  require(m0.cols() == n && m1.rows() == n && m1.cols() == n && m2.rows() == n && m2.cols() == n,
          "temporal matrices must all be n_t x n_t");
  require(is_diagonal(m0), "M0 must be diagonal");
  const Vector d = m0.diagonal();
  for (Index i = 0; i < n; ++i) require(positive(d[i]), "M0 must be strictly positive on the diagonal");
  require(bandwidth(m1) <= 1 && bandwidth(m2) <= 1, "M1 and M2 must have bandwidth at most one");
  require(max_asymmetry(m1) == 0.0 && max_asymmetry(m2) == 0.0, "M1 and M2 must be symmetric");
}

void UnivariateHypers::validate() const {
  if (!positive(gamma_s) || !positive(gamma_t) || !positive(gamma_e) || !positive(tau_y))
    throw std::invalid_argument("hyperparameters must be finite and strictly positive");
}

Index ModelSpec::observation_count() const {
  Index m = 0;
  for (const auto& y : observations) m += y.size();
  return m;
}

double ModelSpec::process_gamma_e(Index process) const {
  return gamma_e.empty() ? 1.0 : gamma_e.at(std::size_t(process));
}

void ModelSpec::validate() const {
  require(n_v >= 1 && n_s >= 1 && n_t >= 1 && n_r >= 0, "model dimensions must be positive");
  const auto nv = std::size_t(n_v);
  require(spatial.size() == nv && temporal.size() == nv, "one spatial and temporal discretization per process");
  require(design.size() == nv && observations.size() == nv, "one design matrix and observation vector per process");
  require(gamma_e.empty() || gamma_e.size() == nv, "gamma_e must be empty or have one entry per process");
  for (std::size_t i = 0; i < nv; ++i) {
    spatial[i].validate();
    temporal[i].validate();
    require(spatial[i].size() == n_s, "C/G size must equal n_s for process " + std::to_string(i));
    require(temporal[i].size() == n_t, "M-matrix size must equal n_t for process " + std::to_string(i));
    require(design[i].cols() == latent_size(),
            "design matrix " + std::to_string(i) + " must have n_s*n_t + n_r columns");
    require(design[i].rows() == observations[i].size(),
            "observation vector " + std::to_string(i) + " must have one entry per design row");
  }
  require(positive(fixed_effect_precision), "fixed-effect prior precision must be positive");
}

Index joint_dimension(Index n_v, Index n_s, Index n_t, Index n_r) { return n_v * (n_s * n_t + n_r); }

Index joint_dimension(const ModelSpec& spec) { return joint_dimension(spec.n_v, spec.n_s, spec.n_t, spec.n_r); }

SparseMatrix build_spatiotemporal_precision(const SpatialDiscretization& s, const TemporalDiscretization& t,
                                            const UnivariateHypers& h) {
  h.validate();
  require(s.c.rows() == s.size() && s.g.rows() == s.size() && s.g.cols() == s.size(), "C and G sizes differ");
  require(t.m1.rows() == t.size() && t.m2.rows() == t.size(), "M-matrix sizes differ");
  const Vector cdiag = s.c.diagonal();
  const SparseMatrix cinv = sparse_diagonal(cdiag.cwiseInverse());
  const SparseMatrix q1 = h.gamma_s * h.gamma_s * s.c + s.g;
  const SparseMatrix q2 = q1 * cinv * q1;
  const SparseMatrix q3 = q1 * cinv * q2;
  SparseMatrix q = kron(t.m0, q3) + h.gamma_t * kron(t.m1, q2) + (h.gamma_t * h.gamma_t) * kron(t.m2, q1);
  q *= h.gamma_e;
  q.makeCompressed();
  return q;
}

SparseMatrix build_univariate_prior(const ModelSpec& spec, const UnivariateHypers& h, Index process) {
  if (process < 0 || process >= spec.n_v) throw DimensionError("process index out of range");
  const auto& s = spec.spatial.at(std::size_t(process));
  const auto& t = spec.temporal.at(std::size_t(process));
  require(s.size() == spec.n_s && t.size() == spec.n_t, "discretization does not match n_s / n_t");
  const SparseMatrix qst = build_spatiotemporal_precision(s, t, h);
  const Index nst = qst.rows();
  std::vector<Triplet> trip;
  trip.reserve(std::size_t(qst.nonZeros() + spec.n_r));
  for (Index c = 0; c < qst.outerSize(); ++c)
    for (SparseMatrix::InnerIterator it(qst, c); it; ++it) trip.emplace_back(int(it.row()), int(it.col()), it.value());
  for (Index j = 0; j < spec.n_r; ++j) trip.emplace_back(int(nst + j), int(nst + j), spec.fixed_effect_precision);
  SparseMatrix q(nst + spec.n_r, nst + spec.n_r);
  q.setFromTriplets(trip.begin(), trip.end());
  q.makeCompressed();
  return q;
}

SparseMatrix build_conditional_precision(const SparseMatrix& qp, const SparseMatrix& a, const Vector& d) {
  require(qp.rows() == qp.cols(), "Q_p must be square");
  require(a.cols() == qp.rows(), "design matrix column count must equal dim(Q_p)");
  require(d.size() == a.rows(), "likelihood Hessian diagonal must have one entry per observation");
  for (Index i = 0; i < d.size(); ++i)
    if (!(d[i] >= 0.0) || !std::isfinite(d[i])) throw std::invalid_argument("D must be finite and non-negative");
  const SparseMatrix ata = SparseMatrix(a.transpose()) * sparse_diagonal(d) * a;
  SparseMatrix qc = qp + ata;
  qc.makeCompressed();
  return qc;
}

SpatialDiscretization path_graph_spatial(Index n_s, double length) {
  require(n_s >= 1, "n_s must be positive");
  SpatialDiscretization s;
  if (n_s == 1) {
    s.c = sparse_diagonal(Vector::Ones(1));
    s.g = sparse_diagonal(Vector::Zero(1));
    return s;
  }
  const double h = length / double(n_s - 1);
  Vector mass = Vector::Constant(n_s, h);
  mass[0] *= 0.5;
  mass[n_s - 1] *= 0.5;
  s.c = sparse_diagonal(mass);
  Vector diag = Vector::Constant(n_s, 2.0 / h);
  diag[0] = diag[n_s - 1] = 1.0 / h;
  s.g = sparse_tridiagonal(diag, Vector::Constant(n_s - 1, -1.0 / h));
  return s;
}

TemporalDiscretization uniform_temporal(Index n_t, double dt) {
  require(n_t >= 1, "n_t must be positive");
  TemporalDiscretization t;
  if (n_t == 1) {
    t.m0 = sparse_diagonal(Vector::Constant(1, dt));
    t.m1 = sparse_diagonal(Vector::Zero(1));
    t.m2 = sparse_diagonal(Vector::Zero(1));
    return t;
  }
  Vector mass = Vector::Constant(n_t, dt);
  mass[0] *= 0.5;
  mass[n_t - 1] *= 0.5;
  t.m0 = sparse_diagonal(mass);
  t.m1 = sparse_tridiagonal(Vector::Zero(n_t), Vector::Constant(n_t - 1, 0.5));
  Vector diag = Vector::Constant(n_t, 2.0 / dt);
  diag[0] = diag[n_t - 1] = 1.0 / dt;
  t.m2 = sparse_tridiagonal(diag, Vector::Constant(n_t - 1, -1.0 / dt));
  return t;
}

}  // namespace stinla
