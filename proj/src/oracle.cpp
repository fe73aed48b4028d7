#include "stinla/oracle.hpp"

#include "stinla/synth.hpp"

#include <cmath>
#include <numbers>

namespace stinla::oracle {

namespace {

const double kLog2Pi = std::log(2.0 * std::numbers::pi);

Matrix blkdiag(const std::vector<Matrix>& blocks) {
  Index n = 0;
  for (const auto& b : blocks) n += b.rows();
  Matrix out = Matrix::Zero(n, n);
  Index off = 0;
  for (const auto& b : blocks) {
    out.block(off, off, b.rows(), b.cols()) = b;
    off += b.rows();
  }
  return out;
}

}  // namespace

BTAMatrix random_spd_bta(Index n, Index b, Index a, std::mt19937_64& rng, bool zero_arrow) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::uniform_real_distribution<double> margin(0.05, 1.0);
  BTAMatrix m(n, b, a);
  for (Index i = 0; i < n; ++i) {
    for (Index c = 0; c < b; ++c)
      for (Index r = c; r < b; ++r) m.diag(i)(r, c) = m.diag(i)(c, r) = u(rng);
    if (i + 1 < n)
      for (Index c = 0; c < b; ++c)
        for (Index r = 0; r < b; ++r) m.lower(i)(r, c) = u(rng);
    if (!zero_arrow)
      for (Index c = 0; c < b; ++c)
        for (Index r = 0; r < a; ++r) m.arrow(i)(r, c) = u(rng);
  }
  for (Index c = 0; c < a; ++c)
    for (Index r = c; r < a; ++r) m.tip()(r, c) = m.tip()(c, r) = u(rng);

  Matrix d = m.to_dense();
  const Index N = d.rows();
  for (Index i = 0; i < N; ++i) d(i, i) = d.row(i).cwiseAbs().sum() - std::abs(d(i, i)) + margin(rng);
  for (Index i = 0; i < n; ++i) m.diag(i).diagonal() = d.diagonal().segment(i * b, b);
  if (a > 0) m.tip().diagonal() = d.diagonal().tail(a);
  return m;
}

Matrix dense_cholesky(const Matrix& m) {
  const Index n = m.rows();
  Matrix l = Matrix::Zero(n, n);
  for (Index j = 0; j < n; ++j) {
    double s = m(j, j);
    for (Index k = 0; k < j; ++k) s -= l(j, k) * l(j, k);
    if (!(s > 0.0)) throw std::runtime_error("dense_cholesky: matrix is not positive definite");
    l(j, j) = std::sqrt(s);
    for (Index i = j + 1; i < n; ++i) {
      double t = m(i, j);
      for (Index k = 0; k < j; ++k) t -= l(i, k) * l(j, k);
      l(i, j) = t / l(j, j);
    }
  }
  return l;
}

double dense_logdet(const Matrix& m) { return 2.0 * dense_cholesky(m).diagonal().array().log().sum(); }

Matrix dense_inverse(const Matrix& m) {
  const Matrix l = dense_cholesky(m);
  const Matrix linv = l.triangularView<Eigen::Lower>().solve(Matrix::Identity(m.rows(), m.cols()));
  return linv.transpose() * linv;
}

double rel_error(const Matrix& got, const Matrix& want) {
  const double scale = want.norm();
  return (got - want).norm() / (scale > 0.0 ? scale : 1.0);
}

double max_rel_entry_error(const Matrix& got, const Matrix& want) {
  double worst = 0.0;
  for (Index c = 0; c < want.cols(); ++c)
    for (Index r = 0; r < want.rows(); ++r) {
      const double denom = std::max(std::abs(want(r, c)), 1e-300);
      const double e = std::abs(got(r, c) - want(r, c));
      worst = std::max(worst, want(r, c) == 0.0 ? e : e / denom);
    }
  return worst;
}

Matrix dense_kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Index i = 0; i < a.rows(); ++i)
    for (Index j = 0; j < a.cols(); ++j) out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

Matrix dense_spatiotemporal_precision(const SpatialDiscretization& s, const TemporalDiscretization& t,
                                      const UnivariateHypers& h) {
  const Matrix c(s.c), g(s.g);
  const Matrix cinv = c.inverse();
  const Matrix q1 = h.gamma_s * h.gamma_s * c + g;
  const Matrix q2 = q1 * cinv * q1;
  const Matrix q3 = q1 * cinv * q2;
  return h.gamma_e * (dense_kron(Matrix(t.m0), q3) + h.gamma_t * dense_kron(Matrix(t.m1), q2) +
                      h.gamma_t * h.gamma_t * dense_kron(Matrix(t.m2), q1));
}

Matrix mixing_matrix(const Vector& sigma, const Vector& lambda) {
  const Index nv = sigma.size();
  Matrix l = Matrix::Zero(nv, nv);
  if (nv == 1) {
    l(0, 0) = sigma[0];
  } else if (nv == 2) {
    l << sigma[0], 0.0, lambda[0] * sigma[0], sigma[1];
  } else if (nv == 3) {
    const double l1 = lambda[0], l2 = lambda[1], l3 = lambda[2];
    l << sigma[0], 0.0, 0.0, l1 * sigma[0], sigma[1], 0.0, (l3 + l1 * l2) * sigma[0], l2 * sigma[1], sigma[2];
  } else {
    throw DimensionError("closed-form mixing matrix is only available for up to three processes");
  }
  return l;
}

Matrix dense_joint_precision(const std::vector<Matrix>& q, const Matrix& lambda) {
  const Index dim = q.front().rows();
  const Matrix big_inv = dense_kron(lambda, Matrix::Identity(dim, dim)).inverse();
  return big_inv.transpose() * blkdiag(q) * big_inv;
}

Matrix dense_joint_covariance(const std::vector<Matrix>& sigma, const Matrix& lambda) {
  const Index dim = sigma.front().rows();
  const Matrix big = dense_kron(lambda, Matrix::Identity(dim, dim));
  return big * blkdiag(sigma) * big.transpose();
}

Matrix three_process_blocks(const Matrix& q1, const Matrix& q2, const Matrix& q3, const Vector& sigma,
                            const Vector& lambda) {
  const Index d = q1.rows();
  const double s1 = sigma[0] * sigma[0], s2 = sigma[1] * sigma[1], s3 = sigma[2] * sigma[2];
  const double l1 = lambda[0], l2 = lambda[1], l3 = lambda[2];
  Matrix out(3 * d, 3 * d);
  out.block(0, 0, d, d) = q1 / s1 + l1 * l1 / s2 * q2 + l3 * l3 / s3 * q3;
  out.block(0, d, d, d) = -l1 / s2 * q2 + l2 * l3 / s3 * q3;
  out.block(0, 2 * d, d, d) = -l3 / s3 * q3;
  out.block(d, 0, d, d) = -l1 / s2 * q2 + l2 * l3 / s3 * q3;
  out.block(d, d, d, d) = q2 / s2 + l2 * l2 / s3 * q3;
  out.block(d, 2 * d, d, d) = -l2 / s3 * q3;
  out.block(2 * d, 0, d, d) = -l3 / s3 * q3;
  out.block(2 * d, d, d, d) = -l2 / s3 * q3;
  out.block(2 * d, 2 * d, d, d) = q3 / s3;
  return out;
}

Matrix permutation_matrix(const std::vector<Index>& forward) {
  const Index n = Index(forward.size());
  Matrix p = Matrix::Zero(n, n);
  for (Index i = 0; i < n; ++i) p(forward[std::size_t(i)], i) = 1.0;
  return p;
}

ModelSpec random_model(Index n_v, Index n_s, Index n_t, Index n_r, Index m, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> len(0.5, 2.0), step(0.5, 1.5);
  std::normal_distribution<double> normal(0.0, 1.0);
  ModelSpec spec;
  spec.n_v = n_v;
  spec.n_s = n_s;
  spec.n_t = n_t;
  spec.n_r = n_r;
  for (Index i = 0; i < n_v; ++i) {
    spec.spatial.push_back(path_graph_spatial(n_s, len(rng)));
    spec.temporal.push_back(uniform_temporal(n_t, step(rng)));
    spec.design.push_back(interpolation_design(n_s, n_t, n_r, m, rng));
    Vector y(m);
    for (Index r = 0; r < m; ++r) y[r] = normal(rng);
    spec.observations.push_back(y);
  }
  return spec;
}

Vector random_theta(Index n_v, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-0.5, 0.5), wide(-1.0, 1.0);
  Vector t(HyperParams::dimension(n_v));
  if (n_v == 1) {
    t << u(rng) + 0.5, u(rng), u(rng), wide(rng);
    return t;
  }
  Index k = 0;
  for (Index i = 0; i < n_v; ++i) {
    t[k++] = u(rng) + 0.5;
    t[k++] = u(rng);
  }
  for (Index i = 0; i < n_v; ++i) t[k++] = wide(rng);
  for (Index i = 0; i < n_v; ++i) t[k++] = u(rng);
  while (k < t.size()) t[k++] = wide(rng);
  return t;
}

DenseObjective dense_objective(const ModelSpec& spec, const Vector& theta, const ThetaPrior& prior) {
  const Index nv = spec.n_v, lat = spec.n_s * spec.n_t + spec.n_r;
  std::vector<Matrix> q;
  std::vector<double> tau;
  Vector sigma = Vector::Ones(nv), lambda;
  for (Index i = 0; i < nv; ++i) {
    UnivariateHypers h;
    if (nv == 1) {
      h.gamma_s = std::exp(theta[0]);
      h.gamma_t = std::exp(theta[1]);
      h.gamma_e = std::exp(theta[2]);
      tau.push_back(std::exp(theta[3]));
    } else {
      h.gamma_s = std::exp(theta[2 * i]);
      h.gamma_t = std::exp(theta[2 * i + 1]);
      h.gamma_e = spec.gamma_e.empty() ? 1.0 : spec.gamma_e[std::size_t(i)];
      tau.push_back(std::exp(theta[2 * nv + i]));
      sigma[i] = std::exp(theta[3 * nv + i]);
    }
    Matrix qi = Matrix::Zero(lat, lat);
    const Index nst = spec.n_s * spec.n_t;
    qi.topLeftCorner(nst, nst) =
        dense_spatiotemporal_precision(spec.spatial[std::size_t(i)], spec.temporal[std::size_t(i)], h);
    for (Index j = 0; j < spec.n_r; ++j) qi(nst + j, nst + j) = spec.fixed_effect_precision;
    q.push_back(qi);
  }
  if (nv > 1) lambda = theta.tail(nv * (nv - 1) / 2);

  DenseObjective out;
  out.qp = nv == 1 ? q[0] : dense_joint_precision(q, mixing_matrix(sigma, lambda));
  const Index N = out.qp.rows();

  Index m = 0;
  for (const auto& y : spec.observations) m += y.size();
  Matrix a = Matrix::Zero(m, N);
  Vector y(m), dvec(m);
  Index row = 0;
  for (Index i = 0; i < nv; ++i) {
    const Index mi = spec.observations[std::size_t(i)].size();
    a.block(row, i * lat, mi, lat) = Matrix(spec.design[std::size_t(i)]);
    y.segment(row, mi) = spec.observations[std::size_t(i)];
    dvec.segment(row, mi).setConstant(tau[std::size_t(i)]);
    row += mi;
  }
  out.qc = out.qp + a.transpose() * dvec.asDiagonal() * a;
  const Matrix qc_inv = dense_inverse(out.qc);
  out.mu = qc_inv * (a.transpose() * (dvec.asDiagonal() * y));
  out.sd = qc_inv.diagonal().cwiseSqrt();

  double log_prior = 0.0;
  for (Index i = 0; i < theta.size(); ++i) {
    const double z = (theta[i] - prior.mean[i]) / prior.sd[i];
    log_prior += -0.5 * kLog2Pi - std::log(prior.sd[i]) - 0.5 * z * z;
  }
  const Vector r = y - a * out.mu;
  const double log_lik =
      -0.5 * double(m) * kLog2Pi + 0.5 * dvec.array().log().sum() - 0.5 * r.dot(dvec.asDiagonal() * r);
  const double log_latent = -0.5 * double(N) * kLog2Pi + 0.5 * dense_logdet(out.qp) - 0.5 * out.mu.dot(out.qp * out.mu);
  const double log_gauss = -0.5 * double(N) * kLog2Pi + 0.5 * dense_logdet(out.qc);
  out.f = log_prior + log_lik + log_latent - log_gauss;
  return out;
}

Matrix dense_fd_hessian(const ModelSpec& spec, const Vector& theta, const ThetaPrior& prior, double h2) {
  const Index d = theta.size();
  auto phi = [&](const Vector& t) { return -dense_objective(spec, t, prior).f; };
  const double f0 = phi(theta);
  Matrix h(d, d);
  for (Index i = 0; i < d; ++i) {
    Vector p = theta, m = theta;
    p[i] += h2;
    m[i] -= h2;
    h(i, i) = (phi(p) - 2.0 * f0 + phi(m)) / (h2 * h2);
  }
  for (Index i = 0; i < d; ++i)
    for (Index j = i + 1; j < d; ++j) {
      double acc = 0.0;
      for (int si : {1, -1})
        for (int sj : {1, -1}) {
          Vector p = theta;
          p[i] += si * h2;
          p[j] += sj * h2;
          acc += si * sj * phi(p);
        }
      h(i, j) = h(j, i) = acc / (4.0 * h2 * h2);
    }
  return h;
}

}  // namespace stinla::oracle
