#include "stinla/validate.hpp"

#include "stinla/bta_dist.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>

namespace stinla::check {

namespace {

class Stopwatch {
public:
  double seconds() const { return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_).count(); }

private:
  std::chrono::steady_clock::time_point t0_ = std::chrono::steady_clock::now();
};

PropertyResult make(std::string name, Index instances, double worst, double tol, double seconds, bool extra = true) {
  PropertyResult r;
  r.name = std::move(name);
  r.instances = instances;
  r.worst = worst;
  r.tolerance = tol;
  r.pass = extra && std::isfinite(worst) && worst <= tol;
  r.seconds = seconds;
  return r;
}

Vector random_vector(Index n, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector v(n);
  for (Index i = 0; i < n; ++i) v[i] = normal(rng);
  return v;
}

Index pick(std::mt19937_64& rng, Index lo, Index hi) { return std::uniform_int_distribution<Index>(lo, hi)(rng); }

Coregionalization random_coreg(Index nv, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> s(0.5, 2.0), l(-1.0, 1.0);
  Coregionalization c;
  c.sigma.resize(nv);
  c.lambda.resize(lambda_count(nv));
  for (Index i = 0; i < nv; ++i) c.sigma[i] = s(rng);
  for (Index k = 0; k < c.lambda.size(); ++k) c.lambda[k] = l(rng);
  return c;
}

std::vector<SparseMatrix> random_process_priors(const ModelSpec& spec, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.5, 1.5);
  std::vector<SparseMatrix> q;
  for (Index i = 0; i < spec.n_v; ++i)
    q.push_back(build_univariate_prior(spec, UnivariateHypers{u(rng), u(rng), u(rng), 1.0}, i));
  return q;
}

/// BTA position of a variable-major latent index, written out independently
/// of the permutation module.
Index bta_position(Index i, Index nv, Index ns, Index nt, Index nr) {
  const Index lat = ns * nt + nr;
  const Index v = i / lat, r = i % lat;
  if (r < ns * nt) return (r / ns) * nv * ns + v * ns + r % ns;
  return nt * nv * ns + v * nr + (r - ns * nt);
}

bool in_bta_pattern(Index p, Index q, Index n, Index b) {
  const Index bp = p < n * b ? p / b : n;
  const Index bq = q < n * b ? q / b : n;
  return bp == n || bq == n || std::abs(bp - bq) <= 1;
}

}  // namespace

std::vector<PropertyResult> bta_oracle(const std::vector<BtaShape>& shapes, std::mt19937_64& rng) {
  const Stopwatch sw;
  double recon = 0.0, ld = 0.0, res = 0.0, sel = 0.0;
  for (const auto& s : shapes) {
    const BTAMatrix m = oracle::random_spd_bta(s.n, s.b, s.a, rng);
    const Matrix d = m.to_dense();
    const BTAFactor f = factorize(m);
    const Matrix l = f.l.to_dense().triangularView<Eigen::Lower>();
    recon = std::max(recon, oracle::rel_error(l * l.transpose(), d));
    const double want = oracle::dense_logdet(d);
    ld = std::max(ld, std::abs(logdet(f) - want) / std::max(std::abs(want), 1.0));
    const Vector rhs = random_vector(d.rows(), rng);
    res = std::max(res, (d * solve(f, rhs) - rhs).norm() / rhs.norm());
    const Matrix inv = BTAMatrix::from_dense(oracle::dense_inverse(d), s.n, s.b, s.a).to_dense();
    sel = std::max(sel, oracle::max_rel_entry_error(selected_invert(f).to_dense(), inv));
  }
  const double t = sw.seconds();
  const Index k = Index(shapes.size());
  return {make("bta_cholesky_reconstruction", k, recon, kReconstructionTol, t),
          make("bta_logdet", k, ld, kLogdetTol, t), make("bta_solve_residual", k, res, kSolveTol, t),
          make("bta_selected_inverse", k, sel, kSelectedInverseTol, t)};
}

std::vector<PropertyResult> dist_equivalence(const std::vector<DistCase>& cases, std::mt19937_64& rng,
                                             Index workers) {
  const Stopwatch sw;
  double ld = 0.0, sol = 0.0, sel = 0.0;
  bool identical = true;
  Index single = 0;
  for (const auto& c : cases) {
    const BTAMatrix m = oracle::random_spd_bta(c.n, c.b, c.a, rng);
    const BTAFactor s = factorize(m);
    const DistBTAFactor d = d_factorize(m, plan_partitions(c.n, c.partitions, c.lb), workers);
    const Vector rhs = random_vector(m.size(), rng);
    const double ls = logdet(s), lp = logdet(d);
    const Vector xs = solve(s, rhs), xp = d_solve(d, rhs);
    const Matrix ss = selected_invert(s).to_dense(), sp = d_selected_invert(d).to_dense();
    ld = std::max(ld, std::abs(lp - ls) / std::max(std::abs(ls), 1.0));
    sol = std::max(sol, (xp - xs).norm() / xs.norm());
    sel = std::max(sel, oracle::max_rel_entry_error(sp, ss));
    if (c.partitions == 1) {
      ++single;
      identical = identical && lp == ls && (xp - xs).cwiseAbs().maxCoeff() == 0.0 &&
                  (sp - ss).cwiseAbs().maxCoeff() == 0.0;
    }
  }
  const double t = sw.seconds();
  const Index k = Index(cases.size());
  std::vector<PropertyResult> out{make("dist_logdet", k, ld, kDistLogdetTol, t),
                                  make("dist_solve", k, sol, kDistSolveTol, t),
                                  make("dist_selected_inverse", k, sel, kDistSelectedInverseTol, t)};
  PropertyResult bit = make("dist_single_partition_bit_identical", single, identical ? 0.0 : 1.0, 0.0, t);
  bit.detail = identical ? "P=1 outputs bit-identical" : "P=1 outputs differ from the sequential solver";
  out.push_back(bit);
  return out;
}

std::vector<PropertyResult> coreg_duality(Index instances, std::mt19937_64& rng, bool corrupt_permutation) {
  const Stopwatch sw;
  double dense_err = 0.0, bta_err = 0.0, block_err = 0.0;
  bool ok = true;
  std::string note;
  for (Index k = 0; k < instances; ++k) {
    const Index ns = pick(rng, 1, 4), nt = pick(rng, 1, 3), nr = pick(rng, 0, 2);
    const ModelSpec spec = oracle::random_model(3, ns, nt, nr, 1, rng);
    const auto q = random_process_priors(spec, rng);
    const Coregionalization c = random_coreg(3, rng);
    const SparseMatrix joint = assemble_joint_precision(q, c);
    const Matrix jd(joint);

    std::vector<Matrix> sig;
    for (const auto& qi : q) sig.push_back(oracle::dense_inverse(Matrix(qi)));
    const Matrix cov = oracle::dense_joint_covariance(sig, oracle::mixing_matrix(c.sigma, c.lambda));
    dense_err = std::max(dense_err, oracle::rel_error(oracle::dense_inverse(jd), cov));

    PermutationMap map = build_permutation(3, ns, nt, nr);
    if (corrupt_permutation) std::swap(map.forward[0], map.forward[std::size_t(spec.latent_size())]);
    try {
      bind_pattern(map, joint);
      const Matrix sel = selected_invert(factorize(map_to_bta(joint, map))).to_dense();
      const Index n = nt, b = 3 * ns, nn = jd.rows();
      double num = 0.0, den = 0.0;
      for (Index i = 0; i < nn; ++i)
        for (Index j = 0; j < nn; ++j) {
          const Index pi = bta_position(i, 3, ns, nt, nr), pj = bta_position(j, 3, ns, nt, nr);
          if (!in_bta_pattern(pi, pj, n, b)) continue;
          const double diff = sel(pi, pj) - cov(i, j);
          num += diff * diff;
          den += cov(i, j) * cov(i, j);
        }
      bta_err = std::max(bta_err, std::sqrt(num / std::max(den, 1e-300)));
    } catch (const std::exception& e) {
      ok = false;
      note = e.what();
    }

    const Matrix blocks = oracle::three_process_blocks(Matrix(q[0]), Matrix(q[1]), Matrix(q[2]), c.sigma, c.lambda);
    block_err = std::max(block_err, (jd - blocks).cwiseAbs().maxCoeff() / blocks.cwiseAbs().maxCoeff());
  }
  const double t = sw.seconds();
  PropertyResult duality = make("coreg_duality", instances, std::max(dense_err, bta_err), kDualityTol, t, ok);
  char buf[160];
  std::snprintf(buf, sizeof buf, "dense %.3g, through permutation and selected inverse %.3g", dense_err, bta_err);
  duality.detail = ok ? buf : "permuted assembly failed: " + note;
  PropertyResult blocks = make("coreg_three_process_blocks", instances, block_err, kBlockFormulaTol, t);
  blocks.detail = "max entry error relative to the largest entry";
  return {duality, blocks};
}

PropertyResult permutation_similarity(Index instances, std::mt19937_64& rng) {
  const Stopwatch sw;
  double worst = 0.0;
  bool ok = true;
  std::string note;
  for (Index k = 0; k < instances; ++k) {
    const Index nv = pick(rng, 1, 3), ns = pick(rng, 1, 4), nt = pick(rng, 1, 4), nr = pick(rng, 0, 2);
    const ModelSpec spec = oracle::random_model(nv, ns, nt, nr, pick(rng, 1, 12), rng);
    const Vector theta = oracle::random_theta(nv, rng);
    const Model model(spec, ThetaPrior::weak(theta));
    const SparseMatrix qc = model.conditional_precision(model.prior_precision(theta), theta);
    PermutationMap map = build_permutation(nv, ns, nt, nr);
    const Index n = nt, b = nv * ns, a = nv * nr;
    if (map.size() != n * b + a || joint_dimension(spec) != n * b + a || qc.rows() != n * b + a) {
      ok = false;
      note = "N != n b + a";
      continue;
    }
    const Matrix p = oracle::permutation_matrix(map.forward);
    const Matrix dense(qc);
    const Matrix pq = p * dense * p.transpose();
    try {
      bind_pattern(map, qc);
      if ((map_to_bta(qc, map).to_dense() - pq).cwiseAbs().maxCoeff() != 0.0 ||
          (Matrix(permute(qc, map)) - pq).cwiseAbs().maxCoeff() != 0.0) {
        ok = false;
        note = "BTA image differs from P Q P^T";
      }
    } catch (const std::exception& e) {
      ok = false;
      note = e.what();
    }
    for (Index i = 0; i < pq.rows(); ++i)
      for (Index j = 0; j < pq.cols(); ++j)
        if (pq(i, j) != 0.0 && !in_bta_pattern(i, j, n, b)) {
          ok = false;
          note = "nonzero outside the BTA envelope";
        }
    const Eigen::SelfAdjointEigenSolver<Matrix> e1(dense, Eigen::EigenvaluesOnly), e2(pq, Eigen::EigenvaluesOnly);
    const double scale = e1.eigenvalues().cwiseAbs().maxCoeff();
    worst = std::max(worst, (e1.eigenvalues() - e2.eigenvalues()).cwiseAbs().maxCoeff() / scale);
    const double l1 = oracle::dense_logdet(dense), l2 = oracle::dense_logdet(pq);
    worst = std::max(worst, std::abs(l1 - l2) / std::max(std::abs(l1), 1.0));
  }
  PropertyResult r = make("permutation_similarity", instances, worst, kSimilarityTol, sw.seconds(), ok);
  r.detail = ok ? "eigenvalues, logdet, envelope and N = n b + a" : note;
  return r;
}

std::vector<PropertyResult> objective_oracle(Index instances, std::mt19937_64& rng) {
  const Stopwatch sw;
  double f_err = 0.0, sd_err = 0.0;
  double ratio_lo = std::numeric_limits<double>::infinity(), ratio_hi = 0.0;
  Index ratio_cases = 0;
  for (Index k = 0; k < instances; ++k) {
    const Index ns = pick(rng, 2, 4), nt = pick(rng, 2, 4), nr = pick(rng, 0, 2);
    const ModelSpec spec = oracle::random_model(3, ns, nt, nr, pick(rng, 5, 20), rng);
    const Vector theta = oracle::random_theta(3, rng);
    const ThetaPrior prior = ThetaPrior::weak(Vector::Zero(theta.size()));
    const Model model(spec, prior);
    const oracle::DenseObjective d = oracle::dense_objective(spec, theta, prior);
    f_err = std::max(f_err, std::abs(model.objective(theta) - d.f));
    Vector mu, sd;
    model.latent_marginals(theta, mu, sd);
    sd_err = std::max(sd_err, ((sd - d.sd).array() / d.sd.array()).abs().maxCoeff());
    if (k < 5) {
      const ScalarFunction f = [&model](const Vector& t) { return model.objective(t); };
      const LayerAllocation alloc = allocate(1, theta.size(), true);
      const Vector g1 = fd_gradient(f, theta, 1e-2, alloc).g;
      const Vector g2 = fd_gradient(f, theta, 1e-3, alloc).g;
      const Vector g3 = fd_gradient(f, theta, 1e-4, alloc).g;
      const double ratio = (g1 - g3).norm() / (g2 - g3).norm();
      ratio_lo = std::min(ratio_lo, ratio);
      ratio_hi = std::max(ratio_hi, ratio);
      ++ratio_cases;
    }
  }
  const double t = sw.seconds();
  PropertyResult obj = make("objective_dense", instances, f_err, kObjectiveTol, t);
  obj.detail = "absolute error";
  PropertyResult lat = make("latent_sd_dense", instances, sd_err, kLatentSdTol, t);
  lat.detail = "relative error";
  const bool in_range = ratio_lo >= kGradientRatioLow && ratio_hi <= kGradientRatioHigh;
  PropertyResult grad = make("gradient_second_order", ratio_cases, in_range ? 0.0 : 1.0, 0.0, t);
  char buf[128];
  std::snprintf(buf, sizeof buf, "error ratio h=1e-2 vs h=1e-3 in [%.1f, %.1f], required [%g, %g]", ratio_lo,
                ratio_hi, kGradientRatioLow, kGradientRatioHigh);
  grad.detail = buf;
  return {obj, lat, grad};
}

std::vector<PropertyResult> run_suite(const SuiteOptions& opts) {
  std::mt19937_64 rng(opts.seed);
  std::vector<PropertyResult> out;
  const auto append = [&out](std::vector<PropertyResult> r) { out.insert(out.end(), r.begin(), r.end()); };

  std::vector<BtaShape> shapes;
  for (Index k = 0; k < 4 * opts.instances; ++k) shapes.push_back({pick(rng, 1, 8), pick(rng, 1, 6), pick(rng, 0, 4)});
  append(bta_oracle(shapes, rng));

  std::vector<DistCase> cases;
  for (Index P = 1; P <= 4; ++P)
    for (double lb : {1.0, 1.6})
      for (Index k = 0; k < std::max<Index>(opts.instances / 4, 2); ++k)
        cases.push_back({P, lb, pick(rng, 2 * P, 24), pick(rng, 1, 5), pick(rng, 0, 3)});
  append(dist_equivalence(cases, rng));

  append(coreg_duality(opts.instances, rng, opts.corrupt_permutation));
  out.push_back(permutation_similarity(opts.instances, rng));
  append(objective_oracle(opts.instances, rng));
  return out;
}

std::string describe(const PropertyResult& r) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%s %s instances=%lld worst=%.3g tol=%.3g time=%.2fs", r.pass ? "PASS" : "FAIL",
                r.name.c_str(), static_cast<long long>(r.instances), r.worst, r.tolerance, r.seconds);
  std::string s = buf;
  if (!r.detail.empty()) s += " (" + r.detail + ")";
  return s;
}

}  // namespace stinla::check
