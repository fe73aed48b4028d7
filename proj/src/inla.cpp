#include "stinla/inla.hpp"

#include <chrono>
#include <cmath>
#include <numbers>
#include <optional>

namespace stinla {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
const double kLog2Pi = std::log(2.0 * std::numbers::pi);

bool all_finite(const Vector& v) { return v.allFinite(); }

// Log-scale entries whose exponential under- or overflows give no usable model.
bool representable(const HyperParams& hp) {
  const Index first_lambda = hp.coregional() ? hp.index_lambda(0) : hp.dim();
  for (Index i = 0; i < first_lambda; ++i) {
    const double v = std::exp(hp.values[i]);
    if (!std::isfinite(v) || !(v > 0.0)) return false;
  }
  return true;
}

}  // namespace

Index HyperParams::dimension(Index n_v) {
  if (n_v < 1) throw DimensionError("n_v must be positive");
  if (n_v == 1) return 4;
  return 2 * n_v + n_v + n_v + lambda_count(n_v);
}

HyperParams HyperParams::zeros(Index n_v) { return HyperParams{n_v, Vector::Zero(dimension(n_v))}; }

void HyperParams::validate() const {
  if (values.size() != dimension(n_v))
    throw DimensionError("theta has " + std::to_string(values.size()) + " entries, expected " +
                         std::to_string(dimension(n_v)));
}

double HyperParams::log_gamma_s(Index i) const { return coregional() ? values[2 * i] : values[0]; }
double HyperParams::log_gamma_t(Index i) const { return coregional() ? values[2 * i + 1] : values[1]; }
double HyperParams::log_gamma_e() const {
  if (coregional()) throw std::logic_error("gamma_e is not a hyperparameter of coregional models");
  return values[2];
}
Index HyperParams::index_log_tau(Index i) const { return coregional() ? 2 * n_v + i : 3; }
Index HyperParams::index_log_sigma(Index i) const {
  if (!coregional()) throw std::logic_error("sigma only exists for coregional models");
  return 3 * n_v + i;
}
Index HyperParams::index_lambda(Index k) const {
  if (!coregional()) throw std::logic_error("lambda only exists for coregional models");
  return 4 * n_v + k;
}
double HyperParams::log_tau(Index i) const { return values[index_log_tau(i)]; }
double HyperParams::log_sigma(Index i) const { return values[index_log_sigma(i)]; }
double HyperParams::lambda(Index k) const { return values[index_lambda(k)]; }

UnivariateHypers HyperParams::process_hypers(Index i, double gamma_e) const {
  UnivariateHypers h;
  h.gamma_s = std::exp(log_gamma_s(i));
  h.gamma_t = std::exp(log_gamma_t(i));
  h.gamma_e = coregional() ? gamma_e : std::exp(log_gamma_e());
  h.tau_y = std::exp(log_tau(i));
  return h;
}

Coregionalization HyperParams::coregionalization() const {
  Coregionalization c;
  c.sigma = Vector::Ones(n_v);
  c.lambda = Vector::Zero(lambda_count(n_v));
  if (coregional()) {
    for (Index i = 0; i < n_v; ++i) c.sigma[i] = std::exp(log_sigma(i));
    for (Index k = 0; k < c.lambda.size(); ++k) c.lambda[k] = lambda(k);
  }
  return c;
}

std::vector<std::string> HyperParams::names() const {
  if (!coregional()) return {"log_gamma_s", "log_gamma_t", "log_gamma_e", "log_tau_y"};
  std::vector<std::string> out;
  for (Index i = 1; i <= n_v; ++i) {
    out.push_back("log_gamma_s_" + std::to_string(i));
    out.push_back("log_gamma_t_" + std::to_string(i));
  }
  for (Index i = 1; i <= n_v; ++i) out.push_back("log_tau_y_" + std::to_string(i));
  for (Index i = 1; i <= n_v; ++i) out.push_back("log_sigma_" + std::to_string(i));
  for (Index k = 1; k <= lambda_count(n_v); ++k) out.push_back("lambda_" + std::to_string(k));
  return out;
}

ThetaPrior ThetaPrior::weak(const Vector& mean, double sd) {
  return ThetaPrior{mean, Vector::Constant(mean.size(), sd)};
}

double ThetaPrior::log_density(const Vector& theta) const {
  if (theta.size() != mean.size() || sd.size() != mean.size()) throw DimensionError("theta prior dimension mismatch");
  double s = 0.0;
  for (Index i = 0; i < theta.size(); ++i) {
    const double z = (theta[i] - mean[i]) / sd[i];
    s += -0.5 * z * z - std::log(sd[i]) - 0.5 * kLog2Pi;
  }
  return s;
}

Model::Model(ModelSpec spec, ThetaPrior prior, SolverLayout layout)
    : spec_(std::move(spec)), prior_(std::move(prior)), layout_(layout) {
  spec_.validate();
  const Index d = dim_theta();
  if (prior_.mean.size() != d || prior_.sd.size() != d) throw DimensionError("theta prior must have dim(theta) entries");
  for (Index i = 0; i < d; ++i)
    if (!(prior_.sd[i] > 0.0)) throw std::invalid_argument("theta prior sds must be positive");
  if (layout_.partitions < 1) throw PlanningError("partition count must be at least one");
  plan();  // rejects infeasible layouts before any evaluation

  const Index nv = spec_.n_v, lat = spec_.latent_size(), N = size();
  for (Index i = 0; i < nv; ++i) {
    const SparseMatrix& a = spec_.design[std::size_t(i)];
    const Vector& y = spec_.observations[std::size_t(i)];
    const SparseMatrix at = a.transpose();
    const SparseMatrix ata = at * a;
    std::vector<Triplet> trip;
    trip.reserve(std::size_t(ata.nonZeros()));
    for (Index c = 0; c < ata.outerSize(); ++c)
      for (SparseMatrix::InnerIterator it(ata, c); it; ++it)
        trip.emplace_back(int(i * lat + it.row()), int(i * lat + it.col()), it.value());
    SparseMatrix lifted(N, N);
    lifted.setFromTriplets(trip.begin(), trip.end());
    lifted.makeCompressed();
    ata_.push_back(std::move(lifted));
    aty_.push_back(at * y);
    yty_.push_back(y.squaredNorm());
    counts_.push_back(y.size());
  }

  const Vector theta = HyperParams::zeros(nv).values;
  const SparseMatrix qp = prior_precision(theta);
  const SparseMatrix qc = conditional_precision(qp, theta);
  qp_map_ = build_permutation(nv, spec_.n_s, spec_.n_t, spec_.n_r);
  qc_map_ = qp_map_;
  bind_pattern(qp_map_, qp);
  bind_pattern(qc_map_, qc);
}

SparseMatrix joint_prior_precision(const ModelSpec& spec, const Vector& theta) {
  const HyperParams hp{spec.n_v, theta};
  hp.validate();
  if (!hp.coregional()) return build_univariate_prior(spec, hp.process_hypers(0), 0);
  std::vector<SparseMatrix> q;
  for (Index k = 0; k < spec.n_v; ++k)
    q.push_back(build_univariate_prior(spec, hp.process_hypers(k, spec.process_gamma_e(k)), k));
  return assemble_joint_precision(q, hp.coregionalization());
}

SparseMatrix Model::prior_precision(const Vector& theta) const { return joint_prior_precision(spec_, theta); }

SparseMatrix Model::conditional_precision(const SparseMatrix& qp, const Vector& theta) const {
  const HyperParams hp{spec_.n_v, theta};
  SparseMatrix qc = qp;
  for (Index i = 0; i < spec_.n_v; ++i) qc = qc + std::exp(hp.log_tau(i)) * ata_[std::size_t(i)];
  qc.makeCompressed();
  return qc;
}

Vector Model::information_vector(const Vector& theta) const {
  const HyperParams hp{spec_.n_v, theta};
  const Index lat = spec_.latent_size();
  Vector r(size());
  for (Index i = 0; i < spec_.n_v; ++i) r.segment(i * lat, lat) = std::exp(hp.log_tau(i)) * aty_[std::size_t(i)];
  return r;
}

BTAMatrix Model::prior_bta(const SparseMatrix& qp) const { return map_to_bta(qp, qp_map_); }
BTAMatrix Model::conditional_bta(const SparseMatrix& qc) const { return map_to_bta(qc, qc_map_); }
PartitionPlan Model::plan() const { return plan_partitions(spec_.n_t, layout_.partitions, layout_.lb); }

ObjectiveResult Model::evaluate(const Vector& theta) const {
  ObjectiveResult r;
  if (theta.size() != dim_theta()) throw DimensionError("theta dimension mismatch");
  if (!all_finite(theta)) return r;
  const HyperParams hp{spec_.n_v, theta};
  if (!representable(hp)) return r;
  r.log_prior = prior_.log_density(theta);

  const SparseMatrix qp = prior_precision(theta);
  const SparseMatrix qc = conditional_precision(qp, theta);
  const PartitionPlan pl = plan();
  const Vector rhs = to_bta_order(information_vector(theta), qc_map_);

  std::optional<DistBTAFactor> fp, fc;
  Vector mu_bta;
  bool failed[2] = {false, false};
  parallel_for(2, layout_.s2_width, [&](TaskIndex task) {
    try {
      if (task == 0) {
        fp = d_factorize(prior_bta(qp), pl, layout_.s3_workers);
      } else {
        fc = d_factorize(conditional_bta(qc), pl, layout_.s3_workers);
        mu_bta = d_solve(*fc, rhs);
      }
    } catch (const NotPositiveDefinite&) {
      failed[task] = true;
    }
  });
  if (failed[0] || failed[1]) {
    r.failed = failed[0] ? 0 : 1;
    return r;
  }
  r.mu = from_bta_order(mu_bta, qc_map_);
  r.qp_flops = fp->total_flops();
  r.qc_flops = fc->total_flops();
  r.logdet_qp = logdet(*fp);
  r.logdet_qc = logdet(*fc);

  const Index lat = spec_.latent_size();
  r.log_likelihood = 0.0;
  for (Index i = 0; i < spec_.n_v; ++i) {
    const double tau = std::exp(hp.log_tau(i));
    const Vector resid = spec_.observations[std::size_t(i)] - spec_.design[std::size_t(i)] * r.mu.segment(i * lat, lat);
    r.log_likelihood += 0.5 * double(counts_[std::size_t(i)]) * (std::log(tau) - kLog2Pi) - 0.5 * tau * resid.squaredNorm();
  }
  const double quad = r.mu.dot(qp * r.mu);
  r.f = r.log_prior + r.log_likelihood + 0.5 * r.logdet_qp - 0.5 * quad - 0.5 * r.logdet_qc;
  r.feasible = std::isfinite(r.f);
  if (!r.feasible) r.f = -kInf;
  return r;
}

void Model::latent_marginals(const Vector& theta, Vector& mu, Vector& sd) const {
  const SparseMatrix qp = prior_precision(theta);
  const SparseMatrix qc = conditional_precision(qp, theta);
  const DistBTAFactor fc = d_factorize(conditional_bta(qc), plan(), layout_.s3_workers);
  mu = from_bta_order(d_solve(fc, to_bta_order(information_vector(theta), qc_map_)), qc_map_);
  const BTAMatrix s = d_selected_invert(fc);
  Vector var(s.size());
  const Index b = s.b(), a = s.a();
  for (Index i = 0; i < s.n(); ++i) var.segment(i * b, b) = s.diag(i).diagonal();
  if (a > 0) var.tail(a) = s.tip().diagonal();
  sd = from_bta_order(var.cwiseSqrt(), qc_map_);
}

GradientResult fd_gradient(const ScalarFunction& fn, const Vector& theta, double h, const LayerAllocation& alloc,
                           std::vector<TaskTrace>* trace) {
  if (!(h > 0.0)) throw std::invalid_argument("finite-difference step must be positive");
  const Index d = theta.size();
  std::vector<std::function<double()>> tasks;
  tasks.reserve(std::size_t(gradient_task_count(d)));
  tasks.emplace_back([&] { return fn(theta); });
  for (Index i = 0; i < d; ++i) {
    tasks.emplace_back([&, i] {
      Vector t = theta;
      t[i] += h;
      return fn(t);
    });
    tasks.emplace_back([&, i] {
      Vector t = theta;
      t[i] -= h;
      return fn(t);
    });
  }
  const std::vector<double> v = run_tasks(tasks, alloc, trace);
  GradientResult g;
  g.evaluations = Index(v.size());
  g.f0 = v[0];
  g.g.resize(d);
  g.valid = std::isfinite(v[0]);
  for (Index i = 0; i < d; ++i) {
    const double fp = v[std::size_t(2 * i + 1)], fm = v[std::size_t(2 * i + 2)];
    g.valid = g.valid && std::isfinite(fp) && std::isfinite(fm);
    g.g[i] = (fp - fm) / (2.0 * h);
  }
  return g;
}

std::string to_string(OptimizerStatus s) {
  switch (s) {
    case OptimizerStatus::Converged: return "converged";
    case OptimizerStatus::FunctionTolerance: return "function_tolerance";
    case OptimizerStatus::MaxIterations: return "max_iterations";
    case OptimizerStatus::LineSearchFailed: return "line_search_failed";
    case OptimizerStatus::Infeasible: return "infeasible";
  }
  return "unknown";
}

MinimizeResult minimize(const ScalarFunction& fn, const Vector& theta0, const OptimizerOptions& opts,
                        const LayerAllocation& alloc) {
  using Clock = std::chrono::steady_clock;
  if (!all_finite(theta0)) throw std::invalid_argument("theta0 must be finite");
  const Index d = theta0.size();
  MinimizeResult res;
  res.theta = theta0;

  GradientResult g = fd_gradient(fn, theta0, opts.h, alloc);
  res.f_evals = g.evaluations;
  res.f = g.f0;
  res.grad = g.g;
  if (!g.valid) {
    res.status = OptimizerStatus::Infeasible;
    return res;
  }

  Matrix hinv = Matrix::Identity(d, d);
  bool scaled = false, identity = true;
  res.status = OptimizerStatus::MaxIterations;
  if (res.grad_inf() <= opts.gtol) {
    res.status = OptimizerStatus::Converged;
    return res;
  }

  while (res.iterations < opts.max_iter) {
    const auto t0 = Clock::now();
    Vector p = -hinv * res.grad;
    if (res.grad.dot(p) >= 0.0) {
      hinv.setIdentity();
      identity = true;
      p = -res.grad;
    }
    const double pmax = p.cwiseAbs().maxCoeff();
    if (opts.max_step > 0.0 && pmax > opts.max_step) p *= opts.max_step / pmax;
    const double slope = res.grad.dot(p);

    double alpha = 1.0;
    bool accepted = false;
    Vector xn;
    for (Index k = 0; k <= opts.max_halvings; ++k, alpha *= 0.5) {
      xn = res.theta + alpha * p;
      const double fx = fn(xn);
      ++res.f_evals;
      if (std::isfinite(fx) && fx <= res.f + opts.c1 * alpha * slope) {
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      if (!identity) {
        hinv.setIdentity();
        identity = true;
        continue;
      }
      res.status = OptimizerStatus::LineSearchFailed;
      break;
    }

    GradientResult gn = fd_gradient(fn, xn, opts.h, alloc);
    res.f_evals += gn.evaluations;
    if (!gn.valid) {
      res.status = OptimizerStatus::LineSearchFailed;
      break;
    }
    const Vector s = xn - res.theta;
    const Vector y = gn.g - res.grad;
    const double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      if (!scaled) {
        hinv = (sy / y.squaredNorm()) * Matrix::Identity(d, d);
        scaled = true;
      }
      const double rho = 1.0 / sy;
      const Matrix v = Matrix::Identity(d, d) - rho * y * s.transpose();
      hinv = v.transpose() * hinv * v + rho * s * s.transpose();
      identity = false;
    }
    const double fprev = res.f;
    res.theta = xn;
    res.f = gn.f0;
    res.grad = gn.g;
    ++res.iterations;
    res.trace.push_back(IterationRecord{res.iterations, res.f, res.grad_inf(), alpha * p.cwiseAbs().maxCoeff(),
                                        res.f_evals, std::chrono::duration<double>(Clock::now() - t0).count()});
    if (res.grad_inf() <= opts.gtol) {
      res.status = OptimizerStatus::Converged;
      break;
    }
    if (std::abs(fprev - res.f) <= opts.ftol * std::max(1.0, std::abs(res.f))) {
      res.status = OptimizerStatus::FunctionTolerance;
      break;
    }
  }
  return res;
}

HessianResult fd_hessian(const ScalarFunction& fn, const Vector& theta, double h2, const LayerAllocation& alloc) {
  if (!(h2 > 0.0)) throw std::invalid_argument("finite-difference step must be positive");
  const Index d = theta.size();
  std::vector<Vector> points;
  points.reserve(std::size_t(hessian_point_count(d)));
  points.push_back(theta);
  for (Index i = 0; i < d; ++i) {
    Vector p = theta, m = theta;
    p[i] += h2;
    m[i] -= h2;
    points.push_back(p);
    points.push_back(m);
  }
  for (Index i = 0; i < d; ++i)
    for (Index j = i + 1; j < d; ++j)
      for (int si : {1, -1})
        for (int sj : {1, -1}) {
          Vector p = theta;
          p[i] += si * h2;
          p[j] += sj * h2;
          points.push_back(p);
        }
  std::vector<std::function<double()>> tasks;
  for (const auto& p : points) tasks.emplace_back([&fn, &p] { return fn(p); });
  const std::vector<double> v = run_tasks(tasks, alloc);

  HessianResult hr;
  hr.evaluations = Index(v.size());
  hr.h = Matrix::Zero(d, d);
  const double f0 = v[0], hh = h2 * h2;
  for (Index i = 0; i < d; ++i)
    hr.h(i, i) = (v[std::size_t(1 + 2 * i)] - 2.0 * f0 + v[std::size_t(2 + 2 * i)]) / hh;
  std::size_t k = std::size_t(1 + 2 * d);
  for (Index i = 0; i < d; ++i)
    for (Index j = i + 1; j < d; ++j, k += 4) {
      const double hij = (v[k] - v[k + 1] - v[k + 2] + v[k + 3]) / (4.0 * hh);
      hr.h(i, j) = hij;
      hr.h(j, i) = hij;
    }
  hr.h = 0.5 * (hr.h + hr.h.transpose()).eval();
  Eigen::LLT<Matrix> llt(hr.h);
  hr.positive_definite = hr.h.allFinite() && llt.info() == Eigen::Success;
  return hr;
}

PosteriorSummary fit(const Model& model, const Vector& theta0, const OptimizerOptions& opts,
                     const LayerAllocation& alloc) {
  const ScalarFunction neg = [&model](const Vector& t) {
    const ObjectiveResult r = model.evaluate(t);
    return r.feasible ? -r.f : kInf;
  };
  const MinimizeResult mr = minimize(neg, theta0, opts, alloc);
  PosteriorSummary s;
  s.theta_mode = HyperParams{model.spec().n_v, mr.theta};
  s.logpost_at_mode = -mr.f;
  s.iterations = mr.iterations;
  s.f_evals = mr.f_evals;
  s.status = mr.status;
  s.grad_inf = mr.grad_inf();
  s.trace = mr.trace;
  if (mr.status == OptimizerStatus::Infeasible) return s;

  const HessianResult hr = fd_hessian(neg, mr.theta, opts.h2, alloc);
  s.f_evals += hr.evaluations;
  s.hessian = hr.h;
  s.hessian_pd = hr.positive_definite;
  s.theta_sd = Vector::Constant(mr.theta.size(), std::numeric_limits<double>::quiet_NaN());
  if (hr.positive_definite) s.theta_sd = hr.h.inverse().diagonal().cwiseSqrt();
  model.latent_marginals(mr.theta, s.latent_mean, s.latent_sd);
  return s;
}

Vector predict(const SparseMatrix& a_pred, const Vector& mu) {
  if (a_pred.cols() != mu.size())
    throw DimensionError("prediction matrix has " + std::to_string(a_pred.cols()) + " columns, latent field has " +
                         std::to_string(mu.size()) + " entries");
  return a_pred * mu;
}

double load_balance_ratio(Index b, Index a) {
  if (b < 1 || a < 0) throw DimensionError("load balance ratio needs b >= 1 and a >= 0");
  const double r = double(a) / double(b);
  return r * r * r;
}

double unit_variance_gamma_e(const SpatialDiscretization& s, const TemporalDiscretization& t,
                             const UnivariateHypers& h) {
  UnivariateHypers unit = h;
  unit.gamma_e = 1.0;
  const SparseMatrix q = build_spatiotemporal_precision(s, t, unit);
  PermutationMap map = identity_permutation(t.size(), s.size(), 0);
  bind_pattern(map, q);
  const BTAMatrix inv = selected_invert(factorize(map_to_bta(q, map)));
  double sum = 0.0;
  for (Index i = 0; i < inv.n(); ++i) sum += inv.diag(i).trace();
  return sum / double(inv.size());
}

}  // namespace stinla
