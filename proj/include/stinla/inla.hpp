#pragma once

#include "stinla/bta_dist.hpp"
#include "stinla/coreg.hpp"
#include "stinla/model.hpp"
#include "stinla/sched.hpp"

#include <functional>
#include <limits>
#include <string>
#include <vector>

namespace stinla {

/// Hyperparameter vector. Univariate (n_v = 1):
///   [log gamma_s, log gamma_t, log gamma_e, log tau_y].
/// Coregional (n_v >= 2):
///   [log gamma_s^1, log gamma_t^1, ..., log gamma_s^nv, log gamma_t^nv,
///    log tau_1 .. log tau_nv, log sigma_1 .. log sigma_nv, lambda_1 .. ].
struct HyperParams {
  Index n_v = 1;
  Vector values;

  static Index dimension(Index n_v);
  static HyperParams zeros(Index n_v);

  Index dim() const { return values.size(); }
  bool coregional() const { return n_v > 1; }
  void validate() const;

  double log_gamma_s(Index process) const;
  double log_gamma_t(Index process) const;
  double log_gamma_e() const;
  double log_tau(Index process) const;
  double log_sigma(Index process) const;
  double lambda(Index k) const;

  Index index_log_tau(Index process) const;
  Index index_log_sigma(Index process) const;
  Index index_lambda(Index k) const;

  /// SPDE parameters of one process in natural scale; gamma_e comes from
  /// theta (univariate) or from `gamma_e` (coregional).
  UnivariateHypers process_hypers(Index process, double gamma_e = 1.0) const;
  Coregionalization coregionalization() const;
  std::vector<std::string> names() const;
};

/// Q_p(theta) of a model (univariate, or the joint coregional prior), in
/// variable-major order.
SparseMatrix joint_prior_precision(const ModelSpec& spec, const Vector& theta);

/// Independent Gaussian priors on every theta component.
struct ThetaPrior {
  Vector mean;
  Vector sd;

  static ThetaPrior weak(const Vector& mean, double sd = 10.0);
  double log_density(const Vector& theta) const;
};

struct SolverLayout {
  Index partitions = 1;
  double lb = 1.0;
  /// Threads per factorization (S3) and for the Q_p / Q_c pair (S2).
  Index s3_workers = 1;
  Index s2_width = 1;
};

struct ObjectiveResult {
  bool feasible = false;
  /// log p(theta | y) up to a constant; -inf when infeasible.
  double f = -std::numeric_limits<double>::infinity();
  double log_prior = 0.0;
  double log_likelihood = 0.0;
  double logdet_qp = 0.0;
  double logdet_qc = 0.0;
  /// Conditional mean, variable-major order.
  Vector mu;
  FlopCounter qp_flops;
  FlopCounter qc_flops;
  /// Index of the failing factorization (0 prior, 1 conditional) when infeasible.
  int failed = -1;
};

/// Precomputed state of one model: observation products and the bound
/// permutation maps of the Q_p and Q_c sparsity patterns.
class Model {
public:
  Model(ModelSpec spec, ThetaPrior prior, SolverLayout layout = {});

  const ModelSpec& spec() const { return spec_; }
  const ThetaPrior& prior() const { return prior_; }
  const SolverLayout& layout() const { return layout_; }
  Index dim_theta() const { return HyperParams::dimension(spec_.n_v); }
  Index size() const { return joint_dimension(spec_); }
  const PermutationMap& permutation() const { return qc_map_; }

  /// Q_p(theta) in variable-major order (joint coregional prior for n_v > 1).
  SparseMatrix prior_precision(const Vector& theta) const;
  SparseMatrix conditional_precision(const SparseMatrix& qp, const Vector& theta) const;
  /// A^T D y, variable-major.
  Vector information_vector(const Vector& theta) const;

  BTAMatrix prior_bta(const SparseMatrix& qp) const;
  BTAMatrix conditional_bta(const SparseMatrix& qc) const;
  PartitionPlan plan() const;

  ObjectiveResult evaluate(const Vector& theta) const;
  double objective(const Vector& theta) const { return evaluate(theta).f; }

  /// Posterior marginal sds of the latent field at theta from the selected
  /// inverse of Q_c, variable-major; also returns the conditional mean.
  void latent_marginals(const Vector& theta, Vector& mu, Vector& sd) const;

private:
  ModelSpec spec_;
  ThetaPrior prior_;
  SolverLayout layout_;
  std::vector<SparseMatrix> ata_;  // per process, lifted to N x N
  std::vector<Vector> aty_;        // per process, length latent_size
  std::vector<double> yty_;
  std::vector<Index> counts_;
  PermutationMap qp_map_;
  PermutationMap qc_map_;
};

/// Arbitrary objective used by the derivative-free helpers; +inf (or NaN)
/// marks an infeasible point.
using ScalarFunction = std::function<double(const Vector&)>;

struct GradientResult {
  double f0 = 0.0;
  Vector g;
  bool valid = false;
  Index evaluations = 0;
};

/// Central differences; task 0 is theta, task 2i+1 theta + h e_i and task
/// 2i+2 theta - h e_i, executed through run_tasks.
GradientResult fd_gradient(const ScalarFunction& fn, const Vector& theta, double h, const LayerAllocation& alloc,
                           std::vector<TaskTrace>* trace = nullptr);
inline Index gradient_task_count(Index dim_theta) { return 2 * dim_theta + 1; }

struct OptimizerOptions {
  double h = 1e-3;
  double h2 = 1e-2;
  double gtol = 1e-3;
  double ftol = 1e-12;
  Index max_iter = 100;
  double c1 = 1e-4;
  Index max_halvings = 20;
  /// Largest allowed infinity-norm of a BFGS step (0 disables the cap).
  double max_step = 1.0;
};

enum class OptimizerStatus { Converged, FunctionTolerance, MaxIterations, LineSearchFailed, Infeasible };
std::string to_string(OptimizerStatus s);

struct IterationRecord {
  Index iteration = 0;
  double f = 0.0;
  double grad_inf = 0.0;
  double step = 0.0;
  Index f_evals = 0;
  double seconds = 0.0;
};

struct MinimizeResult {
  Vector theta;
  double f = 0.0;
  Vector grad;
  Index iterations = 0;
  Index f_evals = 0;
  OptimizerStatus status = OptimizerStatus::MaxIterations;
  std::vector<IterationRecord> trace;

  double grad_inf() const { return grad.size() ? grad.cwiseAbs().maxCoeff() : 0.0; }
};

/// BFGS on the inverse Hessian with Armijo backtracking and
/// finite-difference gradients.
MinimizeResult minimize(const ScalarFunction& fn, const Vector& theta0, const OptimizerOptions& opts,
                        const LayerAllocation& alloc);

struct HessianResult {
  Matrix h;
  bool positive_definite = false;
  Index evaluations = 0;
};

inline Index hessian_point_count(Index d) { return 1 + 2 * d + 2 * d * (d - 1); }
/// Second-order central stencil: 3 points on the diagonal, the four-point
/// cross stencil off the diagonal.
HessianResult fd_hessian(const ScalarFunction& fn, const Vector& theta, double h2, const LayerAllocation& alloc);

struct PosteriorSummary {
  HyperParams theta_mode;
  Vector theta_sd;  // NaN entries when the Hessian is not positive definite
  Matrix hessian;
  bool hessian_pd = false;
  Vector latent_mean;
  Vector latent_sd;
  double logpost_at_mode = 0.0;
  Index iterations = 0;
  Index f_evals = 0;
  OptimizerStatus status = OptimizerStatus::MaxIterations;
  double grad_inf = 0.0;
  std::vector<IterationRecord> trace;
};

/// minimize -> fd_hessian -> latent_marginals.
PosteriorSummary fit(const Model& model, const Vector& theta0, const OptimizerOptions& opts,
                     const LayerAllocation& alloc);

Vector predict(const SparseMatrix& a_pred, const Vector& mu);

/// Asymptotic Q_c / Q_p extra work ratio a^3 / b^3.
double load_balance_ratio(Index b, Index a);

/// gamma_e giving unit mean prior marginal variance of the spatio-temporal
/// field of one process.
double unit_variance_gamma_e(const SpatialDiscretization& s, const TemporalDiscretization& t,
                             const UnivariateHypers& h);

}  // namespace stinla
