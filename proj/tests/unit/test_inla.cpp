#include "stinla/inla.hpp"
#include "stinla/oracle.hpp"
#include "stinla/synth.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

using namespace stinla;

namespace {

const double kLog2Pi = std::log(2.0 * std::numbers::pi);

ModelSpec scalar_spec(double y) {
  ModelSpec s;
  s.n_s = s.n_t = 1;
  s.n_r = 0;
  s.spatial.push_back(path_graph_spatial(1));
  s.temporal.push_back(uniform_temporal(1));
  s.design.push_back(sparse_identity(1));
  s.observations.push_back(Vector::Constant(1, y));
  return s;
}

}  // namespace

TEST(HyperParams, Dimensions) {
  EXPECT_EQ(HyperParams::dimension(1), 4);
  EXPECT_EQ(HyperParams::dimension(3), 15);
  EXPECT_EQ(gradient_task_count(15), 31);
  EXPECT_EQ(gradient_task_count(4), 9);
  EXPECT_EQ(hessian_point_count(2), 9);
  const HyperParams h = HyperParams::zeros(3);
  EXPECT_EQ(h.names().size(), 15u);
  EXPECT_EQ(h.index_log_tau(0), 6);
  EXPECT_EQ(h.index_log_sigma(2), 11);
  EXPECT_EQ(h.index_lambda(0), 12);
}

TEST(Objective, ScalarClosedForm) {
  // Q_p = [1] at theta = 0 (gamma_s = gamma_t = gamma_e = 1), tau = 1
  const Vector theta = Vector::Zero(4);
  const ThetaPrior prior = ThetaPrior::weak(theta);
  const Model m(scalar_spec(0.0), prior);
  const ObjectiveResult r = m.evaluate(theta);
  ASSERT_TRUE(r.feasible);
  EXPECT_NEAR(r.mu[0], 0.0, 1e-15);
  EXPECT_NEAR(r.f, prior.log_density(theta) - 0.5 * kLog2Pi - 0.5 * std::log(2.0), 1e-14);
}

TEST(Objective, NoDataLimit) {
  ModelSpec s = scalar_spec(0.0);
  s.design[0] = SparseMatrix(0, 1);
  s.observations[0] = Vector(0);
  const Vector theta = Vector::Constant(4, 0.3);
  const ThetaPrior prior = ThetaPrior::weak(Vector::Zero(4));
  const ObjectiveResult r = Model(s, prior).evaluate(theta);
  EXPECT_NEAR(r.f, prior.log_density(theta), 1e-14);
}

TEST(Objective, ScalarPosteriorMarginals) {
  const Model m(scalar_spec(3.0), ThetaPrior::weak(Vector::Zero(4)));
  Vector mu, sd;
  m.latent_marginals(Vector::Zero(4), mu, sd);
  EXPECT_NEAR(mu[0], 1.5, 1e-14);
  EXPECT_NEAR(sd[0], 1.0 / std::sqrt(2.0), 1e-14);
}

TEST(Objective, NoDataSdEqualsPriorSd) {
  std::mt19937_64 rng(4);
  ModelSpec s = oracle::random_model(1, 3, 4, 1, 1, rng);
  s.design[0] = SparseMatrix(0, s.latent_size());
  s.observations[0] = Vector(0);
  const Vector theta = oracle::random_theta(1, rng);
  const Model m(s, ThetaPrior::weak(theta));
  Vector mu, sd;
  m.latent_marginals(theta, mu, sd);
  const Matrix qinv = oracle::dense_inverse(Matrix(joint_prior_precision(s, theta)));
  EXPECT_LE((sd - qinv.diagonal().cwiseSqrt()).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Objective, MatchesDenseOracleUnivariate) {
  std::mt19937_64 rng(10);
  for (int rep = 0; rep < 5; ++rep) {
    const ModelSpec s = oracle::random_model(1, 4, 5, 2, 25, rng);
    const Vector theta = oracle::random_theta(1, rng);
    const ThetaPrior prior = ThetaPrior::weak(Vector::Zero(4));
    const ObjectiveResult r = Model(s, prior).evaluate(theta);
    const oracle::DenseObjective d = oracle::dense_objective(s, theta, prior);
    EXPECT_NEAR(r.f, d.f, 1e-8);
    EXPECT_LE((r.mu - d.mu).cwiseAbs().maxCoeff(), 1e-8 * d.mu.cwiseAbs().maxCoeff());
  }
}

TEST(Objective, MatchesDenseOracleTrivariate) {
  std::mt19937_64 rng(11);
  for (int rep = 0; rep < 5; ++rep) {
    const ModelSpec s = oracle::random_model(3, 3, 4, 1, 15, rng);
    const Vector theta = oracle::random_theta(3, rng);
    const ThetaPrior prior = ThetaPrior::weak(Vector::Zero(15));
    for (Index P : {1, 2}) {
      const Model m(s, prior, SolverLayout{P, 1.0, 2, 2});
      const ObjectiveResult r = m.evaluate(theta);
      const oracle::DenseObjective d = oracle::dense_objective(s, theta, prior);
      EXPECT_NEAR(r.f, d.f, 1e-8);
      Vector mu, sd;
      m.latent_marginals(theta, mu, sd);
      EXPECT_LE(((sd - d.sd).array() / d.sd.array()).abs().maxCoeff(), 1e-8);
    }
  }
}

TEST(Objective, ConditionalMeanSolvesNormalEquations) {
  std::mt19937_64 rng(12);
  const ModelSpec s = oracle::random_model(3, 3, 3, 2, 20, rng);
  const Vector theta = oracle::random_theta(3, rng);
  const Model m(s, ThetaPrior::weak(theta));
  const ObjectiveResult r = m.evaluate(theta);
  const SparseMatrix qc = m.conditional_precision(m.prior_precision(theta), theta);
  const Vector b = m.information_vector(theta);
  EXPECT_LE((qc * r.mu - b).norm() / b.norm(), 1e-10);
}

TEST(Objective, DeterministicAndLayoutInvariant) {
  std::mt19937_64 rng(13);
  const ModelSpec s = oracle::random_model(1, 4, 8, 1, 30, rng);
  const Vector theta = oracle::random_theta(1, rng);
  const Model seq(s, ThetaPrior::weak(theta));
  const Model par(s, ThetaPrior::weak(theta), SolverLayout{1, 1.0, 1, 2});
  EXPECT_EQ(seq.evaluate(theta).f, seq.evaluate(theta).f);
  EXPECT_EQ(seq.evaluate(theta).f, par.evaluate(theta).f);
  const Model split(s, ThetaPrior::weak(theta), SolverLayout{3, 1.6, 3, 2});
  EXPECT_EQ(split.evaluate(theta).f, split.evaluate(theta).f);
  EXPECT_NEAR(split.evaluate(theta).f, seq.evaluate(theta).f, 1e-9 * std::abs(seq.evaluate(theta).f));
}

TEST(Objective, InfeasibleIsSignalled) {
  const Model m(scalar_spec(1.0), ThetaPrior::weak(Vector::Zero(4)));
  Vector bad = Vector::Zero(4);
  bad[0] = std::numeric_limits<double>::quiet_NaN();
  EXPECT_FALSE(m.evaluate(bad).feasible);
  bad[0] = 1e4;  // exp overflow
  const ObjectiveResult r = m.evaluate(bad);
  EXPECT_FALSE(r.feasible);
  EXPECT_EQ(r.f, -std::numeric_limits<double>::infinity());
}

TEST(Gradient, QuadraticIsExact) {
  const ScalarFunction f = [](const Vector& t) { return t.squaredNorm(); };
  Vector t(2);
  t << 1.0, 2.0;
  const GradientResult g = fd_gradient(f, t, 1e-3, allocate(3, 2, true));
  EXPECT_TRUE(g.valid);
  EXPECT_EQ(g.evaluations, 5);
  EXPECT_NEAR(g.g[0], 2.0, 1e-10);
  EXPECT_NEAR(g.g[1], 4.0, 1e-10);
}

TEST(Gradient, TaskCountsThroughScheduler) {
  Index calls = 0;
  const ScalarFunction f = [&calls](const Vector& t) {
    ++calls;
    return t.sum();
  };
  fd_gradient(f, Vector::Zero(15), 1e-3, allocate(1, 15, true));
  EXPECT_EQ(calls, 31);
  calls = 0;
  std::vector<TaskTrace> trace;
  fd_gradient(f, Vector::Zero(4), 1e-3, allocate(1, 4, true), &trace);
  EXPECT_EQ(calls, 9);
  EXPECT_EQ(trace.size(), 9u);
}

TEST(Gradient, InfeasibleNeighbourInvalidates) {
  const ScalarFunction f = [](const Vector& t) {
    return t[0] > 0.5 ? std::numeric_limits<double>::infinity() : t.squaredNorm();
  };
  EXPECT_FALSE(fd_gradient(f, Vector::Constant(1, 0.5), 1e-3, allocate(1, 1, true)).valid);
}

TEST(Gradient, SecondOrderConvergence) {
  std::mt19937_64 rng(14);
  const ModelSpec s = oracle::random_model(1, 4, 4, 1, 30, rng);
  const Vector theta = oracle::random_theta(1, rng);
  const Model m(s, ThetaPrior::weak(theta));
  const ScalarFunction f = [&m](const Vector& t) { return m.objective(t); };
  const LayerAllocation alloc = allocate(1, 4, true);
  const Vector g1 = fd_gradient(f, theta, 1e-2, alloc).g;
  const Vector g2 = fd_gradient(f, theta, 1e-3, alloc).g;
  const Vector g3 = fd_gradient(f, theta, 1e-4, alloc).g;
  const double ratio = (g1 - g3).norm() / (g2 - g3).norm();
  EXPECT_GT(ratio, 30.0);
  EXPECT_LT(ratio, 300.0);
}

TEST(Minimize, QuadraticConverges) {
  Vector c(4);
  c << 1.0, -2.0, 0.5, 3.0;
  const ScalarFunction f = [&c](const Vector& t) { return 0.5 * (t - c).squaredNorm(); };
  OptimizerOptions opts;
  opts.gtol = 1e-9;
  opts.max_step = 0.0;
  const MinimizeResult r = minimize(f, Vector::Zero(4), opts, allocate(1, 4, true));
  EXPECT_EQ(r.status, OptimizerStatus::Converged);
  EXPECT_LE((r.theta - c).cwiseAbs().maxCoeff(), 1e-8);
  EXPECT_LE(r.iterations, 6);

  const MinimizeResult again = minimize(f, r.theta, opts, allocate(1, 4, true));
  EXPECT_LT(std::abs(again.f - r.f), opts.gtol * 4);
}

TEST(Minimize, IllConditionedQuadratic) {
  const ScalarFunction f = [](const Vector& t) { return 0.5 * (t[0] * t[0] + 100.0 * t[1] * t[1]) + 0.1 * t[0] * t[1]; };
  OptimizerOptions opts;
  opts.gtol = 1e-8;
  opts.ftol = 0.0;
  const MinimizeResult r = minimize(f, Vector::Constant(2, 3.0), opts, allocate(1, 2, true));
  EXPECT_EQ(r.status, OptimizerStatus::Converged);
  EXPECT_LE(r.theta.cwiseAbs().maxCoeff(), 1e-7);
  EXPECT_EQ(Index(r.trace.size()), r.iterations);
}

TEST(Hessian, QuadraticRecovered) {
  Matrix h(3, 3);
  h << 4.0, 1.0, 0.5, 1.0, 3.0, -0.2, 0.5, -0.2, 2.0;
  const ScalarFunction f = [&h](const Vector& t) { return 0.5 * t.dot(h * t) + t.sum(); };
  const HessianResult r = fd_hessian(f, Vector::Constant(3, 0.7), 1e-2, allocate(2, 3, true));
  EXPECT_EQ(r.evaluations, hessian_point_count(3));
  EXPECT_TRUE(r.positive_definite);
  EXPECT_LE((r.h - h).cwiseAbs().maxCoeff() / h.cwiseAbs().maxCoeff(), 1e-5);
  EXPECT_EQ((r.h - r.h.transpose()).norm(), 0.0);
}

TEST(Hessian, MatchesDenseStencil) {
  std::mt19937_64 rng(15);
  const ModelSpec s = oracle::random_model(1, 3, 4, 1, 25, rng);
  const Vector theta = oracle::random_theta(1, rng);
  const ThetaPrior prior = ThetaPrior::weak(theta);
  const Model m(s, prior);
  const ScalarFunction neg = [&m](const Vector& t) { return -m.objective(t); };
  const HessianResult r = fd_hessian(neg, theta, 1e-2, allocate(3, 4, true));
  const Matrix d = oracle::dense_fd_hessian(s, theta, prior, 1e-2);
  EXPECT_LE((r.h - d).cwiseAbs().maxCoeff(), 1e-5 * d.cwiseAbs().maxCoeff());
}

TEST(Predict, IdentityAndSelector) {
  const Vector mu = Vector::LinSpaced(5, 1.0, 5.0);
  EXPECT_EQ(predict(sparse_identity(5), mu), mu);
  SparseMatrix sel(1, 5);
  sel.insert(0, 3) = 1.0;
  EXPECT_EQ(predict(sel, mu)[0], 4.0);
  EXPECT_THROW(predict(sparse_identity(4), mu), DimensionError);
  std::mt19937_64 rng(16);
  const SparseMatrix a = interpolation_design(5, 1, 0, 7, rng);
  EXPECT_LE((predict(a, mu) - Matrix(a) * mu).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(LoadBalance, Ratio) {
  EXPECT_DOUBLE_EQ(load_balance_ratio(2, 2), 1.0);
  EXPECT_DOUBLE_EQ(load_balance_ratio(2, 0), 0.0);
  EXPECT_DOUBLE_EQ(load_balance_ratio(2, 1), 0.125);
}

TEST(Calibration, UnitVarianceGammaE) {
  const SpatialDiscretization s = path_graph_spatial(5);
  const TemporalDiscretization t = uniform_temporal(4);
  UnivariateHypers h{1.5, 0.8, 1.0, 1.0};
  h.gamma_e = unit_variance_gamma_e(s, t, h);
  const Matrix inv = oracle::dense_inverse(oracle::dense_spatiotemporal_precision(s, t, h));
  EXPECT_NEAR(inv.diagonal().mean(), 1.0, 1e-10);
}
