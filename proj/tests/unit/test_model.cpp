#include "stinla/model.hpp"
#include "stinla/oracle.hpp"

#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>

using namespace stinla;

namespace {

ModelSpec small_spec(Index n_s, Index n_t, Index n_r) {
  ModelSpec s;
  s.n_s = n_s;
  s.n_t = n_t;
  s.n_r = n_r;
  s.spatial.push_back(path_graph_spatial(n_s));
  s.temporal.push_back(uniform_temporal(n_t));
  s.design.emplace_back(0, n_s * n_t + n_r);
  s.observations.emplace_back(0);
  return s;
}

}  // namespace

TEST(Model, ScalarDegenerateCase) {
  ModelSpec s = small_spec(1, 1, 0);
  const SparseMatrix q = build_univariate_prior(s, UnivariateHypers{}, 0);
  ASSERT_EQ(q.rows(), 1);
  EXPECT_DOUBLE_EQ(Matrix(q)(0, 0), 1.0);
}

TEST(Model, TimeBandwidthIsOne) {
  ModelSpec s = small_spec(2, 3, 0);
  const Matrix q(build_univariate_prior(s, UnivariateHypers{1.3, 0.7, 1.1, 1.0}, 0));
  EXPECT_EQ(q.block(0, 4, 2, 2).norm(), 0.0);
  EXPECT_EQ(q.block(4, 0, 2, 2).norm(), 0.0);
  EXPECT_GT(q.block(0, 2, 2, 2).norm(), 0.0);
}

TEST(Model, PriorIsSymmetricPositiveDefinite) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.2, 2.0);
  for (int rep = 0; rep < 10; ++rep) {
    ModelSpec s = small_spec(3, 4, 2);
    Vector c(3);
    c << u(rng), u(rng), u(rng);
    s.spatial[0].c = sparse_diagonal(c);
    const UnivariateHypers h{u(rng), u(rng), u(rng), 1.0};
    const Matrix q(build_univariate_prior(s, h, 0));
    EXPECT_LE((q - q.transpose()).cwiseAbs().maxCoeff(), 1e-12 * q.cwiseAbs().maxCoeff());
    Eigen::SelfAdjointEigenSolver<Matrix> es(q);
    EXPECT_GT(es.eigenvalues().minCoeff(), 0.0);
    EXPECT_DOUBLE_EQ(q(12, 12), 1e-3);
    EXPECT_EQ(q.block(0, 12, 12, 2).norm(), 0.0);
  }
}

TEST(Model, MatchesDenseKroneckerOracle) {
  const SpatialDiscretization sp = path_graph_spatial(4, 1.7);
  const TemporalDiscretization tp = uniform_temporal(3, 0.6);
  const UnivariateHypers h{1.4, 0.8, 2.2, 1.0};
  const Matrix q(build_spatiotemporal_precision(sp, tp, h));
  const Matrix d = oracle::dense_spatiotemporal_precision(sp, tp, h);
  EXPECT_LE(oracle::rel_error(q, d), 1e-14);
}

TEST(Model, GammaEScalesExactly) {
  const SpatialDiscretization sp = path_graph_spatial(3);
  const TemporalDiscretization tp = uniform_temporal(4);
  UnivariateHypers h{1.2, 0.9, 1.0, 1.0};
  const Matrix q1(build_spatiotemporal_precision(sp, tp, h));
  h.gamma_e = 2.5;
  const Matrix q2(build_spatiotemporal_precision(sp, tp, h));
  EXPECT_LE((q2 - 2.5 * q1).cwiseAbs().maxCoeff(), 1e-13 * q1.cwiseAbs().maxCoeff());
  EXPECT_NEAR(oracle::dense_logdet(q2), oracle::dense_logdet(q1) + 12.0 * std::log(2.5), 1e-10);
}

TEST(Model, RejectsInvalidInputs) {
  ModelSpec s = small_spec(2, 2, 0);
  EXPECT_THROW(build_univariate_prior(s, UnivariateHypers{-1.0, 1.0, 1.0, 1.0}, 0), std::invalid_argument);
  EXPECT_THROW(build_univariate_prior(s, UnivariateHypers{}, 1), DimensionError);
  s.design[0] = SparseMatrix(0, 3);
  EXPECT_THROW(s.validate(), DimensionError);
  ModelSpec t = small_spec(2, 2, 0);
  t.temporal[0] = uniform_temporal(3);
  EXPECT_THROW(t.validate(), DimensionError);
}

TEST(Model, ConditionalPrecision) {
  SparseMatrix qp = sparse_diagonal(Vector::Ones(1));
  SparseMatrix a = sparse_diagonal(Vector::Ones(1));
  EXPECT_DOUBLE_EQ(Matrix(build_conditional_precision(qp, a, Vector::Ones(1)))(0, 0), 2.0);

  std::mt19937_64 rng(7);
  ModelSpec s = oracle::random_model(1, 3, 3, 1, 12, rng);
  const SparseMatrix p = build_univariate_prior(s, UnivariateHypers{1.1, 0.9, 1.0, 1.0}, 0);
  const Matrix zero_d(build_conditional_precision(p, s.design[0], Vector::Zero(12)));
  EXPECT_EQ((zero_d - Matrix(p)).norm(), 0.0);
  Vector d = Vector::LinSpaced(12, 0.5, 3.0);
  const Matrix qc(build_conditional_precision(p, s.design[0], d));
  const Matrix ad(s.design[0]);
  EXPECT_LE((qc - (Matrix(p) + ad.transpose() * d.asDiagonal() * ad)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Model, JointDimension) {
  EXPECT_EQ(joint_dimension(3, 4210, 48, 2), 606246);
  EXPECT_EQ(joint_dimension(1, 4002, 250, 6), 1000506);
  EXPECT_EQ(joint_dimension(1, 1, 1, 0), 1);
}

TEST(Model, Generators) {
  const SpatialDiscretization s = path_graph_spatial(5, 2.0);
  EXPECT_NO_THROW(s.validate());
  EXPECT_NEAR(Vector(s.c.diagonal()).sum(), 2.0, 1e-15);
  EXPECT_NEAR((Matrix(s.g) * Vector::Ones(5)).norm(), 0.0, 1e-14);
  const TemporalDiscretization t = uniform_temporal(4, 0.5);
  EXPECT_NO_THROW(t.validate());
  EXPECT_NEAR((Matrix(t.m2) * Vector::Ones(4)).norm(), 0.0, 1e-14);
  EXPECT_EQ(Matrix(t.m1).diagonal().norm(), 0.0);
}
