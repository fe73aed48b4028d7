#include "stinla/inla.hpp"
#include "stinla/synth.hpp"

#include <gtest/gtest.h>

using namespace stinla;

TEST(Synth, NoiselessLimit) {
  SynthSettings s;
  s.n_s = 6;
  s.n_t = 4;
  s.m = 40;
  Vector theta(4);
  theta << 0.5, 0.0, 0.0, std::log(1e12);
  const SyntheticData d = generate_synthetic(s, theta, 3);
  const Vector fit = d.spec.design[0] * d.x_true;
  EXPECT_LE((d.spec.observations[0] - fit).cwiseAbs().maxCoeff(), 1e-5);
}

TEST(Synth, Reproducible) {
  SynthSettings s;
  s.n_v = 3;
  s.n_s = 3;
  s.n_t = 3;
  s.m = 10;
  const Vector theta = Vector::Zero(15);
  const SyntheticData a = generate_synthetic(s, theta, 42), b = generate_synthetic(s, theta, 42);
  EXPECT_EQ(a.x_true, b.x_true);
  for (int i = 0; i < 3; ++i) EXPECT_EQ(a.spec.observations[std::size_t(i)], b.spec.observations[std::size_t(i)]);
  const SyntheticData c = generate_synthetic(s, theta, 43);
  EXPECT_NE(a.x_true, c.x_true);
}

TEST(Synth, ScalarSampleVariance) {
  // n_s = n_t = 1, n_r = 0: Q = gamma_e dt gamma_s^6
  BTAMatrix q(1, 1, 0);
  q.diag(0)(0, 0) = 2.5;
  std::mt19937_64 rng(7);
  const int draws = 10000;
  double sum = 0.0, sq = 0.0;
  for (int i = 0; i < draws; ++i) {
    const double x = sample_gmrf(q, rng)[0];
    sum += x;
    sq += x * x;
  }
  const double var = sq / draws - (sum / draws) * (sum / draws);
  // standard error of a variance estimate is about sqrt(2 / draws) * sigma^2
  EXPECT_NEAR(var, 0.4, 4.0 * std::sqrt(2.0 / draws) * 0.4);

  SynthSettings s;
  s.n_s = s.n_t = 1;
  s.n_r = 0;
  s.m = 1;
  Vector theta(4);
  theta << std::log(1.2), 0.0, std::log(0.7), 0.0;
  const SparseMatrix qp = joint_prior_precision(generate_synthetic(s, theta, 1).spec, theta);
  EXPECT_NEAR(Matrix(qp)(0, 0), 0.7 * std::pow(1.2, 6), 1e-12);
}

TEST(Synth, DesignRowsInterpolate) {
  std::mt19937_64 rng(2);
  const SparseMatrix a = interpolation_design(5, 3, 2, 50, rng);
  const Matrix d(a);
  for (Index r = 0; r < 50; ++r) {
    EXPECT_NEAR(d.row(r).head(15).sum(), 1.0, 1e-14);
    EXPECT_EQ(d(r, 15), 1.0);
  }
}
