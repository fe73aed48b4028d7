#include "stinla/bta_dist.hpp"
#include "stinla/oracle.hpp"

#include <gtest/gtest.h>

using namespace stinla;

TEST(PartitionPlan, EvenSplit) {
  const PartitionPlan p = plan_partitions(12, 3, 1.0);
  EXPECT_EQ(p.sizes(), (std::vector<Index>{4, 4, 4}));
  EXPECT_FALSE(p.fell_back_to_even);
}

TEST(PartitionPlan, LoadBalancedSplit) {
  const PartitionPlan p = plan_partitions(13, 4, 1.6);
  EXPECT_EQ(p.sizes(), (std::vector<Index>{5, 2, 2, 4}));
  EXPECT_EQ(p.boundaries, (std::vector<Index>{0, 5, 7, 9, 13}));
}

TEST(PartitionPlan, InfeasibleBalanceFallsBack) {
  const PartitionPlan p = plan_partitions(10, 4, 1.6);
  EXPECT_TRUE(p.fell_back_to_even);
  EXPECT_EQ(p.sizes(), (std::vector<Index>{3, 3, 2, 2}));
}

TEST(PartitionPlan, RejectsTooFewBlocks) {
  EXPECT_THROW(plan_partitions(5, 3, 1.0), PlanningError);
  EXPECT_THROW(plan_partitions(4, 1, 0.5), PlanningError);
  EXPECT_NO_THROW(plan_partitions(1, 1, 1.0));
  EXPECT_NO_THROW(plan_partitions(6, 3, 1.0));
}

TEST(DistBta, SinglePartitionBitIdentical) {
  std::mt19937_64 rng(4);
  const BTAMatrix m = oracle::random_spd_bta(6, 3, 2, rng);
  const BTAFactor s = factorize(m);
  const DistBTAFactor d = d_factorize(m, plan_partitions(6, 1));
  EXPECT_EQ(logdet(d), logdet(s));
  Vector rhs = Vector::Random(m.size());
  EXPECT_EQ((d_solve(d, rhs) - solve(s, rhs)).cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ((d_selected_invert(d).to_dense() - selected_invert(s).to_dense()).cwiseAbs().maxCoeff(), 0.0);
}

TEST(DistBta, MatchesSequential) {
  std::mt19937_64 rng(21);
  for (Index P : {2, 3, 4})
    for (double lb : {1.0, 1.6})
      for (Index n = 2 * P; n <= 2 * P + 5; ++n)
        for (Index a : {0, 2}) {
          const BTAMatrix m = oracle::random_spd_bta(n, 3, a, rng);
          const BTAFactor s = factorize(m);
          const PartitionPlan plan = plan_partitions(n, P, lb);
          for (Index workers : {1, 3}) {
            const DistBTAFactor d = d_factorize(m, plan, workers);
            SCOPED_TRACE("P=" + std::to_string(P) + " n=" + std::to_string(n) + " a=" + std::to_string(a));
            EXPECT_NEAR(logdet(d), logdet(s), 1e-9 * std::abs(logdet(s)));
            Vector rhs = Vector::Random(m.size());
            const Vector xs = solve(s, rhs);
            EXPECT_LE((d_solve(d, rhs) - xs).norm() / xs.norm(), 1e-9);
            const Matrix ss = selected_invert(s).to_dense();
            EXPECT_LE(oracle::max_rel_entry_error(d_selected_invert(d).to_dense(), ss), 1e-8);
          }
        }
}

TEST(DistBta, ZeroArrowPrior) {
  std::mt19937_64 rng(8);
  const BTAMatrix m = oracle::random_spd_bta(9, 2, 3, rng, true);
  const DistBTAFactor d = d_factorize(m, plan_partitions(9, 3, 1.6), 2);
  EXPECT_TRUE(d.arrow_zero);
  const Matrix dense = m.to_dense();
  EXPECT_NEAR(logdet(d), oracle::dense_logdet(dense), 1e-10 * std::abs(oracle::dense_logdet(dense)));
}

TEST(DistBta, MiddlePartitionsCarryExtraWork) {
  std::mt19937_64 rng(13);
  const BTAMatrix m = oracle::random_spd_bta(12, 4, 2, rng);
  const DistBTAFactor d = d_factorize(m, plan_partitions(12, 3, 1.0));
  EXPECT_GT(d.parts[1].flops.total(), d.parts[0].flops.total());
  EXPECT_GT(d.parts[1].flops.total(), d.parts[2].flops.total());
}

TEST(DistBta, FailureNamesPartition) {
  std::mt19937_64 rng(17);
  BTAMatrix m = oracle::random_spd_bta(8, 2, 1, rng);
  m.diag(5)(0, 0) = -100.0;
  try {
    d_factorize(m, plan_partitions(8, 2));
    FAIL() << "expected NotPositiveDefinite";
  } catch (const NotPositiveDefinite& e) {
    EXPECT_EQ(e.block(), 5);
    EXPECT_EQ(e.partition(), 1);
  }
}

TEST(PartitionPlan, SpecExamples) {
  EXPECT_EQ(plan_partitions(16, 1, 1.0).boundaries, (std::vector<Index>{0, 16}));
  EXPECT_EQ(plan_partitions(16, 4, 1.0).sizes(), (std::vector<Index>{4, 4, 4, 4}));
  EXPECT_EQ(plan_partitions(13, 4, 1.0).sizes(), (std::vector<Index>{4, 3, 3, 3}));
  const PartitionPlan p = plan_partitions(24, 3, 1.6);
  EXPECT_GT(p.blocks(0), p.blocks(1));
  EXPECT_GT(p.blocks(2), p.blocks(1));
}

TEST(DistBta, IdentitySolve) {
  BTAMatrix id(8, 2, 1);
  for (Index i = 0; i < 8; ++i) id.diag(i).setIdentity();
  id.tip().setIdentity();
  const DistBTAFactor f = d_factorize(id, plan_partitions(8, 3));
  Vector rhs = Vector::LinSpaced(id.size(), 1.0, 17.0);
  EXPECT_EQ(d_solve(f, rhs), rhs);
}

TEST(DistBta, BlockDiagonalDecouples) {
  std::mt19937_64 rng(19);
  BTAMatrix m = oracle::random_spd_bta(8, 3, 0, rng);
  for (Index i = 0; i + 1 < 8; ++i) m.lower(i).setZero();
  const BTAMatrix s = d_selected_invert(d_factorize(m, plan_partitions(8, 2)));
  for (Index i = 0; i < 8; ++i) {
    const Matrix inv = Matrix(m.diag(i)).inverse();
    EXPECT_LE(oracle::max_rel_entry_error(s.diag(i), inv), 1e-12);
  }
  for (Index i = 0; i + 1 < 8; ++i) EXPECT_LE(s.lower(i).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(DistBta, FourPartitionsAgainstDenseInverse) {
  std::mt19937_64 rng(23);
  const BTAMatrix m = oracle::random_spd_bta(16, 4, 2, rng);
  const DistBTAFactor f = d_factorize(m, plan_partitions(16, 4, 1.6), 4);
  const Matrix inv = oracle::dense_inverse(m.to_dense());
  EXPECT_LE(oracle::max_rel_entry_error(d_selected_invert(f).to_dense(), BTAMatrix::from_dense(inv, 16, 4, 2).to_dense()),
            1e-8);
}

TEST(DistBta, WorkerCountInvariance) {
  std::mt19937_64 rng(29);
  const BTAMatrix m = oracle::random_spd_bta(14, 3, 2, rng);
  const PartitionPlan plan = plan_partitions(14, 3, 1.6);
  const DistBTAFactor one = d_factorize(m, plan, 1);
  const Vector rhs = Vector::LinSpaced(m.size(), -1.0, 1.0);
  const Vector x1 = d_solve(one, rhs);
  const Matrix s1 = d_selected_invert(one).to_dense();
  for (Index w : {2, 3, 8}) {
    const DistBTAFactor fw = d_factorize(m, plan, w);
    EXPECT_EQ(logdet(fw), logdet(one));
    EXPECT_EQ((d_solve(fw, rhs) - x1).cwiseAbs().maxCoeff(), 0.0);
    EXPECT_EQ((d_selected_invert(fw).to_dense() - s1).cwiseAbs().maxCoeff(), 0.0);
  }
}
