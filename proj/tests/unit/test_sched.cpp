#include "stinla/sched.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace stinla;

TEST(Allocate, GoldenExamples) {
  const LayerAllocation a31 = allocate(31, 15, true);
  EXPECT_EQ(a31.g1, 31);
  EXPECT_EQ(a31.g2, 1);
  EXPECT_EQ(a31.g3, 1);
  EXPECT_TRUE(a31.s1_saturated);
  const LayerAllocation a62 = allocate(62, 15, true);
  EXPECT_EQ(a62.g1, 31);
  EXPECT_EQ(a62.g2, 2);
  EXPECT_EQ(a62.g3, 1);
  const LayerAllocation a1 = allocate(1, 15, true);
  EXPECT_EQ(a1.g1 * 100 + a1.g2 * 10 + a1.g3, 111);
  EXPECT_EQ(allocate(9, 4, true).n_f_eval, 9);
}

TEST(Allocate, MemoryForcesPartitionsFirst) {
  const LayerAllocation a = allocate(8, 4, false, 2);
  EXPECT_EQ(a.g3, 2);
  EXPECT_EQ(a.g1, 4);
  EXPECT_EQ(a.g2, 1);
  const LayerAllocation big = allocate(124, 15, true);
  EXPECT_EQ(big.g1, 31);
  EXPECT_EQ(big.g2, 2);
  EXPECT_EQ(big.g3, 2);
  const LayerAllocation starved = allocate(1, 4, false, 4);
  EXPECT_FALSE(starved.memory_satisfied);
  EXPECT_EQ(starved.g3, 1);
}

TEST(Allocate, InvariantsAndMonotonicity) {
  for (bool fits : {true, false})
    for (TaskIndex d : {1, 4, 15}) {
      LayerAllocation prev = allocate(1, d, fits, 2);
      for (TaskIndex w = 1; w <= 300; ++w) {
        const LayerAllocation a = allocate(w, d, fits, 2);
        EXPECT_LE(a.used_workers(), w);
        EXPECT_LE(a.g1, a.n_f_eval);
        EXPECT_TRUE(a.g2 == 1 || a.g2 == 2);
        EXPECT_GE(a.g3, 1);
        EXPECT_GE(a.g1, prev.g1);
        EXPECT_GE(a.g2, prev.g2);
        EXPECT_GE(a.g3, prev.g3);
        prev = a;
      }
    }
  EXPECT_THROW(allocate(0, 4, true), std::invalid_argument);
}

TEST(RunTasks, DeterministicAcrossWorkerCounts) {
  std::vector<std::function<double()>> tasks;
  for (int i = 0; i < 31; ++i)
    tasks.emplace_back([i] {
      double s = 0.0;
      for (int k = 1; k < 2000; ++k) s += std::sin(i * 0.37 + k * 1e-3) / k;
      return s;
    });
  const auto ref = run_tasks(tasks, allocate(1, 15, true));
  for (TaskIndex w : {2, 4, 8, 31}) {
    const auto got = run_tasks(tasks, allocate(w, 15, true));
    ASSERT_EQ(got.size(), ref.size());
    for (std::size_t i = 0; i < ref.size(); ++i) EXPECT_EQ(got[i], ref[i]);
  }
}

TEST(RunTasks, EmptyTaskList) {
  std::vector<std::function<int()>> none;
  EXPECT_TRUE(run_tasks(none, allocate(4, 4, true)).empty());
}

TEST(RunTasks, RoundRobinTrace) {
  std::vector<std::function<TaskIndex()>> tasks;
  for (TaskIndex i = 0; i < 9; ++i) tasks.emplace_back([i] { return i * i; });
  LayerAllocation alloc = allocate(4, 4, true);
  ASSERT_EQ(alloc.g1, 4);
  std::vector<TaskTrace> trace;
  const auto out = run_tasks(tasks, alloc, &trace);
  for (TaskIndex i = 0; i < 9; ++i) EXPECT_EQ(out[std::size_t(i)], i * i);
  ASSERT_EQ(trace.size(), 9u);
  TaskIndex rounds = 0;
  for (const auto& t : trace) {
    EXPECT_EQ(t.group, t.task % 4);
    EXPECT_EQ(t.round, t.task / 4);
    EXPECT_LE(t.start, t.stop);
    rounds = std::max(rounds, t.round + 1);
  }
  EXPECT_EQ(rounds, 3);
  // tasks of one group run in index order
  for (const auto& t : trace)
    if (t.task >= 4) {
      EXPECT_GE(t.start, trace[std::size_t(t.task - 4)].stop);
    }
}

TEST(RunTasks, FailureCarriesLowestIndex) {
  std::vector<std::function<int()>> tasks;
  for (int i = 0; i < 10; ++i)
    tasks.emplace_back([i]() -> int {
      if (i == 3 || i == 7) throw std::runtime_error("boom");
      return i;
    });
  for (TaskIndex w : {1, 4}) {
    try {
      run_tasks(tasks, allocate(w, 5, true));
      FAIL() << "expected TaskFailure";
    } catch (const TaskFailure& e) {
      EXPECT_EQ(e.task(), 3);
    }
  }
}
