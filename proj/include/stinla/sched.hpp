#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace stinla {

using TaskIndex = std::int64_t;

/// Worker counts for the three nested layers: g1 concurrent objective
/// evaluations (S1), g2 in {1, 2} for the prior/conditional pair (S2), and
/// g3 solver partitions per factorization (S3). Group G_S1 contains g1
/// G_S2 groups, each containing g2 G_S3 groups of g3 workers.
struct LayerAllocation {
  TaskIndex workers = 1;
  TaskIndex n_f_eval = 1;
  TaskIndex g1 = 1;
  TaskIndex g2 = 1;
  TaskIndex g3 = 1;
  bool s1_saturated = false;
  bool s2_saturated = false;
  /// False when fewer workers than the required partition count were given.
  bool memory_satisfied = true;

  TaskIndex used_workers() const { return g1 * g2 * g3; }
};

/// Greedy policy: fill S1 up to 2 dim(theta) + 1, then S2, then S3. When the
/// block-dense matrices do not fit on one worker, S3 is first set to
/// `required_partitions`.
LayerAllocation allocate(TaskIndex workers, TaskIndex dim_theta, bool memory_fits_single,
                         TaskIndex required_partitions = 2);

class TaskFailure : public std::runtime_error {
public:
  TaskFailure(TaskIndex task, const std::string& what);
  TaskIndex task() const { return task_; }

private:
  TaskIndex task_;
};

struct TaskTrace {
  TaskIndex task = 0;
  TaskIndex group = 0;  // S1 group executing the task
  TaskIndex round = 0;
  double start = 0.0;   // seconds since the start of run_tasks
  double stop = 0.0;
};

/// Runs fn(0..count-1) on `width` threads, job i on worker i % width, in
/// increasing index order per worker. The first failing job (lowest index)
/// is rethrown as TaskFailure after all workers joined. width <= 1 runs
/// inline on the calling thread.
void parallel_for(TaskIndex count, TaskIndex width, const std::function<void(TaskIndex)>& fn,
                  std::vector<TaskTrace>* trace = nullptr);

/// Executes independent tasks over the g1 S1 groups; results are returned in
/// task-index order, independent of the allocation.
template <class R>
std::vector<R> run_tasks(const std::vector<std::function<R()>>& tasks, const LayerAllocation& alloc,
                         std::vector<TaskTrace>* trace = nullptr) {
  std::vector<R> out(tasks.size());
  parallel_for(TaskIndex(tasks.size()), alloc.g1, [&](TaskIndex i) { out[std::size_t(i)] = tasks[std::size_t(i)](); },
               trace);
  return out;
}

void write_trace_csv(const std::string& path, const std::vector<TaskTrace>& trace);

}  // namespace stinla
