#include "stinla/sched.hpp"

#include <algorithm>
#include <chrono>
#include <exception>
#include <fstream>
#include <thread>

namespace stinla {

LayerAllocation allocate(TaskIndex workers, TaskIndex dim_theta, bool memory_fits_single,
                         TaskIndex required_partitions) {
  if (workers < 1) throw std::invalid_argument("allocate: at least one worker is required");
  if (dim_theta < 0) throw std::invalid_argument("allocate: negative dim(theta)");
  LayerAllocation alloc;
  alloc.workers = workers;
  alloc.n_f_eval = 2 * dim_theta + 1;

  TaskIndex min_p = memory_fits_single ? 1 : std::max<TaskIndex>(required_partitions, 1);
  if (min_p > workers) {
    alloc.memory_satisfied = false;
    min_p = workers;
  }
  alloc.g3 = min_p;
  alloc.g1 = std::min(alloc.n_f_eval, workers / min_p);
  alloc.s1_saturated = alloc.g1 == alloc.n_f_eval;
  if (alloc.s1_saturated && workers >= 2 * alloc.g1 * min_p) alloc.g2 = 2;
  alloc.s2_saturated = alloc.g2 == 2;
  if (alloc.s2_saturated) alloc.g3 = std::max(min_p, workers / (alloc.g1 * alloc.g2));
  return alloc;
}

TaskFailure::TaskFailure(TaskIndex task, const std::string& what)
    : std::runtime_error("task " + std::to_string(task) + " failed: " + what), task_(task) {}

void parallel_for(TaskIndex count, TaskIndex width, const std::function<void(TaskIndex)>& fn,
                  std::vector<TaskTrace>* trace) {
  if (count <= 0) {
    if (trace) trace->clear();
    return;
  }
  width = std::clamp<TaskIndex>(width, 1, count);
  const auto t0 = std::chrono::steady_clock::now();
  const auto seconds = [t0] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  };
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(count));
  std::vector<TaskTrace> local(trace ? std::size_t(count) : 0);

  auto worker = [&](TaskIndex w) {
    for (TaskIndex i = w; i < count; i += width) {
      const double start = trace ? seconds() : 0.0;
      try {
        fn(i);
      } catch (...) {
        errors[std::size_t(i)] = std::current_exception();
      }
      if (trace) local[std::size_t(i)] = TaskTrace{i, w, i / width, start, seconds()};
    }
  };

  if (width == 1) {
    worker(0);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(std::size_t(width));
    for (TaskIndex w = 0; w < width; ++w) pool.emplace_back(worker, w);
    for (auto& t : pool) t.join();
  }
  if (trace) *trace = std::move(local);

  for (TaskIndex i = 0; i < count; ++i) {
    if (!errors[std::size_t(i)]) continue;
    try {
      std::rethrow_exception(errors[std::size_t(i)]);
    } catch (const TaskFailure&) {
      throw;
    } catch (const std::exception& e) {
      throw TaskFailure(i, e.what());
    } catch (...) {
      throw TaskFailure(i, "unknown error");
    }
  }
}

void write_trace_csv(const std::string& path, const std::vector<TaskTrace>& trace) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write trace file: " + path);
  out << "task,group,round,start_s,stop_s\n";
  for (const auto& t : trace) out << t.task << ',' << t.group << ',' << t.round << ',' << t.start << ',' << t.stop << '\n';
}

}  // namespace stinla
