#pragma once

#include <condition_variable>
#include <cstddef>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace aobest
{

/**
 * Fixed-size worker pool running contiguous index blocks. Callers must only
 * write to per-index state so results do not depend on the schedule.
 */
class WorkerPool
{
public:
  explicit WorkerPool(std::size_t threads);
  ~WorkerPool();
  WorkerPool(const WorkerPool&) = delete;
  WorkerPool& operator=(const WorkerPool&) = delete;

  std::size_t threads() const { return workers_.size() + 1; }

  /// Calls body(begin, end) over a partition of [0, n); blocks until all finished.
  void run(std::size_t n, const std::function<void(std::size_t, std::size_t)>& body);

private:
  void worker_loop(std::size_t index);

  std::vector<std::jthread> workers_;
  std::mutex mutex_;
  std::condition_variable wake_;
  std::condition_variable done_;
  const std::function<void(std::size_t, std::size_t)>* job_{nullptr};
  std::size_t job_size_{0};
  std::size_t generation_{0};
  std::size_t pending_{0};
  bool stop_{false};
};

/// Thread count from AOBEST_THREADS (default 1).
std::size_t threads_from_env();

}  // namespace aobest
