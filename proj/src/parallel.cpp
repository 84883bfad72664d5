#include "aobest/parallel.hpp"

#include <algorithm>
#include <charconv>
#include <cstdlib>
#include <string_view>

namespace aobest
{

WorkerPool::WorkerPool(std::size_t threads)
{
  const std::size_t extra = threads > 1 ? threads - 1 : 0;
  workers_.reserve(extra);
  for (std::size_t i = 0; i < extra; ++i)
    workers_.emplace_back([this, i] { worker_loop(i + 1); });
}

WorkerPool::~WorkerPool()
{
  {
    std::lock_guard lock(mutex_);
    stop_ = true;
  }
  wake_.notify_all();
}

namespace
{
std::pair<std::size_t, std::size_t> block(std::size_t n, std::size_t parts, std::size_t index)
{
  const std::size_t base = n / parts;
  const std::size_t rem = n % parts;
  const std::size_t begin = index * base + std::min(index, rem);
  return {begin, begin + base + (index < rem ? 1 : 0)};
}
}  // namespace

void WorkerPool::run(std::size_t n, const std::function<void(std::size_t, std::size_t)>& body)
{
  if (workers_.empty() || n < 2)
  {
    body(0, n);
    return;
  }
  {
    std::lock_guard lock(mutex_);
    job_ = &body;
    job_size_ = n;
    pending_ = workers_.size();
    ++generation_;
  }
  wake_.notify_all();
  const auto [b, e] = block(n, threads(), 0);
  body(b, e);
  std::unique_lock lock(mutex_);
  done_.wait(lock, [this] { return pending_ == 0; });
  job_ = nullptr;
}

void WorkerPool::worker_loop(std::size_t index)
{
  std::size_t seen = 0;
  for (;;)
  {
    const std::function<void(std::size_t, std::size_t)>* job = nullptr;
    std::size_t n = 0;
    {
      std::unique_lock lock(mutex_);
      wake_.wait(lock, [&] { return stop_ || generation_ != seen; });
      if (stop_)
        return;
      seen = generation_;
      job = job_;
      n = job_size_;
    }
    const auto [b, e] = block(n, threads(), index);
    if (b < e)
      (*job)(b, e);
    {
      std::lock_guard lock(mutex_);
      --pending_;
    }
    done_.notify_one();
  }
}

std::size_t threads_from_env()
{
  const char* raw = std::getenv("AOBEST_THREADS");
  if (raw == nullptr)
    return 1;
  const std::string_view s(raw);
  std::size_t value = 1;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc{} || value == 0)
    return 1;
  return std::min<std::size_t>(value, 256);
}

}  // namespace aobest
