#pragma once

#include <algorithm>
#include <atomic>
#include <condition_variable>
#include <cstddef>
#include <exception>
#include <mutex>
#include <optional>
#include <thread>
#include <type_traits>
#include <vector>

namespace zggp {

inline int default_workers() {
  return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

// Runs task(i) for every i in [0, n) on up to `workers` threads and hands
// each result to consume(i, result) on the calling thread in ascending index
// order, whatever the completion order. The first exception thrown by a task
// or by consume is rethrown after all threads have stopped.
template <typename Task, typename Consume>
void ordered_parallel_for(std::size_t n, int workers, Task&& task,
                          Consume&& consume) {
  using Result = std::invoke_result_t<Task&, std::size_t>;
  if (n == 0) return;
  workers = std::clamp(workers, 1, static_cast<int>(std::min<std::size_t>(n, 1024)));
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) consume(i, task(i));
    return;
  }

  std::vector<std::optional<Result>> slots(n);
  std::mutex mutex;
  std::condition_variable ready;
  std::atomic<std::size_t> next{0};
  std::atomic<bool> stop{false};
  std::exception_ptr error;

  auto worker = [&] {
    while (!stop.load()) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n) break;
      try {
        Result r = task(i);
        std::lock_guard lock(mutex);
        slots[i].emplace(std::move(r));
      } catch (...) {
        std::lock_guard lock(mutex);
        if (!error) error = std::current_exception();
        stop = true;
      }
      ready.notify_all();
    }
  };

  std::vector<std::thread> threads;
  threads.reserve(workers);
  for (int w = 0; w < workers; ++w) threads.emplace_back(worker);

  try {
    for (std::size_t i = 0; i < n; ++i) {
      std::optional<Result> item;
      {
        std::unique_lock lock(mutex);
        ready.wait(lock, [&] { return slots[i].has_value() || error; });
        if (!slots[i].has_value()) break;
        item = std::move(slots[i]);
        slots[i].reset();
      }
      consume(i, std::move(*item));
    }
  } catch (...) {
    std::lock_guard lock(mutex);
    if (!error) error = std::current_exception();
    stop = true;
  }
  stop = true;
  for (auto& t : threads) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace zggp
