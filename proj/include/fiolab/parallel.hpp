#pragma once

#include <cstddef>
#include <exception>
#include <functional>

namespace fiolab {

/// Worker count used by parallel_for. Defaults to FIOLAB_THREADS when set,
/// otherwise to the hardware concurrency.
int worker_threads();
void set_worker_threads(int count);

/// Runs body(i) for i in [0, count) on the worker pool. Each index is visited
/// exactly once; results are thread-count invariant as long as body(i) only
/// writes to slot i. The first exception (lowest index) is rethrown.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);

/// RAII override of the worker count, restored on scope exit.
class ScopedThreads {
 public:
  explicit ScopedThreads(int count) : previous_(worker_threads()) { set_worker_threads(count); }
  ~ScopedThreads() { set_worker_threads(previous_); }
  ScopedThreads(const ScopedThreads&) = delete;
  ScopedThreads& operator=(const ScopedThreads&) = delete;

 private:
  int previous_;
};

}  // namespace fiolab
