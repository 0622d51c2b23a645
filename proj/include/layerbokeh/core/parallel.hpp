#pragma once

#include <algorithm>
#include <thread>
#include <vector>

namespace layerbokeh {

/// Worker count for data-parallel loops. Honors LAYERBOKEH_THREADS when set.
int worker_count();

/// Calls fn(i) for i in [begin, end) split into contiguous blocks over the
/// worker threads. fn must only write state owned by index i, so the result
/// does not depend on the schedule.
template <typename Fn>
void parallel_for(int begin, int end, Fn&& fn) {
  const int n = end - begin;
  if (n <= 0) return;
  const int workers = std::min(worker_count(), n);
  if (workers <= 1) {
    for (int i = begin; i < end; ++i) fn(i);
    return;
  }
  std::vector<std::jthread> threads;
  threads.reserve(workers);
  for (int w = 0; w < workers; ++w) {
    const int lo = begin + static_cast<int>(static_cast<long long>(n) * w / workers);
    const int hi =
        begin + static_cast<int>(static_cast<long long>(n) * (w + 1) / workers);
    threads.emplace_back([lo, hi, &fn] {
      for (int i = lo; i < hi; ++i) fn(i);
    });
  }
}

}  // namespace layerbokeh
