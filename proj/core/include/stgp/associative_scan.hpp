#pragma once

#include <algorithm>
#include <cstddef>
#include <span>
#include <thread>
#include <vector>

namespace stgp {

enum class ScanSchedule {
  kSequential,  ///< left fold, N-1 combines
  kTree,        ///< up-sweep / down-sweep, O(log N) depth
};

struct ScanOptions {
  ScanSchedule schedule = ScanSchedule::kTree;
  unsigned threads = 1;  ///< worker threads per tree level
};

namespace detail {

// Runs body(i) for i = first, first + stride, ... < last, split across threads.
template <class Body>
void strided_for(std::size_t first, std::size_t last, std::size_t stride, unsigned threads,
                 Body&& body) {
  if (first >= last) return;
  const std::size_t count = (last - first + stride - 1) / stride;
  if (threads <= 1 || count < 2 * threads) {
    for (std::size_t i = first; i < last; i += stride) body(i);
    return;
  }
  std::vector<std::jthread> pool;
  pool.reserve(threads);
  const std::size_t chunk = (count + threads - 1) / threads;
  for (unsigned t = 0; t < threads; ++t) {
    const std::size_t begin = t * chunk;
    const std::size_t end = std::min(count, begin + chunk);
    if (begin >= end) break;
    pool.emplace_back([=, &body] {
      for (std::size_t k = begin; k < end; ++k) body(first + k * stride);
    });
  }
}

}  // namespace detail

/// In-place inclusive scan: items[k] <- items[0] * items[1] * ... * items[k]
/// for an associative `op(left, right)`. The tree schedule is the work-efficient
/// up-sweep/down-sweep; combines within one level are independent and may run
/// on separate threads.
template <class T, class Op>
void inclusive_scan(std::span<T> items, Op op, const ScanOptions& options = {}) {
  const std::size_t n = items.size();
  if (n < 2) return;
  if (options.schedule == ScanSchedule::kSequential) {
    for (std::size_t i = 1; i < n; ++i) items[i] = op(items[i - 1], items[i]);
    return;
  }
  std::size_t top = 1;
  for (std::size_t d = 1; d < n; d *= 2) {
    detail::strided_for(2 * d - 1, n, 2 * d, options.threads,
                        [&](std::size_t i) { items[i] = op(items[i - d], items[i]); });
    top = d;
  }
  for (std::size_t d = top / 2; d >= 1; d /= 2) {
    detail::strided_for(3 * d - 1, n, 2 * d, options.threads,
                        [&](std::size_t i) { items[i] = op(items[i - d], items[i]); });
  }
}

/// Suffix scan: items[k] <- items[k] * items[k+1] * ... * items[n-1].
template <class T, class Op>
void reverse_inclusive_scan(std::span<T> items, Op op, const ScanOptions& options = {}) {
  std::reverse(items.begin(), items.end());
  inclusive_scan(items, [&op](const T& later, const T& earlier) { return op(earlier, later); },
                 options);
  std::reverse(items.begin(), items.end());
}

}  // namespace stgp
