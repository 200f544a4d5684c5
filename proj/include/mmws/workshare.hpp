#pragma once

// Fork-join workshare over OS threads: a static block scheduler, a
// parallel_for region with an implied barrier, and the threaded matrix
// product built on them.

#include <cstddef>
#include <exception>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "mmws/error.hpp"
#include "mmws/matrix.hpp"

namespace mmws {

// Contiguous, ascending per-worker iteration ranges. Lengths differ by at
// most one; leftovers go to the lowest-indexed workers.
struct Partition {
  struct Range {
    std::size_t start = 0;
    std::size_t len = 0;
    bool operator==(const Range&) const = default;
  };
  std::vector<Range> assignments;  // one entry per worker
};

/// Static block schedule: the first (iterations % workers) workers get
/// ceil(iterations / workers) iterations, the rest floor. Workers beyond the
/// iteration count receive empty ranges.
inline Partition static_partition(std::size_t iterations, unsigned workers) {
  if (workers == 0) throw DomainError("static_partition: worker count must be >= 1");
  const std::size_t base = iterations / workers;
  const std::size_t extra = iterations % workers;
  Partition p;
  p.assignments.reserve(workers);
  std::size_t start = 0;
  for (unsigned w = 0; w < workers; ++w) {
    const std::size_t len = base + (w < extra ? 1 : 0);
    p.assignments.push_back({start, len});
    start += len;
  }
  return p;
}

inline unsigned default_workers() {
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

/// Fork-join region: runs body(i) exactly once for every i in [0, iterations),
/// split across `workers` by static_partition. The caller participates as
/// worker 0; the call returns only after every worker has finished (implied
/// barrier). A throwing body surfaces as RegionError after the barrier.
template <typename Body>
void parallel_for(std::size_t iterations, unsigned workers, Body&& body) {
  const Partition part = static_partition(iterations, workers);
  if (iterations == 0) return;

  std::vector<std::thread> team;
  std::vector<std::exception_ptr> failures(workers);
  team.reserve(workers - 1);

  auto run_range = [&body](Partition::Range r, std::exception_ptr& failure) {
    try {
      for (std::size_t i = r.start; i < r.start + r.len; ++i) body(i);
    } catch (...) {
      failure = std::current_exception();
    }
  };

  for (unsigned w = 1; w < workers; ++w) {
    if (part.assignments[w].len == 0) continue;  // surplus worker, nothing to fork
    team.emplace_back(run_range, part.assignments[w], std::ref(failures[w]));
  }
  run_range(part.assignments[0], failures[0]);

  for (auto& t : team) t.join();

  for (unsigned w = 0; w < workers; ++w) {
    if (!failures[w]) continue;
    try {
      std::rethrow_exception(failures[w]);
    } catch (const std::exception& e) {
      throw RegionError("parallel_for: worker " + std::to_string(w) +
                        " failed: " + e.what());
    } catch (...) {
      throw RegionError("parallel_for: worker " + std::to_string(w) + " failed");
    }
  }
}

/// Threaded product: the outermost row loop is worksharing, inputs are shared
/// read-only, each worker writes only its own row block. Identical per-element
/// summation order to matmul_seq, so the result is bitwise-equal to it.
inline Matrix matmul_threads(const Matrix& a, const Matrix& b, unsigned workers) {
  if (a.cols() != b.rows()) {
    throw DimensionError("matmul_threads: inner dimensions differ, " +
                         std::to_string(a.cols()) + " vs " + std::to_string(b.rows()));
  }
  if (workers == 0) throw DomainError("matmul_threads: worker count must be >= 1");
  Matrix c(a.rows(), b.cols());
  parallel_for(a.rows(), workers, [&](std::size_t i) {
    for (std::size_t k = 0; k < b.cols(); ++k) {
      double acc = 0.0;
      for (std::size_t j = 0; j < a.cols(); ++j) acc += a(i, j) * b(j, k);
      c(i, k) = acc;
    }
  });
  return c;
}

}  // namespace mmws
