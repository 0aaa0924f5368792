#pragma once

#include <cstddef>
#include <functional>

namespace edyn {

/// Worker count: EDGE_DYNAMICS_THREADS when set to a positive integer,
/// otherwise std::thread::hardware_concurrency() (at least 1).
std::size_t worker_count();

/// Runs body(i) for i in [0, count) on up to `workers` threads. Indices are
/// handed out dynamically; callers write results into per-index slots so the
/// output does not depend on scheduling. The first exception thrown by any
/// body is rethrown after all workers have stopped.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body,
                  std::size_t workers = worker_count());

}  // namespace edyn
