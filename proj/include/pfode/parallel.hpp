#pragma once

#include <cstddef>
#include <functional>

namespace pfode {

// Worker count: PFODE_THREADS if set to a positive integer, else the
// hardware concurrency (at least 1).
int thread_count();

// Calls fn(i) for i in [0, n) on up to thread_count() threads. Each index
// runs exactly once; callers write results into per-index slots, so the
// outcome does not depend on scheduling. The first exception is rethrown.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace pfode
