#pragma once

#include <cstddef>
#include <functional>

namespace sentinel {

// Worker count from SENTINEL_THREADS (unset or invalid -> 1).
unsigned thread_count_from_env();

// Runs body(i) for i in [0, count) on up to `threads` workers. Each index is
// visited exactly once; callers write results into per-index slots so the
// outcome does not depend on scheduling. The first exception is rethrown.
void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& body);

}  // namespace sentinel
