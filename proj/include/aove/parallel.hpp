#pragma once

#include <cstddef>
#include <functional>

namespace aove {

/// Runs body(i) for i in [0, count) on up to `workers` threads. Work items are handed
/// out dynamically; callers write results into slot i so the outcome does not depend
/// on the schedule. The first exception thrown by any body is rethrown.
void parallel_for(std::size_t count, int workers, const std::function<void(std::size_t)>& body);

/// Worker count to use for a request of `requested` (0 means hardware concurrency).
int resolve_workers(int requested);

}  // namespace aove
