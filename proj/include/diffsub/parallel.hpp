#pragma once

#include <cstddef>
#include <functional>

namespace diffsub {

// Worker cap: DIFFSUB_THREADS when set to a positive integer, otherwise the
// hardware concurrency.
std::size_t worker_count();

// Runs body(i) for i in [0, n). Each index must write only its own output
// slot; results are then independent of the worker count. Calls made from
// inside a worker run serially on that worker.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace diffsub
