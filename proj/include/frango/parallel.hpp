#pragma once

#include <cstddef>
#include <functional>

namespace frango {

// Worker count: hardware concurrency capped by FRANGO_THREADS when set.
std::size_t worker_count();

// Runs body(i) for i in [0, count); exceptions from workers are rethrown.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);

}  // namespace frango
