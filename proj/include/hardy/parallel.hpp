#pragma once

#include <cstddef>
#include <functional>

namespace hardy {

/// Worker count from HARDY_THREADS, else the hardware concurrency.
int thread_count();

/// Runs fn(i) for i in [0, n) on thread_count() threads; each index must write only its own output slot.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace hardy
