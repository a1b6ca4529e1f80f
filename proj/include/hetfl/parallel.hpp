#pragma once

#include <cstddef>
#include <functional>

namespace hetfl {

/// Worker cap from HETFL_THREADS, else the machine's parallelism (at least 1).
std::size_t worker_count();

/// Runs task(i) for i in [0, n) on up to `workers` threads. The first exception thrown
/// (lowest index) is rethrown after every task has finished.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& task, std::size_t workers = worker_count());

}  // namespace hetfl
