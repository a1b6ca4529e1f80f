#include "hetfl/parallel.hpp"

#include <atomic>
#include <cstdlib>
#include <exception>
#include <string>
#include <thread>
#include <vector>

namespace hetfl {

std::size_t worker_count() {
  if (const char* env = std::getenv("HETFL_THREADS")) {
    try {
      const long value = std::stol(env);
      if (value >= 1) return static_cast<std::size_t>(value);
    } catch (const std::exception&) {
      // Unparsable values fall through to the machine default.
    }
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& task, std::size_t workers) {
  std::vector<std::exception_ptr> errors(n);
  if (workers <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) {
      try {
        task(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  } else {
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          task(i);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    };
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < std::min(workers, n); ++w) pool.emplace_back(worker);
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace hetfl
