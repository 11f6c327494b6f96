#include "conekit/parallel.hpp"

#include "conekit/errors.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace conekit {

int worker_count_from_env() {
  if (const char* v = std::getenv("CONEKIT_THREADS")) {
    try {
      int n = std::stoi(v);
      if (n >= 1) return n;
    } catch (...) {
    }
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

void parallel_for(std::size_t count, int workers, const std::function<void(std::size_t)>& fn) {
  const std::size_t nthreads = std::min<std::size_t>(std::max(1, workers), count);
  if (nthreads <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::mutex mu;
  std::size_t failed_index = count;
  std::exception_ptr failure;
  auto worker = [&]() {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= count) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(mu);
        if (i < failed_index) {
          failed_index = i;
          failure = std::current_exception();
        }
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < nthreads; ++t) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
}

void for_each_block(std::size_t count, std::size_t block, int workers, const RngStream& rng,
                    const std::function<void(std::size_t, std::size_t, RngStream&)>& fn) {
  if (block == 0) throw UsageError("for_each_block: block size must be positive");
  const std::size_t blocks = (count + block - 1) / block;
  parallel_for(blocks, workers, [&](std::size_t b) {
    RngStream s = rng.derive(b);
    const std::size_t first = b * block;
    fn(first, std::min(block, count - first), s);
  });
}

}  // namespace conekit
