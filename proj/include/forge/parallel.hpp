#pragma once

#include <cstddef>
#include <exception>
#include <functional>
#include <string>
#include <thread>
#include <vector>

#include "forge/error.hpp"

namespace forge {

/// Balanced contiguous split: the first `n % workers` shards get one extra
/// element. 10 items over 4 workers -> {3, 3, 2, 2}.
inline std::vector<std::size_t> shard_sizes(std::size_t n, std::size_t workers) {
  if (workers == 0) workers = 1;
  std::vector<std::size_t> sizes(workers, n / workers);
  for (std::size_t i = 0; i < n % workers; ++i) ++sizes[i];
  return sizes;
}

/// Runs `fn(shard, begin, end)` over contiguous shards of [0, n), one thread
/// per non-empty shard. A throwing shard surfaces as WorkerPanic naming it
/// (the first failing shard by index wins); forge::Error kinds other than
/// WorkerPanic are rethrown unchanged when workers == 1.
inline void parallel_shards(std::size_t n, std::size_t workers,
                            const std::function<void(std::size_t, std::size_t, std::size_t)>& fn) {
  auto sizes = shard_sizes(n, workers);
  if (sizes.size() <= 1 || n == 0) {
    fn(0, 0, n);
    return;
  }
  std::vector<std::exception_ptr> errors(sizes.size());
  std::vector<std::thread> threads;
  std::size_t begin = 0;
  for (std::size_t s = 0; s < sizes.size(); ++s) {
    std::size_t end = begin + sizes[s];
    if (sizes[s] > 0) {
      threads.emplace_back([&, s, begin, end] {
        try {
          fn(s, begin, end);
        } catch (...) {
          errors[s] = std::current_exception();
        }
      });
    }
    begin = end;
  }
  for (auto& t : threads) t.join();
  for (std::size_t s = 0; s < errors.size(); ++s) {
    if (!errors[s]) continue;
    try {
      std::rethrow_exception(errors[s]);
    } catch (const Error& e) {
      throw WorkerPanic("shard " + std::to_string(s) + ": " + e.kind() + ": " + e.what());
    } catch (const std::exception& e) {
      throw WorkerPanic("shard " + std::to_string(s) + ": " + e.what());
    }
  }
}

}  // namespace forge
