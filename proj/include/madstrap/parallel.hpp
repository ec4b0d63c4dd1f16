#pragma once

// Index-parallel loop over independent tasks. Results are written by index,
// so output never depends on the worker count or on scheduling.

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "madstrap/errors.hpp"

namespace madstrap {

inline constexpr const char* kWorkersEnv = "MADSTRAP_WORKERS";

// Explicit value if given, else MADSTRAP_WORKERS, else the hardware count.
inline std::size_t resolve_workers(std::optional<std::size_t> requested = std::nullopt) {
  if (requested) {
    if (*requested == 0) throw ConfigError("workers", "must be at least 1");
    return *requested;
  }
  if (const char* env = std::getenv(kWorkersEnv); env && *env) {
    std::string_view text(env);
    std::size_t value = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc() || ptr != text.data() + text.size() || value == 0) {
      throw ConfigError(kWorkersEnv, "expected a positive integer, got '" + std::string(text) + "'");
    }
    return value;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

// Calls body(i) for i in [0, count). If any call throws, the exception of the
// lowest failing index is rethrown after all workers stop.
template <class Body>
void parallel_for(std::size_t count, std::size_t workers, Body&& body) {
  if (count == 0) return;
  workers = std::max<std::size_t>(1, std::min(workers, count));
  if (workers == 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }

  std::atomic<std::size_t> next{0};
  std::atomic<std::size_t> first_failure{count};
  std::mutex error_mutex;
  std::exception_ptr error;

  auto run = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1, std::memory_order_relaxed);
      if (i >= count) return;
      // Indices below a known failure still run, so the reported error is
      // always the lowest failing index.
      if (i > first_failure.load(std::memory_order_relaxed)) return;
      try {
        body(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (i < first_failure.load(std::memory_order_relaxed)) {
          first_failure.store(i, std::memory_order_relaxed);
          error = std::current_exception();
        }
      }
    }
  };

  std::vector<std::thread> pool;
  pool.reserve(workers - 1);
  for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(run);
  run();
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace madstrap
