#pragma once

#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace thermocal::detail {

/// Runs body(i) for i in [0, n) on up to `jobs` threads with a static split.
/// Each index writes only its own output, so results do not depend on `jobs`.
/// The first exception (lowest index range) is rethrown.
template <typename Body>
void parallel_for(std::size_t n, unsigned jobs, Body&& body) {
  if (jobs <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  const std::size_t t = std::min<std::size_t>(jobs, n);
  std::vector<std::thread> workers;
  std::vector<std::exception_ptr> errors(t);
  for (std::size_t j = 0; j < t; ++j) {
    workers.emplace_back([&, j] {
      try {
        for (std::size_t i = n * j / t; i < n * (j + 1) / t; ++i) body(i);
      } catch (...) {
        errors[j] = std::current_exception();
      }
    });
  }
  for (auto& w : workers) w.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace thermocal::detail
