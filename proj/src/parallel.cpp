#include "proxybounds/parallel.hpp"

#include <algorithm>
#include <exception>
#include <thread>
#include <vector>

namespace proxybounds {

int resolve_workers(int requested) {
  if (requested >= 1) return requested;
  const unsigned hw = std::thread::hardware_concurrency();
  return static_cast<int>(std::clamp(hw, 1u, 16u));
}

void parallel_for(std::size_t count, int workers,
                  const std::function<void(std::size_t)>& fn) {
  if (count == 0) return;
  const std::size_t nworkers =
      std::min<std::size_t>(static_cast<std::size_t>(resolve_workers(workers)), count);
  if (nworkers <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }

  std::vector<std::thread> threads;
  std::vector<std::exception_ptr> errors(nworkers);
  const std::size_t chunk = (count + nworkers - 1) / nworkers;
  threads.reserve(nworkers);
  for (std::size_t t = 0; t < nworkers; ++t) {
    const std::size_t begin = t * chunk;
    const std::size_t end = std::min(begin + chunk, count);
    threads.emplace_back([&, t, begin, end] {
      try {
        for (std::size_t i = begin; i < end; ++i) fn(i);
      } catch (...) {
        errors[t] = std::current_exception();
      }
    });
  }
  for (auto& th : threads) th.join();
  for (auto& err : errors)
    if (err) std::rethrow_exception(err);
}

}  // namespace proxybounds
