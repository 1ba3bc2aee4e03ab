#pragma once

#include <cstddef>
#include <functional>

namespace proxybounds {

/// Resolves a worker-count request: values < 1 mean "auto" (hardware
/// concurrency, capped at 16).
int resolve_workers(int requested);

/// Runs fn(i) for i in [0, count) across `workers` threads with a static
/// block partition. Callers must make each iteration independent and write
/// only to its own output slot; combined with per-index RNG streams this
/// keeps results identical for every worker count. Exceptions from workers
/// are rethrown on the calling thread.
void parallel_for(std::size_t count, int workers,
                  const std::function<void(std::size_t)>& fn);

}  // namespace proxybounds
