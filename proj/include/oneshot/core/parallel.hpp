#pragma once

#include <cstddef>
#include <functional>

namespace oneshot::core {

/// Calls fn(i) for i in [0, count) on at most `workers` threads. Indices are
/// handed out dynamically, so fn must write only to slot i of its output.
/// workers <= 1 runs inline in index order. The first exception thrown by
/// any call is rethrown after all threads finish.
void parallel_for(std::size_t count, std::size_t workers, const std::function<void(std::size_t)>& fn);

/// Hardware concurrency, at least 1.
std::size_t default_workers();

}  // namespace oneshot::core
