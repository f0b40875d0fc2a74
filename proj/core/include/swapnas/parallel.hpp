#pragma once

#include <cstddef>
#include <functional>

namespace swapnas {

/// Caps the worker count used by parallel_for (0 = hardware concurrency).
void set_max_threads(unsigned n) noexcept;
unsigned max_threads() noexcept;

/// Calls fn(i) for i in [0, n) on up to max_threads() workers. Work items
/// must write to disjoint outputs; the first exception thrown is rethrown
/// after all workers join.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace swapnas
