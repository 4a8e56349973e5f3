#pragma once

#include <cstddef>
#include <functional>

namespace mfmlmc {

/// Worker count: MFMLMC_THREADS if set (>= 1), else hardware concurrency.
std::size_t thread_count();

/// Calls fn(i) for every i in [0, n), spread over thread_count() workers.
/// fn must only write to state owned by index i.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace mfmlmc
