#pragma once

#include <cstddef>
#include <functional>

namespace cvqoc {

/// Worker cap read from CVQOC_THREADS (unset or invalid -> 1).
std::size_t thread_limit();

/// Runs body(i) for i in [0, n). Each index is handled by exactly one worker,
/// so results written per index are independent of the thread count.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace cvqoc
