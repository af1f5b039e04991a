#pragma once

#include <functional>

namespace gnarx {

/// Runs body(i) for i in [0, count) on up to `threads` workers. Results must be
/// written to per-index slots so the outcome does not depend on scheduling.
/// The exception thrown by the lowest failing index is rethrown.
void parallel_for(int count, int threads, const std::function<void(int)>& body);

}  // namespace gnarx
