#pragma once

#include <cstddef>
#include <functional>

namespace syncdiff {

/// Worker count: SYNCDIFF_THREADS when set to a positive integer,
/// otherwise the hardware concurrency (at least 1).
std::size_t worker_count();

/// Runs body(i) for i in [0, n). Each index is visited exactly once; the
/// caller must make bodies write disjoint outputs. Exceptions from any
/// body are rethrown on the calling thread (the first one wins).
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace syncdiff
