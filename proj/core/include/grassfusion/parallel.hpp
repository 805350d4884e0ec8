#pragma once

#include <cstdint>
#include <functional>

namespace gf {

// Runs fn(i) for i in [0, n). Work is split into contiguous chunks, one per
// worker; fn must only write to i-indexed slots (no shared mutable state).
void parallel_for(std::int64_t n, int threads, const std::function<void(std::int64_t)>& fn);

}  // namespace gf
