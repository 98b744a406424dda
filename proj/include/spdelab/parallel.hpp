#ifndef SPDELAB_PARALLEL_HPP
#define SPDELAB_PARALLEL_HPP

#include <cstdint>
#include <functional>

namespace spdelab {

// Thread count from SPDELAB_THREADS, defaulting to hardware concurrency.
int thread_count();

// Runs fn(i) for i in [0, n). Work is split into contiguous blocks; callers
// must write only to per-index slots so results do not depend on scheduling.
void parallel_for(std::int64_t n, const std::function<void(std::int64_t)>& fn);

}  // namespace spdelab

#endif  // SPDELAB_PARALLEL_HPP
