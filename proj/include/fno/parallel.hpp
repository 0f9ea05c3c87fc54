#pragma once

#include <cstddef>
#include <functional>

namespace fno {

/// Number of worker threads: the override if one is active, else FNO_THREADS
/// if set (>=1), else the machine's hardware concurrency.
int worker_count();

/// Process-wide worker override (0 clears it). Results never depend on the
/// worker count; this only pins resource usage, e.g. for latency timing.
void set_worker_override(int workers);

/// Runs fn(begin, end) over a static partition of [0, n). Each invocation
/// must write only to data indexed by its own range; under that contract
/// results are bit-identical to a sequential loop regardless of thread
/// count. Runs inline when n is small or only one worker is available.
void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& fn);

}  // namespace fno
