#pragma once

#include <functional>

namespace fbsmp {

// Worker cap: min(hardware_concurrency, FBSDE_SMP_THREADS). The env var set
// to 1 (or an unparseable value) forces serial execution.
int thread_cap();

// Runs fn(i) for i in [begin, end). Work is split into contiguous index
// blocks; callers keep determinism by writing results into per-index slots
// and reducing in index order afterwards.
void parallel_for(int begin, int end, const std::function<void(int)>& fn);

}  // namespace fbsmp
