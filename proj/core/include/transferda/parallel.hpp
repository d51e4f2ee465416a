#pragma once

#include <functional>

namespace tda {

// Worker cap: TRANSFER_DA_THREADS if set (>=1), otherwise the hardware
// concurrency. Results never depend on the split, only wall time does.
int worker_count();

// Calls chunk_fn(begin, end) over a disjoint cover of [0, n); serial when a
// single worker is available.
void parallel_for(long long n, const std::function<void(long long, long long)>& chunk_fn);

}  // namespace tda
