#pragma once

#include <cstddef>
#include <functional>

namespace snerf {

/// Caps worker threads used by parallel_for (1 = run inline). Defaults to 1.
void set_thread_count(int n);
int thread_count();

/// Calls fn(i) for every i in [0, n). Work is split into contiguous blocks;
/// callers write only to per-index outputs so results never depend on the
/// thread count. The first exception thrown by a worker is rethrown.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace snerf
