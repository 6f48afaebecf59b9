// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <functional>

namespace gspoison {

/// Caps worker threads for parallel_for. 0 means hardware concurrency.
void set_thread_count(int n);
int thread_count();

/// Splits [0, n) into contiguous chunks and runs fn(begin, end) on each.
/// Callers write results into per-index slots so output does not depend
/// on the schedule.
void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& fn);

} // namespace gspoison
