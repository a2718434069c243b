#pragma once

#include <cstddef>
#include <functional>

namespace lsvi {

// Worker count: programmatic override, else LSVI_THREADS, else 1.
// Results never depend on this value; it only sets how many threads share
// the fixed-size chunks of an index range.
int thread_count();
void set_thread_override(int n);  // 0 clears the override

// Apply fn(i) for i in [0, n). Each index writes only its own outputs;
// chunk boundaries are fixed, so any thread count gives identical results.
void parallel_for(std::ptrdiff_t n, const std::function<void(std::ptrdiff_t)>& fn);

// Chunked variant: fn(begin, end) over fixed-size chunks.
void parallel_for_chunks(std::ptrdiff_t n,
                         const std::function<void(std::ptrdiff_t, std::ptrdiff_t)>& fn);

}  // namespace lsvi
