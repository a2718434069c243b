#include "lsvi/parallel.hpp"

#include <atomic>
#include <algorithm>
#include <cstdlib>
#include <thread>
#include <vector>

namespace lsvi {

namespace {
std::atomic<int> g_override{0};
constexpr std::ptrdiff_t kChunk = 4096;
}  // namespace

void set_thread_override(int n) { g_override.store(n); }

int thread_count() {
  const int ov = g_override.load();
  if (ov > 0) return ov;
  if (const char* env = std::getenv("LSVI_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  return 1;
}

void parallel_for_chunks(std::ptrdiff_t n,
                         const std::function<void(std::ptrdiff_t, std::ptrdiff_t)>& fn) {
  if (n <= 0) return;
  const std::ptrdiff_t nchunks = (n + kChunk - 1) / kChunk;
  const int workers = static_cast<int>(std::min<std::ptrdiff_t>(thread_count(), nchunks));
  if (workers <= 1) {
    for (std::ptrdiff_t c = 0; c < nchunks; ++c)
      fn(c * kChunk, std::min(n, (c + 1) * kChunk));
    return;
  }
  std::atomic<std::ptrdiff_t> next{0};
  auto work = [&]() {
    for (;;) {
      const std::ptrdiff_t c = next.fetch_add(1);
      if (c >= nchunks) return;
      fn(c * kChunk, std::min(n, (c + 1) * kChunk));
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers - 1);
  for (int w = 1; w < workers; ++w) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
}

void parallel_for(std::ptrdiff_t n, const std::function<void(std::ptrdiff_t)>& fn) {
  parallel_for_chunks(n, [&](std::ptrdiff_t b, std::ptrdiff_t e) {
    for (std::ptrdiff_t i = b; i < e; ++i) fn(i);
  });
}

}  // namespace lsvi
