#include "difflab/parallel.hpp"

#include <atomic>
#include <thread>
#include <vector>

namespace difflab {

void parallel_chunks(std::int64_t n, int threads, std::int64_t chunk,
                     const std::function<void(std::int64_t, std::int64_t, std::size_t)>& fn) {
  if (n <= 0) return;
  if (chunk < 1) chunk = 1;
  const std::size_t n_chunks = static_cast<std::size_t>((n + chunk - 1) / chunk);
  if (threads < 2 || n_chunks < 2) {
    for (std::size_t c = 0; c < n_chunks; ++c) {
      const std::int64_t b = static_cast<std::int64_t>(c) * chunk;
      fn(b, std::min(n, b + chunk), c);
    }
    return;
  }
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (;;) {
      const std::size_t c = next.fetch_add(1);
      if (c >= n_chunks) return;
      const std::int64_t b = static_cast<std::int64_t>(c) * chunk;
      fn(b, std::min(n, b + chunk), c);
    }
  };
  std::vector<std::thread> pool;
  const int n_workers = std::min<int>(threads, static_cast<int>(n_chunks));
  pool.reserve(static_cast<std::size_t>(n_workers) - 1);
  for (int i = 1; i < n_workers; ++i) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
}

}  // namespace difflab
