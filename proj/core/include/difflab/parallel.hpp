#pragma once

#include <cstdint>
#include <functional>

namespace difflab {

// Runs fn(begin, end, chunk_index) over fixed-size chunks of [0, n), spread
// across up to `threads` workers. Chunk boundaries depend only on `chunk`,
// never on the thread count, so reductions that combine per-chunk partials
// in chunk order give bit-identical results at any parallelism.
void parallel_chunks(std::int64_t n, int threads, std::int64_t chunk,
                     const std::function<void(std::int64_t, std::int64_t, std::size_t)>& fn);

}  // namespace difflab
