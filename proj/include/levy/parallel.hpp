#pragma once

#include <cstddef>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace levy {

/// Worker count used by the Monte Carlo routines. Results never depend on it.
unsigned thread_count();
void set_thread_count(unsigned n);

/// Number of fixed work chunks used by reductions. Constant so that the
/// summation order is independent of the thread count.
inline constexpr std::size_t kReductionChunks = 64;

/// Runs body(chunk_index, begin, end) over [0, n) split into `chunks` equal
/// pieces. Chunk boundaries depend only on n and chunks.
void for_each_chunk(std::size_t n, std::size_t chunks,
                    const std::function<void(std::size_t, std::size_t, std::size_t)>& body);

/// Runs body(i) for i in [0, n).
inline void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body) {
  for_each_chunk(n, kReductionChunks, [&](std::size_t, std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) body(i);
  });
}

}  // namespace levy
