#pragma once

// Deterministic chunked parallelism. Work is cut into fixed-size chunks,
// chunks are claimed by worker threads in any order, and the per-chunk
// results come back in chunk order so reductions never depend on scheduling.

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace gci {

// Samples per chunk. Part of the reproducibility contract: changing it changes
// which random stream each sample draws from.
inline constexpr std::size_t kChunkSize = 4096;

namespace detail {
inline unsigned default_thread_count() {
  if (const char* env = std::getenv("GCI_THREADS")) {
    const int v = std::atoi(env);
    if (v > 0) return static_cast<unsigned>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

inline std::atomic<unsigned>& thread_count_storage() {
  static std::atomic<unsigned> count{default_thread_count()};
  return count;
}
}  // namespace detail

inline unsigned thread_count() { return detail::thread_count_storage().load(); }

// 0 restores the default (GCI_THREADS or hardware concurrency).
inline void set_thread_count(unsigned n) {
  detail::thread_count_storage().store(n == 0 ? detail::default_thread_count() : n);
}

inline std::size_t chunk_count(std::size_t items, std::size_t chunk = kChunkSize) {
  return (items + chunk - 1) / chunk;
}

// Calls fn(chunk_index, begin, end) for every chunk of [0, items) and returns
// the results indexed by chunk.
template <class Result, class Fn>
std::vector<Result> map_chunks(std::size_t items, Fn&& fn, std::size_t chunk = kChunkSize) {
  const std::size_t chunks = chunk_count(items, chunk);
  std::vector<Result> out(chunks);
  auto run = [&](std::size_t c) {
    const std::size_t begin = c * chunk;
    out[c] = fn(c, begin, std::min(items, begin + chunk));
  };

  const unsigned workers = static_cast<unsigned>(std::min<std::size_t>(thread_count(), chunks));
  if (workers <= 1) {
    for (std::size_t c = 0; c < chunks; ++c) run(c);
    return out;
  }

  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t c = next++; c < chunks; c = next++) {
        try {
          run(c);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
          next = chunks;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
  return out;
}

}  // namespace gci
