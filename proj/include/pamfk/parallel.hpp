#pragma once

#include <atomic>
#include <cstdint>
#include <thread>
#include <vector>

namespace pamfk::par {

inline int& thread_cap() {
  static int cap = 1;
  return cap;
}

inline void set_threads(int n) { thread_cap() = n < 1 ? 1 : n; }

/// Splits [0, count) into a fixed chunk grid, evaluates `chunk_fn` on each
/// chunk, and combines the per-chunk results with a pairwise tree in chunk
/// order. The chunk grid does not depend on the worker count, so the result
/// is bit-identical for any `--threads` value.
template <typename ChunkFn>
double reduce_chunks(uint64_t count, uint64_t chunk_size, const ChunkFn& chunk_fn) {
  if (count == 0) return 0.0;
  const uint64_t n_chunks = (count + chunk_size - 1) / chunk_size;
  std::vector<double> partial(n_chunks, 0.0);

  const int workers = std::min<uint64_t>(thread_cap(), n_chunks);
  if (workers <= 1) {
    for (uint64_t c = 0; c < n_chunks; ++c)
      partial[c] = chunk_fn(c * chunk_size, std::min(count, (c + 1) * chunk_size));
  } else {
    std::atomic<uint64_t> next{0};
    auto work = [&] {
      for (;;) {
        const uint64_t c = next.fetch_add(1);
        if (c >= n_chunks) return;
        partial[c] = chunk_fn(c * chunk_size, std::min(count, (c + 1) * chunk_size));
      }
    };
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int i = 0; i < workers; ++i) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }

  // Pairwise combine in index order.
  std::vector<double> level = std::move(partial);
  while (level.size() > 1) {
    std::vector<double> up((level.size() + 1) / 2, 0.0);
    for (size_t i = 0; i < up.size(); ++i) {
      const size_t a = 2 * i, b = 2 * i + 1;
      up[i] = b < level.size() ? level[a] + level[b] : level[a];
    }
    level = std::move(up);
  }
  return level[0];
}

/// Same grid and ordering, two accumulators (sum, sum of squares).
template <typename ChunkFn>
std::pair<double, double> reduce_chunks2(uint64_t count, uint64_t chunk_size,
                                         const ChunkFn& chunk_fn) {
  if (count == 0) return {0.0, 0.0};
  const uint64_t n_chunks = (count + chunk_size - 1) / chunk_size;
  std::vector<std::pair<double, double>> partial(n_chunks, {0.0, 0.0});

  const int workers = std::min<uint64_t>(thread_cap(), n_chunks);
  if (workers <= 1) {
    for (uint64_t c = 0; c < n_chunks; ++c)
      partial[c] = chunk_fn(c * chunk_size, std::min(count, (c + 1) * chunk_size));
  } else {
    std::atomic<uint64_t> next{0};
    auto work = [&] {
      for (;;) {
        const uint64_t c = next.fetch_add(1);
        if (c >= n_chunks) return;
        partial[c] = chunk_fn(c * chunk_size, std::min(count, (c + 1) * chunk_size));
      }
    };
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int i = 0; i < workers; ++i) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }

  std::vector<std::pair<double, double>> level = std::move(partial);
  while (level.size() > 1) {
    std::vector<std::pair<double, double>> up((level.size() + 1) / 2, {0.0, 0.0});
    for (size_t i = 0; i < up.size(); ++i) {
      const size_t a = 2 * i, b = 2 * i + 1;
      up[i] = level[a];
      if (b < level.size()) {
        up[i].first += level[b].first;
        up[i].second += level[b].second;
      }
    }
    level = std::move(up);
  }
  return level[0];
}

}  // namespace pamfk::par
