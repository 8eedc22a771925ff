#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <functional>
#include <thread>
#include <vector>

namespace sfolab {

// Runs fn(begin, end) over fixed-size chunks of [0, n). Chunk boundaries never depend on
// the thread count, so per-chunk results are identical for any `threads`.
inline void parallel_chunks(std::size_t n, std::size_t chunk, int threads,
                            const std::function<void(std::size_t, std::size_t)>& fn) {
  if (n == 0) return;
  chunk = std::max<std::size_t>(chunk, 1);
  const std::size_t n_chunks = (n + chunk - 1) / chunk;
  const std::size_t workers = std::clamp<std::size_t>(threads < 1 ? 1 : threads, 1, n_chunks);
  auto run = [&](std::size_t w, std::exception_ptr& err) {
    try {
      for (std::size_t c = w; c < n_chunks; c += workers) fn(c * chunk, std::min(n, (c + 1) * chunk));
    } catch (...) {
      err = std::current_exception();
    }
  };
  std::vector<std::exception_ptr> errors(workers);
  if (workers == 1) {
    run(0, errors[0]);
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(run, w, std::ref(errors[w]));
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace sfolab
