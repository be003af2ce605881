#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace bisift {

/// Splits [0, n) into at most `workers` contiguous blocks and runs
/// body(begin, end, block) on each, the first block on the calling thread.
/// The first exception thrown by any block is rethrown after all blocks join.
template <typename Body>
void parallel_blocks(std::size_t n, unsigned workers, Body&& body) {
  const std::size_t blocks = std::max<std::size_t>(1, std::min<std::size_t>(workers, n));
  if (blocks == 1) {
    body(std::size_t{0}, n, std::size_t{0});
    return;
  }
  std::vector<std::exception_ptr> errors(blocks);
  auto run = [&](std::size_t b) {
    const std::size_t begin = n * b / blocks;
    const std::size_t end = n * (b + 1) / blocks;
    try {
      body(begin, end, b);
    } catch (...) {
      errors[b] = std::current_exception();
    }
  };
  {
    std::vector<std::jthread> threads;
    threads.reserve(blocks - 1);
    for (std::size_t b = 1; b < blocks; ++b) threads.emplace_back(run, b);
    run(0);
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

/// Runs body(i) for every i in [0, n).
template <typename Body>
void parallel_for(std::size_t n, unsigned workers, Body&& body) {
  parallel_blocks(n, workers, [&body](std::size_t begin, std::size_t end, std::size_t) {
    for (std::size_t i = begin; i < end; ++i) body(i);
  });
}

}  // namespace bisift
