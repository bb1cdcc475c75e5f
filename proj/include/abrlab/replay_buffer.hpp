#pragma once

#include <chrono>
#include <condition_variable>
#include <cstddef>
#include <mutex>
#include <vector>

#include "abrlab/policy_net.hpp"
#include "abrlab/rng.hpp"

namespace abrlab {

/// Bounded FIFO ring of expert samples. Internally synchronized: any number
/// of producers may push while one consumer samples batches.
class ReplayBuffer {
public:
  explicit ReplayBuffer(std::size_t capacity);  // throws ConfigError on 0

  /// Appends; evicts the oldest sample when full.
  void push(ExpertSample sample);

  /// n distinct samples, uniformly without replacement, in random order.
  /// Throws DataError("insufficient samples") when size() < n.
  std::vector<ExpertSample> sample_batch(std::size_t n, Rng &rng) const;

  std::size_t size() const;
  std::size_t capacity() const { return capacity_; }
  /// Pushes since construction, evicted ones included.
  std::size_t total_pushed() const;
  /// Oldest first.
  std::vector<ExpertSample> contents() const;

  /// Blocks until total_pushed() > seen or the timeout passes; returns
  /// total_pushed().
  std::size_t wait_for_push(std::size_t seen, std::chrono::milliseconds timeout) const;

private:
  std::size_t capacity_;
  std::vector<ExpertSample> ring_;
  std::size_t head_ = 0;  // index of the oldest sample once full
  std::size_t pushed_ = 0;
  mutable std::mutex mutex_;
  mutable std::condition_variable pushed_cv_;
};

}  // namespace abrlab
