#include "abrlab/replay_buffer.hpp"

#include <algorithm>
#include <utility>

#include "abrlab/error.hpp"

namespace abrlab {

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw ConfigError("replay buffer capacity must be >= 1");
  ring_.reserve(std::min<std::size_t>(capacity, 4096));
}

void ReplayBuffer::push(ExpertSample sample) {
  {
    std::lock_guard lock(mutex_);
    if (ring_.size() < capacity_) {
      ring_.push_back(std::move(sample));
    } else {
      ring_[head_] = std::move(sample);
      head_ = (head_ + 1) % capacity_;
    }
    ++pushed_;
  }
  pushed_cv_.notify_all();
}

std::vector<ExpertSample> ReplayBuffer::sample_batch(std::size_t n, Rng &rng) const {
  std::lock_guard lock(mutex_);
  const std::size_t size = ring_.size();
  if (size < n) throw DataError("insufficient samples");
  // Floyd's algorithm picks a uniform n-subset in O(n); a shuffle then makes
  // the order uniform too.
  std::vector<std::size_t> picked;
  picked.reserve(n);
  for (std::size_t j = size - n; j < size; ++j) {
    const std::size_t t = rng.index(j + 1);
    if (std::find(picked.begin(), picked.end(), t) == picked.end()) {
      picked.push_back(t);
    } else {
      picked.push_back(j);
    }
  }
  for (std::size_t i = n; i > 1; --i) std::swap(picked[i - 1], picked[rng.index(i)]);
  std::vector<ExpertSample> out;
  out.reserve(n);
  for (std::size_t i : picked) out.push_back(ring_[(head_ + i) % size]);
  return out;
}

std::size_t ReplayBuffer::size() const {
  std::lock_guard lock(mutex_);
  return ring_.size();
}

std::size_t ReplayBuffer::total_pushed() const {
  std::lock_guard lock(mutex_);
  return pushed_;
}

std::vector<ExpertSample> ReplayBuffer::contents() const {
  std::lock_guard lock(mutex_);
  std::vector<ExpertSample> out;
  out.reserve(ring_.size());
  for (std::size_t i = 0; i < ring_.size(); ++i) out.push_back(ring_[(head_ + i) % ring_.size()]);
  return out;
}

std::size_t ReplayBuffer::wait_for_push(std::size_t seen, std::chrono::milliseconds timeout) const {
  std::unique_lock lock(mutex_);
  pushed_cv_.wait_for(lock, timeout, [&] { return pushed_ > seen; });
  return pushed_;
}

}  // namespace abrlab
