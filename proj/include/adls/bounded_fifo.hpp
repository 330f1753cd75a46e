#pragma once

#include <condition_variable>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <mutex>
#include <string>
#include <vector>

#include "adls/error.hpp"

namespace adls {

enum class Backpressure { block, drop_oldest };

const char* to_string(Backpressure b);
Backpressure parse_backpressure(const std::string& name);

// Bounded FIFO between pipeline stages; any number of producers, one consumer.
// close() may be called from either side: producers then fail fast and the
// consumer drains what is left.
template <typename T>
class BoundedFifo {
 public:
  BoundedFifo(std::size_t capacity, Backpressure policy) : capacity_(capacity), policy_(policy) {
    if (capacity == 0) throw ConfigError("buffer capacity must be positive");
  }

  // Returns false when the queue is closed. Under drop_oldest a full queue
  // discards its head and counts it in dropped().
  bool enqueue(T item) {
    std::unique_lock lock(mutex_);
    if (items_.size() >= capacity_ && !closed_) {
      if (policy_ == Backpressure::drop_oldest) {
        items_.pop_front();
        ++dropped_;
      } else {
        ++producer_waits_;
        not_full_.wait(lock, [&] { return items_.size() < capacity_ || closed_; });
      }
    }
    if (closed_) return false;
    items_.push_back(std::move(item));
    lock.unlock();
    not_empty_.notify_one();
    return true;
  }

  // Blocks until `n` items are queued or the queue is closed; returns at most
  // `n` items in FIFO order. An empty result means closed and drained.
  std::vector<T> next_batch(std::size_t n) {
    std::vector<T> out;
    if (n == 0) return out;
    std::unique_lock lock(mutex_);
    not_empty_.wait(lock, [&] { return items_.size() >= n || closed_; });
    const std::size_t take = std::min(n, items_.size());
    out.reserve(take);
    for (std::size_t i = 0; i < take; ++i) {
      out.push_back(std::move(items_.front()));
      items_.pop_front();
    }
    lock.unlock();
    not_full_.notify_all();
    return out;
  }

  void close() {
    {
      std::lock_guard lock(mutex_);
      closed_ = true;
    }
    not_empty_.notify_all();
    not_full_.notify_all();
  }

  std::size_t size() const {
    std::lock_guard lock(mutex_);
    return items_.size();
  }
  std::uint64_t dropped() const {
    std::lock_guard lock(mutex_);
    return dropped_;
  }
  std::uint64_t producer_waits() const {
    std::lock_guard lock(mutex_);
    return producer_waits_;
  }
  std::size_t capacity() const noexcept { return capacity_; }

 private:
  const std::size_t capacity_;
  const Backpressure policy_;
  mutable std::mutex mutex_;
  std::condition_variable not_empty_;
  std::condition_variable not_full_;
  std::deque<T> items_;
  bool closed_ = false;
  std::uint64_t dropped_ = 0;
  std::uint64_t producer_waits_ = 0;
};

}  // namespace adls
