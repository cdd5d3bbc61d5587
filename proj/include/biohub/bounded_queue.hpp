// Copyright 2026 The biohub Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef BIOHUB__BOUNDED_QUEUE_HPP_
#define BIOHUB__BOUNDED_QUEUE_HPP_

#include <chrono>
#include <condition_variable>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <mutex>
#include <optional>
#include <utility>

namespace biohub
{

/// Multi-producer queue that drops its oldest element when full.
template<typename T>
class BoundedQueue
{
public:
  explicit BoundedQueue(std::size_t capacity)
  : capacity_(capacity == 0 ? 1 : capacity) {}

  /// Returns false once closed.
  bool push(T value)
  {
    std::lock_guard lock(mu_);
    if (closed_) {
      return false;
    }
    if (items_.size() >= capacity_) {
      items_.pop_front();
      ++dropped_;
    }
    items_.push_back(std::move(value));
    cv_.notify_one();
    return true;
  }

  /// Waits up to `timeout`; nullopt on timeout or when closed and drained.
  template<typename Rep, typename Period>
  std::optional<T> pop_for(std::chrono::duration<Rep, Period> timeout)
  {
    std::unique_lock lock(mu_);
    cv_.wait_for(lock, timeout, [this] {return closed_ || !items_.empty();});
    if (items_.empty()) {
      return std::nullopt;
    }
    T v = std::move(items_.front());
    items_.pop_front();
    return v;
  }

  void close()
  {
    std::lock_guard lock(mu_);
    closed_ = true;
    cv_.notify_all();
  }

  bool closed_and_empty() const
  {
    std::lock_guard lock(mu_);
    return closed_ && items_.empty();
  }

  std::uint64_t dropped() const
  {
    std::lock_guard lock(mu_);
    return dropped_;
  }

  std::size_t capacity() const noexcept {return capacity_;}

private:
  const std::size_t capacity_;
  mutable std::mutex mu_;
  std::condition_variable cv_;
  std::deque<T> items_;
  std::uint64_t dropped_ = 0;
  bool closed_ = false;
};

}  // namespace biohub

#endif  // BIOHUB__BOUNDED_QUEUE_HPP_
