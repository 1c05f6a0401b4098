/*
 * Copyright 2026 The dlflow Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <algorithm>
#include <atomic>
#include <bit>
#include <cstddef>
#include <memory>
#include <new>
#include <stdexcept>
#include <utility>
#include <vector>

namespace dlflow {

inline constexpr std::size_t kDefaultRingCapacity = 4096;

// Bounded lock-free single-producer/single-consumer FIFO. Neither side
// blocks: push on a full ring fails, drains on an empty ring return nothing.
//
// The producer owns write_ and the slots at positions >= write_; the consumer
// owns read_ and the slots in [read_, write_). Consumer-side removal
// (extract_if) only rearranges slots inside that consumer-owned window.
template <typename T>
class CRing {
 public:
  explicit CRing(std::size_t capacity = kDefaultRingCapacity)
      : mask_(capacity - 1), slots_(std::make_unique<T[]>(capacity)) {
    if (capacity == 0 || !std::has_single_bit(capacity)) {
      throw std::invalid_argument("ring capacity must be a power of two");
    }
  }

  CRing(const CRing&) = delete;
  CRing& operator=(const CRing&) = delete;

  std::size_t capacity() const { return mask_ + 1; }

  // Producer side.
  bool push(T value) {
    const std::size_t w = write_.load(std::memory_order_relaxed);
    if (w - read_.load(std::memory_order_acquire) > mask_) return false;
    slots_[w & mask_] = std::move(value);
    write_.store(w + 1, std::memory_order_release);
    return true;
  }

  // Exact when called from either side with the other side quiescent; a
  // lower bound for the consumer while the producer is running.
  std::size_t size() const {
    const std::size_t r = read_.load(std::memory_order_acquire);
    const std::size_t w = write_.load(std::memory_order_acquire);
    return w - r;
  }

  bool empty() const { return size() == 0; }

  // Consumer side: removes and returns min(n, size()) oldest elements.
  std::vector<T> drain_up_to(std::size_t n) {
    const std::size_t r = read_.load(std::memory_order_relaxed);
    const std::size_t w = write_.load(std::memory_order_acquire);
    const std::size_t count = std::min(n, w - r);
    std::vector<T> out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) out.push_back(std::move(slots_[(r + i) & mask_]));
    read_.store(r + count, std::memory_order_release);
    return out;
  }

  // Consumer side: visits the visible elements front to back, removes those
  // for which pred returns true and keeps the rest in FIFO order.
  template <typename Pred>
  std::vector<T> extract_if(Pred&& pred) {
    const std::size_t r = read_.load(std::memory_order_relaxed);
    const std::size_t w = write_.load(std::memory_order_acquire);
    const std::size_t n = w - r;
    std::vector<char> take(n, 0);
    std::size_t hits = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (pred(std::as_const(slots_[(r + i) & mask_]))) {
        take[i] = 1;
        ++hits;
      }
    }
    std::vector<T> out;
    if (hits == 0) return out;
    out.resize(hits);
    // Compact survivors toward the newest end, walking backwards.
    std::size_t dst = n;
    std::size_t h = hits;
    for (std::size_t i = n; i-- > 0;) {
      T& cur = slots_[(r + i) & mask_];
      if (take[i]) {
        out[--h] = std::move(cur);
      } else if (--dst != i) {
        slots_[(r + dst) & mask_] = std::move(cur);
      }
    }
    read_.store(r + hits, std::memory_order_release);
    return out;
  }

  // Consumer side, read-only view of the i-th oldest element.
  const T& peek(std::size_t i) const {
    return slots_[(read_.load(std::memory_order_relaxed) + i) & mask_];
  }

 private:
  static constexpr std::size_t kLine = 64;

  const std::size_t mask_;
  std::unique_ptr<T[]> slots_;
  alignas(kLine) std::atomic<std::size_t> write_{0};
  alignas(kLine) std::atomic<std::size_t> read_{0};
};

}  // namespace dlflow
