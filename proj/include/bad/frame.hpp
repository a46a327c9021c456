#pragma once

#include <cstdint>
#include <initializer_list>
#include <span>
#include <vector>

#include "bad/serialize.hpp"

namespace bad {

// Fixed-capacity buffer of whole serialized tuples, the unit of data exchange between operators.
// A tuple never spans frames; a frame holding a single tuple larger than the capacity is enlarged
// to fit it.
class Frame {
 public:
  explicit Frame(std::size_t capacity);

  std::size_t capacity() const { return capacity_; }
  std::size_t actual_size() const { return bytes_.size(); }
  std::size_t tuple_count() const { return ends_.size(); }
  bool empty() const { return ends_.empty(); }
  bool enlarged() const { return bytes_.size() > capacity_; }
  bool fits(std::size_t n) const { return bytes_.size() + n <= capacity_; }

  // Appends the concatenation of `parts` as one tuple. Only an empty frame may exceed capacity.
  void append(std::initializer_list<ByteSpan> parts);
  void append(ByteSpan tuple) { append({tuple}); }

  ByteSpan tuple(std::size_t i) const;
  void clear();

  template <class Fn>
  void for_each(Fn&& fn) const {
    std::uint32_t begin = 0;
    for (auto end : ends_) {
      fn(ByteSpan(bytes_.data() + begin, end - begin));
      begin = end;
    }
  }

 private:
  std::size_t capacity_;
  Bytes bytes_;
  std::vector<std::uint32_t> ends_;
};

// Greedy, order-preserving packing.
std::vector<Frame> pack_frames(std::span<const ByteSpan> records, std::size_t capacity);

class FrameConsumer {
 public:
  virtual ~FrameConsumer() = default;
  virtual void push(const Frame& frame) = 0;
};

// Producer side of an operator edge. Full frames are pushed to the consumer immediately and the
// buffer is reused; an oversized tuple gets a freshly allocated enlarged frame of its own.
class FrameWriter {
 public:
  FrameWriter(std::size_t capacity, FrameConsumer& consumer);

  void append(std::initializer_list<ByteSpan> parts);
  void flush();
  std::size_t frames_pushed() const { return pushed_; }

 private:
  Frame frame_;
  FrameConsumer& consumer_;
  std::size_t pushed_ = 0;
};

}  // namespace bad
