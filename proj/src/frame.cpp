#include "bad/frame.hpp"

#include "bad/error.hpp"

namespace bad {

Frame::Frame(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw Error(ErrorKind::InvalidArgument, "frame capacity must be positive");
}

void Frame::append(std::initializer_list<ByteSpan> parts) {
  std::size_t n = 0;
  for (auto p : parts) n += p.size();
  if (!empty() && !fits(n)) throw Error(ErrorKind::InvalidArgument, "tuple does not fit the frame");
  if (bytes_.capacity() < bytes_.size() + n) bytes_.reserve(std::max(capacity_, bytes_.size() + n));
  for (auto p : parts) bytes_.insert(bytes_.end(), p.begin(), p.end());
  ends_.push_back(static_cast<std::uint32_t>(bytes_.size()));
}

ByteSpan Frame::tuple(std::size_t i) const {
  std::uint32_t begin = i == 0 ? 0 : ends_[i - 1];
  return {bytes_.data() + begin, ends_[i] - begin};
}

void Frame::clear() {
  bytes_.clear();
  ends_.clear();
}

std::vector<Frame> pack_frames(std::span<const ByteSpan> records, std::size_t capacity) {
  std::vector<Frame> out;
  Frame cur(capacity);
  for (auto r : records) {
    if (!cur.empty() && !cur.fits(r.size())) {
      out.push_back(std::move(cur));
      cur = Frame(capacity);
    }
    cur.append(r);
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

FrameWriter::FrameWriter(std::size_t capacity, FrameConsumer& consumer) : frame_(capacity), consumer_(consumer) {}

void FrameWriter::append(std::initializer_list<ByteSpan> parts) {
  std::size_t n = 0;
  for (auto p : parts) n += p.size();
  if (n > frame_.capacity()) {
    flush();
    Frame big(frame_.capacity());
    big.append(parts);
    consumer_.push(big);
    ++pushed_;
    return;
  }
  if (!frame_.fits(n)) flush();
  frame_.append(parts);
}

void FrameWriter::flush() {
  if (frame_.empty()) return;
  consumer_.push(frame_);
  ++pushed_;
  frame_.clear();
}

}  // namespace bad
