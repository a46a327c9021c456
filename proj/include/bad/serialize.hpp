#pragma once

#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "bad/value.hpp"

namespace bad {

using Bytes = std::vector<std::uint8_t>;
using ByteSpan = std::span<const std::uint8_t>;

// Little-endian host assumed; the encoding never leaves the process except through JSON.
class ByteWriter {
 public:
  explicit ByteWriter(Bytes& out) : out_(out) {}

  template <class T>
  void put(T v) {
    static_assert(std::is_trivially_copyable_v<T>);
    auto pos = out_.size();
    out_.resize(pos + sizeof(T));
    std::memcpy(out_.data() + pos, &v, sizeof(T));
  }

  void put_bytes(const void* data, std::size_t n) {
    auto pos = out_.size();
    out_.resize(pos + n);
    if (n) std::memcpy(out_.data() + pos, data, n);
  }

  void put_zeros(std::size_t n) { out_.resize(out_.size() + n, 0); }

  void put_string(std::string_view s) {
    put<std::uint32_t>(static_cast<std::uint32_t>(s.size()));
    put_bytes(s.data(), s.size());
  }

  void put_value(const ValueRef& v);
  void put_value(const Value& v) { put_value(as_ref(v)); }

  // Patches a previously reserved u32 (length prefixes written after the body).
  void patch_u32(std::size_t offset, std::uint32_t v) { std::memcpy(out_.data() + offset, &v, sizeof v); }

  std::size_t size() const { return out_.size(); }

 private:
  Bytes& out_;
};

class ByteReader {
 public:
  explicit ByteReader(ByteSpan in) : in_(in) {}

  template <class T>
  T get() {
    T v;
    std::memcpy(&v, in_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }

  std::string_view get_string() {
    auto n = get<std::uint32_t>();
    std::string_view s(reinterpret_cast<const char*>(in_.data() + pos_), n);
    pos_ += n;
    return s;
  }

  ValueRef get_value();
  void skip(std::size_t n) { pos_ += n; }
  std::size_t position() const { return pos_; }
  void seek(std::size_t pos) { pos_ = pos; }
  ByteSpan rest() const { return in_.subspan(pos_); }

 private:
  ByteSpan in_;
  std::size_t pos_ = 0;
};

template <class T>
T load(const std::uint8_t* p) {
  T v;
  std::memcpy(&v, p, sizeof(T));
  return v;
}

// Canonical encoding of a parameter tuple; equal tuples have equal bytes, so the encoding doubles
// as a hash-join key.
std::string encode_key(std::span<const Value> values);
std::string encode_key(std::span<const ValueRef> values);
ParamTuple decode_key(std::string_view key);

}  // namespace bad
