#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "bad/serialize.hpp"
#include "bad/value.hpp"

namespace bad {

using Timestamp = std::int64_t;  // microseconds
using PrimaryKey = std::uint64_t;

struct FieldSpec {
  std::string name;  // dotted path
  ValueType type;
};

// Declared type of a dataset (the CREATE TYPE analog). Every declared field is required.
class Schema {
 public:
  Schema() = default;
  explicit Schema(std::vector<FieldSpec> fields);

  const std::vector<FieldSpec>& fields() const { return fields_; }
  std::size_t size() const { return fields_.size(); }
  std::optional<std::size_t> index_of(std::string_view name) const;
  std::size_t require(std::string_view name) const;  // throws SchemaViolation

 private:
  std::vector<FieldSpec> fields_;
  std::unordered_map<std::string, std::size_t> index_;
};

// Values are stored in schema order.
struct Record {
  PrimaryKey pk = 0;
  Timestamp arrivalTs = 0;
  std::vector<Value> values;
};

// Validates arity and types, coercing lossless numeric mismatches in place.
void conform(Record& rec, const Schema& schema);

// Layout: u32 size | u64 pk | i64 ts | u64 seq | u16 n | u32 offset[n] | values.
void serialize_record(const Record& rec, std::uint64_t seq, Bytes& out);
std::size_t serialized_size(const Record& rec);

// Zero-copy accessor over a serialized record.
class RecordView {
 public:
  RecordView() = default;
  explicit RecordView(const std::uint8_t* data) : data_(data) {}

  std::uint32_t size() const { return load<std::uint32_t>(data_); }
  PrimaryKey pk() const { return load<std::uint64_t>(data_ + 4); }
  Timestamp ts() const { return load<std::int64_t>(data_ + 12); }
  std::uint64_t seq() const { return load<std::uint64_t>(data_ + 20); }
  std::uint16_t field_count() const { return load<std::uint16_t>(data_ + 28); }
  ValueRef field(std::size_t i) const;
  ByteSpan bytes() const { return {data_, size()}; }
  const std::uint8_t* data() const { return data_; }
  Record materialize() const;

 private:
  const std::uint8_t* data_ = nullptr;
};

}  // namespace bad
