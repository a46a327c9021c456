#include "bad/record.hpp"

#include "bad/error.hpp"

namespace bad {

Schema::Schema(std::vector<FieldSpec> fields) : fields_(std::move(fields)) {
  for (std::size_t i = 0; i < fields_.size(); ++i) {
    if (!index_.emplace(fields_[i].name, i).second) {
      throw Error(ErrorKind::SchemaViolation, "duplicate field " + fields_[i].name);
    }
  }
}

std::optional<std::size_t> Schema::index_of(std::string_view name) const {
  auto it = index_.find(std::string(name));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::size_t Schema::require(std::string_view name) const {
  auto i = index_of(name);
  if (!i) throw Error(ErrorKind::SchemaViolation, "unknown field " + std::string(name));
  return *i;
}

void conform(Record& rec, const Schema& schema) {
  if (rec.values.size() != schema.size()) {
    throw Error(ErrorKind::SchemaViolation, "record " + std::to_string(rec.pk) + " has " +
                                                std::to_string(rec.values.size()) + " fields, schema declares " +
                                                std::to_string(schema.size()));
  }
  for (std::size_t i = 0; i < schema.size(); ++i) {
    if (!coerce(rec.values[i], schema.fields()[i].type)) {
      throw Error(ErrorKind::SchemaViolation, "field " + schema.fields()[i].name + " of record " +
                                                  std::to_string(rec.pk) + " is " +
                                                  std::string(to_string(type_of(rec.values[i]))) + ", expected " +
                                                  std::string(to_string(schema.fields()[i].type)));
    }
  }
}

namespace {
constexpr std::size_t kHeader = 4 + 8 + 8 + 8 + 2;

std::size_t value_size(const Value& v) {
  switch (type_of(v)) {
    case ValueType::Bool: return 2;
    case ValueType::Int:
    case ValueType::Double: return 9;
    case ValueType::String: return 5 + std::get<std::string>(v).size();
    case ValueType::Point: return 17;
  }
  return 0;
}
}  // namespace

std::size_t serialized_size(const Record& rec) {
  std::size_t n = kHeader + 4 * rec.values.size();
  for (const auto& v : rec.values) n += value_size(v);
  return n;
}

void serialize_record(const Record& rec, std::uint64_t seq, Bytes& out) {
  auto start = out.size();
  if (auto need = start + serialized_size(rec); out.capacity() < need) out.reserve(std::max(need, 2 * out.capacity()));
  ByteWriter w(out);
  w.put<std::uint32_t>(0);
  w.put<std::uint64_t>(rec.pk);
  w.put<std::int64_t>(rec.arrivalTs);
  w.put<std::uint64_t>(seq);
  w.put<std::uint16_t>(static_cast<std::uint16_t>(rec.values.size()));
  auto offsets = out.size();
  w.put_zeros(4 * rec.values.size());
  for (std::size_t i = 0; i < rec.values.size(); ++i) {
    w.patch_u32(offsets + 4 * i, static_cast<std::uint32_t>(out.size() - start));
    w.put_value(rec.values[i]);
  }
  w.patch_u32(start, static_cast<std::uint32_t>(out.size() - start));
}

ValueRef RecordView::field(std::size_t i) const {
  auto off = load<std::uint32_t>(data_ + kHeader + 4 * i);
  ByteReader r(ByteSpan(data_ + off, size() - off));
  return r.get_value();
}

Record RecordView::materialize() const {
  Record r;
  r.pk = pk();
  r.arrivalTs = ts();
  for (std::size_t i = 0; i < field_count(); ++i) r.values.push_back(to_value(field(i)));
  return r;
}

}  // namespace bad
