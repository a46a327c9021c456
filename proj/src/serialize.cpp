#include "bad/serialize.hpp"

namespace bad {

void ByteWriter::put_value(const ValueRef& v) {
  put<std::uint8_t>(static_cast<std::uint8_t>(type_of(v)));
  switch (type_of(v)) {
    case ValueType::Bool: put<std::uint8_t>(std::get<bool>(v) ? 1 : 0); break;
    case ValueType::Int: put(std::get<std::int64_t>(v)); break;
    case ValueType::Double: put(std::get<double>(v)); break;
    case ValueType::String: put_string(std::get<std::string_view>(v)); break;
    case ValueType::Point: {
      const auto& p = std::get<Point>(v);
      put(p.x);
      put(p.y);
      break;
    }
  }
}

ValueRef ByteReader::get_value() {
  auto tag = static_cast<ValueType>(get<std::uint8_t>());
  switch (tag) {
    case ValueType::Bool: return get<std::uint8_t>() != 0;
    case ValueType::Int: return get<std::int64_t>();
    case ValueType::Double: return get<double>();
    case ValueType::String: return get_string();
    case ValueType::Point: {
      Point p;
      p.x = get<double>();
      p.y = get<double>();
      return p;
    }
  }
  return false;
}

std::string encode_key(std::span<const Value> values) {
  Bytes out;
  ByteWriter w(out);
  for (const auto& v : values) w.put_value(v);
  return std::string(out.begin(), out.end());
}

std::string encode_key(std::span<const ValueRef> values) {
  Bytes out;
  ByteWriter w(out);
  for (const auto& v : values) w.put_value(v);
  return std::string(out.begin(), out.end());
}

ParamTuple decode_key(std::string_view key) {
  ByteReader r(ByteSpan(reinterpret_cast<const std::uint8_t*>(key.data()), key.size()));
  ParamTuple out;
  while (r.position() < key.size()) out.push_back(to_value(r.get_value()));
  return out;
}

}  // namespace bad
