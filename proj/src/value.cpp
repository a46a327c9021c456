#include "bad/value.hpp"

#include <charconv>
#include <cmath>
#include <limits>

#include "bad/error.hpp"

namespace bad {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::SyntaxError: return "SyntaxError";
    case ErrorKind::UnsupportedFeature: return "UnsupportedFeature";
    case ErrorKind::UnclassifiablePredicate: return "UnclassifiablePredicate";
    case ErrorKind::InvalidChannel: return "InvalidChannel";
    case ErrorKind::InvalidPolicy: return "InvalidPolicy";
    case ErrorKind::DuplicateSubscription: return "DuplicateSubscription";
    case ErrorKind::UnknownBroker: return "UnknownBroker";
    case ErrorKind::ArityMismatch: return "ArityMismatch";
    case ErrorKind::UnknownSubscription: return "UnknownSubscription";
    case ErrorKind::UnknownChannel: return "UnknownChannel";
    case ErrorKind::UnknownDataset: return "UnknownDataset";
    case ErrorKind::ChannelAlreadyRegistered: return "ChannelAlreadyRegistered";
    case ErrorKind::InactiveDataset: return "InactiveDataset";
    case ErrorKind::DuplicatePrimaryKey: return "DuplicatePrimaryKey";
    case ErrorKind::SchemaViolation: return "SchemaViolation";
    case ErrorKind::ModeUnavailable: return "ModeUnavailable";
    case ErrorKind::InvalidParallelism: return "InvalidParallelism";
    case ErrorKind::DuplicateBroker: return "DuplicateBroker";
    case ErrorKind::BrokerUnreachable: return "BrokerUnreachable";
    case ErrorKind::SinkError: return "SinkError";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::ConfigError: return "ConfigError";
    case ErrorKind::IoError: return "IoError";
  }
  return "Error";
}

std::string_view to_string(ValueType type) {
  switch (type) {
    case ValueType::Bool: return "boolean";
    case ValueType::Int: return "int";
    case ValueType::Double: return "double";
    case ValueType::String: return "string";
    case ValueType::Point: return "point";
  }
  return "unknown";
}

std::string_view to_string(CompareOp op) {
  switch (op) {
    case CompareOp::Eq: return "=";
    case CompareOp::Lt: return "<";
    case CompareOp::Gt: return ">";
    case CompareOp::Le: return "<=";
    case CompareOp::Ge: return ">=";
  }
  return "?";
}

CompareOp mirror(CompareOp op) {
  switch (op) {
    case CompareOp::Lt: return CompareOp::Gt;
    case CompareOp::Gt: return CompareOp::Lt;
    case CompareOp::Le: return CompareOp::Ge;
    case CompareOp::Ge: return CompareOp::Le;
    case CompareOp::Eq: return CompareOp::Eq;
  }
  return op;
}

namespace {

template <class Variant>
ValueType type_index(const Variant& v) {
  return static_cast<ValueType>(v.index() + 1);
}

bool is_numeric(const ValueRef& v) {
  return std::holds_alternative<std::int64_t>(v) || std::holds_alternative<double>(v);
}

std::partial_ordering compare_numeric(const ValueRef& a, const ValueRef& b) {
  if (auto* ia = std::get_if<std::int64_t>(&a)) {
    if (auto* ib = std::get_if<std::int64_t>(&b)) return *ia <=> *ib;
    return static_cast<long double>(*ia) <=> static_cast<long double>(std::get<double>(b));
  }
  double da = std::get<double>(a);
  if (auto* ib = std::get_if<std::int64_t>(&b)) return static_cast<long double>(da) <=> static_cast<long double>(*ib);
  return da <=> std::get<double>(b);
}

}  // namespace

ValueType type_of(const Value& v) { return type_index(v); }
ValueType type_of(const ValueRef& v) { return type_index(v); }

ValueRef as_ref(const Value& v) {
  return std::visit(
      [](const auto& x) -> ValueRef {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, std::string>) {
          return std::string_view(x);
        } else {
          return x;
        }
      },
      v);
}

Value to_value(const ValueRef& v) {
  return std::visit(
      [](const auto& x) -> Value {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, std::string_view>) {
          return std::string(x);
        } else {
          return x;
        }
      },
      v);
}

std::partial_ordering compare(const ValueRef& a, const ValueRef& b) {
  if (is_numeric(a) && is_numeric(b)) return compare_numeric(a, b);
  if (a.index() != b.index()) return std::partial_ordering::unordered;
  switch (type_of(a)) {
    case ValueType::Bool: return std::get<bool>(a) <=> std::get<bool>(b);
    case ValueType::String: return std::get<std::string_view>(a) <=> std::get<std::string_view>(b);
    case ValueType::Point: {
      // Points only support equality.
      return std::get<Point>(a) == std::get<Point>(b) ? std::partial_ordering::equivalent
                                                      : std::partial_ordering::unordered;
    }
    default: break;
  }
  return std::partial_ordering::unordered;
}

bool evaluate(const ValueRef& lhs, CompareOp op, const ValueRef& rhs) {
  auto c = compare(lhs, rhs);
  switch (op) {
    case CompareOp::Eq: return c == 0;
    case CompareOp::Lt: return c < 0;
    case CompareOp::Gt: return c > 0;
    case CompareOp::Le: return c <= 0;
    case CompareOp::Ge: return c >= 0;
  }
  return false;
}

double spatial_distance(const Point& a, const Point& b) { return std::hypot(a.x - b.x, a.y - b.y); }

bool coerce(Value& v, ValueType target) {
  if (type_of(v) == target) return true;
  if (target == ValueType::Double && std::holds_alternative<std::int64_t>(v)) {
    v = static_cast<double>(std::get<std::int64_t>(v));
    return true;
  }
  if (target == ValueType::Int && std::holds_alternative<double>(v)) {
    double d = std::get<double>(v);
    if (std::trunc(d) == d && std::abs(d) < 9.0e15) {
      v = static_cast<std::int64_t>(d);
      return true;
    }
  }
  return false;
}

std::string to_literal(const Value& v) {
  switch (type_of(v)) {
    case ValueType::Bool: return std::get<bool>(v) ? "true" : "false";
    case ValueType::Int: return std::to_string(std::get<std::int64_t>(v));
    case ValueType::Double: {
      char buf[64];
      auto [end, ec] = std::to_chars(buf, buf + sizeof buf, std::get<double>(v));
      std::string s(buf, end);
      if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
      return s;
    }
    case ValueType::String: {
      std::string out = "\"";
      for (char c : std::get<std::string>(v)) {
        switch (c) {
          case '"': out += "\\\""; break;
          case '\\': out += "\\\\"; break;
          case '\n': out += "\\n"; break;
          case '\t': out += "\\t"; break;
          default: out += c;
        }
      }
      return out + "\"";
    }
    case ValueType::Point: {
      const auto& p = std::get<Point>(v);
      return "point(" + to_literal(Value{p.x}) + ", " + to_literal(Value{p.y}) + ")";
    }
  }
  return {};
}

bool ValueLess::operator()(const ValueRef& a, const ValueRef& b) const {
  if (is_numeric(a) && is_numeric(b)) return compare_numeric(a, b) < 0;
  if (a.index() != b.index()) return a.index() < b.index();
  if (auto* pa = std::get_if<Point>(&a)) {
    const auto& pb = std::get<Point>(b);
    return pa->x != pb.x ? pa->x < pb.x : pa->y < pb.y;
  }
  return compare(a, b) < 0;
}

}  // namespace bad
