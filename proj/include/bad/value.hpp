#pragma once

#include <compare>
#include <cstdint>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace bad {

struct Point {
  double x = 0;
  double y = 0;
  friend bool operator==(const Point&, const Point&) = default;
};

enum class ValueType : std::uint8_t { Bool = 1, Int = 2, Double = 3, String = 4, Point = 5 };

std::string_view to_string(ValueType type);

// Owning literal. Records, channel constants and subscription parameters all use it.
using Value = std::variant<bool, std::int64_t, double, std::string, Point>;

// Non-owning view of a value, used when evaluating predicates directly over serialized records.
using ValueRef = std::variant<bool, std::int64_t, double, std::string_view, Point>;

using ParamTuple = std::vector<Value>;

ValueType type_of(const Value& v);
ValueType type_of(const ValueRef& v);
ValueRef as_ref(const Value& v);
Value to_value(const ValueRef& v);

enum class CompareOp : std::uint8_t { Eq, Lt, Gt, Le, Ge };

std::string_view to_string(CompareOp op);
// Operator with its operands swapped: `c < x` becomes `x > c`.
CompareOp mirror(CompareOp op);

// Ints and doubles compare numerically; any other type mix is unordered.
std::partial_ordering compare(const ValueRef& a, const ValueRef& b);
bool evaluate(const ValueRef& lhs, CompareOp op, const ValueRef& rhs);

double spatial_distance(const Point& a, const Point& b);

// Converts `v` to `target` when the conversion is lossless (int -> double, or a double holding an
// integral value -> int). Returns false and leaves `v` untouched otherwise.
bool coerce(Value& v, ValueType target);

// DDL literal syntax: strings double-quoted with backslash escapes, doubles in shortest
// round-trip form.
std::string to_literal(const Value& v);

// Strict weak order over values for ordered indexes. Numbers of either type interleave; other
// types order by type tag first.
struct ValueLess {
  using is_transparent = void;
  bool operator()(const ValueRef& a, const ValueRef& b) const;
  bool operator()(const Value& a, const Value& b) const { return (*this)(as_ref(a), as_ref(b)); }
  bool operator()(const Value& a, const ValueRef& b) const { return (*this)(as_ref(a), b); }
  bool operator()(const ValueRef& a, const Value& b) const { return (*this)(a, as_ref(b)); }
};

}  // namespace bad
