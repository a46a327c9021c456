#pragma once

// Channel-definition language: the CREATE CONTINUOUS PUSH CHANNEL and SUBSCRIBE TO statements.
// The grammar is in docs/grammar.ebnf.

#include <chrono>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "bad/value.hpp"

namespace bad {

struct FieldRef {
  std::string alias;
  std::string path;  // dotted path below the alias, e.g. "location" or "user.name"
  friend bool operator==(const FieldRef&, const FieldRef&) = default;
};

struct ParamRef {
  std::string name;
  friend bool operator==(const ParamRef&, const ParamRef&) = default;
};

using Operand = std::variant<FieldRef, ParamRef, Value>;

struct Comparison {
  Operand lhs;
  CompareOp op = CompareOp::Eq;
  Operand rhs;
  friend bool operator==(const Comparison&, const Comparison&) = default;
};

// spatial_distance(a, b) <op> threshold
struct SpatialDistance {
  Operand a;
  Operand b;
  CompareOp op = CompareOp::Lt;
  Value threshold;
  friend bool operator==(const SpatialDistance&, const SpatialDistance&) = default;
};

struct IsNew {
  std::string alias;
  friend bool operator==(const IsNew&, const IsNew&) = default;
};

enum class PredicateClass { Fixed, Parameterized, Join, Freshness };
std::string_view to_string(PredicateClass c);

// One conjunct of the WHERE clause. Fixed and parameterized comparisons are normalized so the
// field is on the left-hand side.
struct PredicateAtom {
  std::variant<Comparison, SpatialDistance, IsNew> expr;
  PredicateClass cls = PredicateClass::Fixed;
  friend bool operator==(const PredicateAtom&, const PredicateAtom&) = default;

  // Alias the predicate constrains (the field side for fixed/parameterized, the argument of
  // is_new). Join predicates return the left alias.
  const std::string& alias() const;
};

struct DatasetBinding {
  std::string dataset;
  std::string alias;
  friend bool operator==(const DatasetBinding&, const DatasetBinding&) = default;
};

enum class Delivery { Push };

struct ChannelDefinition {
  std::string name;
  std::vector<std::string> params;
  std::chrono::microseconds period{0};
  std::vector<FieldRef> projection;
  std::vector<DatasetBinding> datasets;
  std::vector<PredicateAtom> predicates;
  Delivery delivery = Delivery::Push;
  friend bool operator==(const ChannelDefinition&, const ChannelDefinition&) = default;

  double period_seconds() const { return std::chrono::duration<double>(period).count(); }
  const DatasetBinding* binding(std::string_view alias) const;
};

struct SubscribeStatement {
  std::string channelName;
  std::vector<Value> argValues;
  std::string brokerName;
  friend bool operator==(const SubscribeStatement&, const SubscribeStatement&) = default;
};

struct AliasPredicates {
  std::vector<PredicateAtom> fixed;
  std::vector<PredicateAtom> parameterized;
  std::vector<PredicateAtom> join;
  bool freshness = false;
};

ChannelDefinition parse_channel_ddl(std::string_view text);
SubscribeStatement parse_subscribe(std::string_view text);

// Groups the classified predicates by alias. Join predicates are listed under both aliases they
// touch, so only `fixed`, `parameterized` and `freshness` partition the predicate list.
std::map<std::string, AliasPredicates> classify_predicates(const ChannelDefinition& def);

// ISO-8601 duration ("PT10M", "P1DT0.5S") to microseconds.
std::chrono::microseconds parse_iso_duration(std::string_view text);
std::string format_iso_duration(std::chrono::microseconds d);

// Canonical DDL text; parse_channel_ddl(to_ddl(d)) == d.
std::string to_ddl(const ChannelDefinition& def);
std::string to_ddl(const SubscribeStatement& stmt);

std::string to_string(const Operand& op);
std::string to_string(const PredicateAtom& atom);

// Reads a file of statements separated by ';' (comments and blank statements skipped).
std::vector<std::string> split_statements(std::string_view text);

}  // namespace bad
