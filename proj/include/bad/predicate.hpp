#pragma once

#include <span>
#include <string>

#include "bad/dsl.hpp"
#include "bad/record.hpp"

namespace bad {

// A FIXED predicate bound to a schema position: `field <op> literal`.
struct FieldPredicate {
  std::size_t field = 0;
  CompareOp op = CompareOp::Eq;
  Value literal;
  std::string text;  // source form, for diagnostics

  bool evaluate(const RecordView& rec) const { return bad::evaluate(rec.field(field), op, as_ref(literal)); }
  bool evaluate(const Record& rec) const { return bad::evaluate(as_ref(rec.values[field]), op, as_ref(literal)); }
};

// Binds a FIXED atom to `schema`. The literal is coerced to the field type when lossless.
FieldPredicate compile_fixed(const PredicateAtom& atom, const Schema& schema);

// Conjunction in list order, stopping at the first failing conjunct.
template <class Rec>
bool check_conditions(std::span<const FieldPredicate> conditions, const Rec& rec) {
  for (const auto& c : conditions) {
    if (!c.evaluate(rec)) return false;
  }
  return true;
}

}  // namespace bad
