#include "bad/predicate.hpp"

#include "bad/error.hpp"

namespace bad {

namespace {
bool comparable(ValueType field, ValueType literal) {
  auto numeric = [](ValueType t) { return t == ValueType::Int || t == ValueType::Double; };
  return field == literal || (numeric(field) && numeric(literal));
}
}  // namespace

FieldPredicate compile_fixed(const PredicateAtom& atom, const Schema& schema) {
  if (atom.cls != PredicateClass::Fixed) throw Error(ErrorKind::InvalidArgument, "not a fixed predicate: " + to_string(atom));
  const auto& c = std::get<Comparison>(atom.expr);
  const auto& f = std::get<FieldRef>(c.lhs);
  FieldPredicate p;
  p.field = schema.require(f.path);
  p.op = c.op;
  p.literal = std::get<Value>(c.rhs);
  p.text = to_string(atom);
  auto ftype = schema.fields()[p.field].type;
  if (!comparable(ftype, type_of(p.literal))) {
    throw Error(ErrorKind::InvalidChannel, "predicate " + p.text + " compares " + std::string(to_string(ftype)) +
                                               " field with " + std::string(to_string(type_of(p.literal))));
  }
  if (ftype == ValueType::Point && p.op != CompareOp::Eq) {
    throw Error(ErrorKind::InvalidChannel, "points only support '=': " + p.text);
  }
  coerce(p.literal, ftype);
  return p;
}

}  // namespace bad
