#pragma once

// Seeded synthetic record generator with per-field target selectivities and ground truth.

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "bad/record.hpp"

namespace bad {

struct Categorical {
  std::vector<Value> values;
  std::vector<double> weights;  // empty means uniform
};
struct UniformInt {
  std::int64_t lo = 0;
  std::int64_t hi = 0;  // inclusive
};
struct UniformDouble {
  double lo = 0;
  double hi = 1;
};
struct Bernoulli {
  double p = 0.5;
};
struct UniformPoint {
  Point min;
  Point max;
};
struct Text {
  std::size_t length = 16;
};

using Distribution = std::variant<Categorical, UniformInt, UniformDouble, Bernoulli, UniformPoint, Text>;

ValueType value_type(const Distribution& d);

// `field <op> literal` should hold for a `selectivity` fraction of the records.
struct TargetPredicate {
  CompareOp op = CompareOp::Eq;
  Value literal;
  double selectivity = 0.5;
};

struct FieldGenerator {
  std::string name;
  Distribution dist;
  std::optional<TargetPredicate> target;
};

struct GeneratorSpec {
  std::vector<FieldGenerator> fields;
  std::uint64_t seed = 1;
  PrimaryKey firstPk = 1;
  // Gaussian-copula correlation between the truth bits of targeted fields; 0 is independent.
  double correlation = 0;
};

struct GeneratedRecord {
  Record record;
  std::vector<bool> truth;  // one bit per targeted field, in spec order
};

class RecordGenerator {
 public:
  explicit RecordGenerator(GeneratorSpec spec);

  const GeneratorSpec& spec() const { return spec_; }
  const Schema& schema() const { return schema_; }
  // Field positions that carry a target predicate, in spec order.
  const std::vector<std::size_t>& targets() const { return targets_; }

  // Record `index` depends only on (seed, index), so any partitioning of the index range
  // yields the same records.
  GeneratedRecord generate(std::size_t index) const;
  Record operator()(std::size_t index) const { return generate(index).record; }

 private:
  GeneratorSpec spec_;
  Schema schema_;
  std::vector<std::size_t> targets_;
};

// 2020 census resident population of the 50 states, by postal code.
const std::vector<std::pair<std::string, std::int64_t>>& us_state_populations();
Categorical census_state_distribution();

// Largest-remainder apportionment of `total` items by `weights`; the counts sum to `total`.
std::vector<std::size_t> apportion(std::size_t total, const std::vector<double>& weights);

}  // namespace bad
