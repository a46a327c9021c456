#include "bad/generator.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "bad/error.hpp"

namespace bad {

namespace {

std::uint64_t mix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

using Rng = std::mt19937_64;

double uniform01(Rng& rng) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); }

std::size_t pick(Rng& rng, const std::vector<double>& weights, const std::vector<std::size_t>& among) {
  double total = 0;
  for (auto i : among) total += weights.empty() ? 1.0 : weights[i];
  double u = uniform01(rng) * total;
  for (auto i : among) {
    u -= weights.empty() ? 1.0 : weights[i];
    if (u < 0) return i;
  }
  return among.back();
}

std::string random_text(Rng& rng, std::size_t n) {
  std::string s(n, ' ');
  std::size_t i = 0;
  while (i < n) {
    auto bits = rng();
    for (int k = 0; k < 8 && i < n; ++k, bits >>= 8) s[i++] = static_cast<char>('a' + (bits & 0xff) % 26);
  }
  return s;
}

Value sample(Rng& rng, const Distribution& d) {
  return std::visit(
      [&](const auto& x) -> Value {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, Categorical>) {
          std::vector<std::size_t> all(x.values.size());
          std::iota(all.begin(), all.end(), 0);
          return x.values[pick(rng, x.weights, all)];
        } else if constexpr (std::is_same_v<T, UniformInt>) {
          return std::uniform_int_distribution<std::int64_t>(x.lo, x.hi)(rng);
        } else if constexpr (std::is_same_v<T, UniformDouble>) {
          return std::uniform_real_distribution<double>(x.lo, x.hi)(rng);
        } else if constexpr (std::is_same_v<T, Bernoulli>) {
          return uniform01(rng) < x.p;
        } else if constexpr (std::is_same_v<T, UniformPoint>) {
          return Point{std::uniform_real_distribution<double>(x.min.x, x.max.x)(rng),
                       std::uniform_real_distribution<double>(x.min.y, x.max.y)(rng)};
        } else {
          return random_text(rng, x.length);
        }
      },
      d);
}

bool holds(const Value& v, const TargetPredicate& t) { return evaluate(as_ref(v), t.op, as_ref(t.literal)); }

// Samples a value whose predicate truth equals `want`, falling back to rejection sampling when the
// distribution has no closed form; returns whatever was drawn if the wanted side is empty.
Value sample_with(Rng& rng, const Distribution& d, const TargetPredicate& t, bool want) {
  if (auto* c = std::get_if<Categorical>(&d)) {
    std::vector<std::size_t> side;
    for (std::size_t i = 0; i < c->values.size(); ++i) {
      if (holds(c->values[i], t) == want && (c->weights.empty() || c->weights[i] > 0)) side.push_back(i);
    }
    if (!side.empty()) return c->values[pick(rng, c->weights, side)];
    return sample(rng, d);
  }
  if (auto* u = std::get_if<UniformInt>(&d); u && std::holds_alternative<std::int64_t>(t.literal)) {
    auto lit = std::get<std::int64_t>(t.literal);
    // Candidate intervals [a, b] clipped to [lo, hi].
    std::vector<std::pair<std::int64_t, std::int64_t>> parts;
    auto add = [&](std::int64_t a, std::int64_t b) {
      a = std::max(a, u->lo);
      b = std::min(b, u->hi);
      if (a <= b) parts.emplace_back(a, b);
    };
    constexpr auto lo = std::numeric_limits<std::int64_t>::min(), hi = std::numeric_limits<std::int64_t>::max();
    switch (t.op) {
      case CompareOp::Eq: want ? add(lit, lit) : (add(lo, lit - 1), add(lit + 1, hi)); break;
      case CompareOp::Lt: want ? add(lo, lit - 1) : add(lit, hi); break;
      case CompareOp::Le: want ? add(lo, lit) : add(lit + 1, hi); break;
      case CompareOp::Gt: want ? add(lit + 1, hi) : add(lo, lit); break;
      case CompareOp::Ge: want ? add(lit, hi) : add(lo, lit - 1); break;
    }
    if (parts.empty()) return sample(rng, d);
    std::vector<double> widths;
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < parts.size(); ++i) {
      widths.push_back(static_cast<double>(parts[i].second - parts[i].first) + 1);
      idx.push_back(i);
    }
    auto [a, b] = parts[pick(rng, widths, idx)];
    return std::uniform_int_distribution<std::int64_t>(a, b)(rng);
  }
  if (auto* b = std::get_if<Bernoulli>(&d)) {
    bool t1 = holds(Value(true), t), t0 = holds(Value(false), t);
    if (t1 == want && t0 == want) return uniform01(rng) < b->p;
    if (t1 == want) return true;
    if (t0 == want) return false;
    return uniform01(rng) < b->p;
  }
  Value v = sample(rng, d);
  for (int tries = 0; tries < 64 && holds(v, t) != want; ++tries) v = sample(rng, d);
  return v;
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

}  // namespace

ValueType value_type(const Distribution& d) {
  return std::visit(
      [](const auto& x) -> ValueType {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, Categorical>) {
          return x.values.empty() ? ValueType::String : type_of(x.values.front());
        } else if constexpr (std::is_same_v<T, UniformInt>) {
          return ValueType::Int;
        } else if constexpr (std::is_same_v<T, UniformDouble>) {
          return ValueType::Double;
        } else if constexpr (std::is_same_v<T, Bernoulli>) {
          return ValueType::Bool;
        } else if constexpr (std::is_same_v<T, UniformPoint>) {
          return ValueType::Point;
        } else {
          return ValueType::String;
        }
      },
      d);
}

RecordGenerator::RecordGenerator(GeneratorSpec spec) : spec_(std::move(spec)) {
  if (spec_.correlation < 0 || spec_.correlation > 1) {
    throw Error(ErrorKind::InvalidArgument, "correlation must lie in [0, 1]");
  }
  std::vector<FieldSpec> fields;
  for (std::size_t i = 0; i < spec_.fields.size(); ++i) {
    const auto& f = spec_.fields[i];
    if (auto* c = std::get_if<Categorical>(&f.dist)) {
      if (c->values.empty()) throw Error(ErrorKind::InvalidArgument, f.name + ": categorical without values");
      if (!c->weights.empty()) {
        if (c->weights.size() != c->values.size()) {
          throw Error(ErrorKind::InvalidArgument, f.name + ": weight count differs from value count");
        }
        double sum = std::accumulate(c->weights.begin(), c->weights.end(), 0.0);
        if (std::abs(sum - 1.0) > 1e-6) throw Error(ErrorKind::InvalidArgument, f.name + ": weights must sum to 1");
      }
    }
    if (auto* u = std::get_if<UniformInt>(&f.dist); u && u->lo > u->hi) {
      throw Error(ErrorKind::InvalidArgument, f.name + ": empty integer range");
    }
    if (f.target) {
      if (f.target->selectivity < 0 || f.target->selectivity > 1) {
        throw Error(ErrorKind::InvalidArgument, f.name + ": selectivity outside [0, 1]");
      }
      targets_.push_back(i);
    }
    fields.push_back({f.name, value_type(f.dist)});
  }
  schema_ = Schema(std::move(fields));
}

GeneratedRecord RecordGenerator::generate(std::size_t index) const {
  Rng rng(mix(spec_.seed ^ mix(index)));
  GeneratedRecord out;
  out.record.pk = spec_.firstPk + index;
  out.record.values.reserve(spec_.fields.size());
  std::normal_distribution<double> normal;
  double shared = spec_.correlation > 0 ? normal(rng) : 0.0;
  double a = std::sqrt(spec_.correlation), b = std::sqrt(1 - spec_.correlation);
  for (const auto& f : spec_.fields) {
    if (!f.target) {
      out.record.values.push_back(sample(rng, f.dist));
      continue;
    }
    bool want = normal_cdf(a * shared + b * normal(rng)) < f.target->selectivity;
    auto v = sample_with(rng, f.dist, *f.target, want);
    out.truth.push_back(holds(v, *f.target));
    out.record.values.push_back(std::move(v));
  }
  return out;
}

const std::vector<std::pair<std::string, std::int64_t>>& us_state_populations() {
  static const std::vector<std::pair<std::string, std::int64_t>> states = {
      {"CA", 39538223}, {"TX", 29145505}, {"FL", 21538187}, {"NY", 20201249}, {"PA", 13002700},
      {"IL", 12812508}, {"OH", 11799448}, {"GA", 10711908}, {"NC", 10439388}, {"MI", 10077331},
      {"NJ", 9288994},  {"VA", 8631393},  {"WA", 7705281},  {"AZ", 7151502},  {"MA", 7029917},
      {"TN", 6910840},  {"IN", 6785528},  {"MD", 6177224},  {"MO", 6154913},  {"WI", 5893718},
      {"CO", 5773714},  {"MN", 5706494},  {"SC", 5118425},  {"AL", 5024279},  {"LA", 4657757},
      {"KY", 4505836},  {"OR", 4237256},  {"OK", 3959353},  {"CT", 3605944},  {"UT", 3271616},
      {"IA", 3190369},  {"NV", 3104614},  {"AR", 3011524},  {"MS", 2961279},  {"KS", 2937880},
      {"NM", 2117522},  {"NE", 1961504},  {"ID", 1839106},  {"WV", 1793716},  {"HI", 1455271},
      {"NH", 1377529},  {"ME", 1362359},  {"RI", 1097379},  {"MT", 1084225},  {"DE", 989948},
      {"SD", 886667},   {"ND", 779094},   {"AK", 733391},   {"VT", 643077},   {"WY", 576851},
  };
  return states;
}

Categorical census_state_distribution() {
  Categorical c;
  double total = 0;
  for (const auto& [code, pop] : us_state_populations()) total += static_cast<double>(pop);
  for (const auto& [code, pop] : us_state_populations()) {
    c.values.emplace_back(code);
    c.weights.push_back(static_cast<double>(pop) / total);
  }
  return c;
}

std::vector<std::size_t> apportion(std::size_t total, const std::vector<double>& weights) {
  double sum = std::accumulate(weights.begin(), weights.end(), 0.0);
  if (weights.empty() || sum <= 0) throw Error(ErrorKind::InvalidArgument, "apportion needs positive weights");
  std::vector<std::size_t> counts(weights.size());
  std::vector<std::pair<double, std::size_t>> remainders;
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    double exact = static_cast<double>(total) * weights[i] / sum;
    counts[i] = static_cast<std::size_t>(std::floor(exact));
    assigned += counts[i];
    remainders.emplace_back(exact - std::floor(exact), i);
  }
  std::stable_sort(remainders.begin(), remainders.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t k = 0; assigned < total; ++k, ++assigned) ++counts[remainders[k % remainders.size()].second];
  return counts;
}

}  // namespace bad
