#pragma once

// Randomized channel workloads and a brute-force evaluator that shares no code with the engine:
// predicates are evaluated here over the owning Record values with plain C++ comparisons.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <tuple>
#include <unordered_map>
#include <vector>

#include "bad/engine.hpp"

namespace oracle {

using bad::CompareOp;
using bad::PrimaryKey;
using bad::Record;
using bad::Timestamp;
using bad::Value;

enum Side { A = 0, B = 1 };

struct Fixed {
  Side side;
  std::size_t field;
  CompareOp op;
  Value literal;
};

struct Binding {
  Side side;
  std::size_t field;
  std::size_t param;
};

struct Join {
  std::size_t fieldA;
  std::size_t fieldB;
  bool spatial;  // spatial_distance(a, b) < threshold, else a = b
  double threshold;
};

struct Sub {
  bad::SubscriptionId id;
  bad::ParamTuple params;
  std::string broker;
};

using Pair = std::tuple<bad::SubscriptionId, PrimaryKey, PrimaryKey>;

struct Limits {
  std::size_t maxRecords = 10000;
  std::size_t maxSubs = 1000;
  std::size_t maxFixed = 5;
  std::size_t maxParams = 2;
  bool allowSecondDataset = true;
};

struct Workload {
  std::string name;
  std::string ddl;
  bad::Schema schemaA, schemaB;
  bool twoDatasets = false;
  std::vector<Record> history, window, late, users;
  std::vector<Fixed> fixed;
  std::vector<Binding> bindings;
  std::optional<Join> join;
  std::size_t paramCount = 0;
  std::vector<Sub> subs;
  std::vector<std::string> brokers;
  std::size_t frameSize = 32768;
  std::size_t partitions = 8;
  Timestamp since = 0, until = 0;
};

// ---- independent predicate semantics --------------------------------------------------------

inline std::optional<int> cmp3(const Value& x, const Value& y) {
  auto num = [](const Value& v) -> std::optional<double> {
    if (auto* i = std::get_if<std::int64_t>(&v)) return static_cast<double>(*i);
    if (auto* d = std::get_if<double>(&v)) return *d;
    return std::nullopt;
  };
  if (auto a = num(x), b = num(y); a && b) return *a < *b ? -1 : (*a > *b ? 1 : 0);
  if (x.index() != y.index()) return std::nullopt;
  if (auto* s = std::get_if<std::string>(&x)) {
    const auto& t = std::get<std::string>(y);
    return *s < t ? -1 : (*s > t ? 1 : 0);
  }
  if (auto* b = std::get_if<bool>(&x)) return static_cast<int>(*b) - static_cast<int>(std::get<bool>(y));
  const auto& p = std::get<bad::Point>(x);
  const auto& q = std::get<bad::Point>(y);
  return (p.x == q.x && p.y == q.y) ? std::optional<int>(0) : std::nullopt;
}

inline bool holds(const Value& x, CompareOp op, const Value& y) {
  auto c = cmp3(x, y);
  if (!c) return false;
  switch (op) {
    case CompareOp::Eq: return *c == 0;
    case CompareOp::Lt: return *c < 0;
    case CompareOp::Gt: return *c > 0;
    case CompareOp::Le: return *c <= 0;
    case CompareOp::Ge: return *c >= 0;
  }
  return false;
}

inline double euclid(const Value& a, const Value& b) {
  const auto& p = std::get<bad::Point>(a);
  const auto& q = std::get<bad::Point>(b);
  return std::hypot(p.x - q.x, p.y - q.y);
}

inline const char* op_text(CompareOp op) {
  switch (op) {
    case CompareOp::Eq: return "=";
    case CompareOp::Lt: return "<";
    case CompareOp::Gt: return ">";
    case CompareOp::Le: return "<=";
    case CompareOp::Ge: return ">=";
  }
  return "?";
}

inline CompareOp flipped(CompareOp op) {
  switch (op) {
    case CompareOp::Lt: return CompareOp::Gt;
    case CompareOp::Gt: return CompareOp::Lt;
    case CompareOp::Le: return CompareOp::Ge;
    case CompareOp::Ge: return CompareOp::Le;
    default: return op;
  }
}

inline std::string literal_text(const Value& v) {
  std::ostringstream os;
  if (auto* i = std::get_if<std::int64_t>(&v)) os << *i;
  else if (auto* d = std::get_if<double>(&v)) {
    os.setf(std::ios::fixed);
    os.precision(2);
    os << *d;
  } else if (auto* s = std::get_if<std::string>(&v)) os << '"' << *s << '"';
  else if (auto* b = std::get_if<bool>(&v)) os << (*b ? "true" : "false");
  return os.str();
}

// ---- generation -----------------------------------------------------------------------------

// Data side: i0..i2 ints in [0, 9], s0/s1 one of "a".."f", d0 a quarter step in [0, 5), b0, loc
// on a 20x20 grid, txt. Second dataset: uname, bi in [0, 9], bloc.
inline bad::Schema schema_a() {
  using bad::ValueType;
  return bad::Schema({{"i0", ValueType::Int}, {"i1", ValueType::Int}, {"i2", ValueType::Int},
                      {"s0", ValueType::String}, {"s1", ValueType::String}, {"d0", ValueType::Double},
                      {"b0", ValueType::Bool}, {"loc", ValueType::Point}, {"txt", ValueType::String}});
}
inline bad::Schema schema_b() {
  using bad::ValueType;
  return bad::Schema({{"uname", ValueType::String}, {"bi", ValueType::Int}, {"bloc", ValueType::Point}});
}

inline Value draw_value(std::mt19937_64& rng, bad::ValueType t, std::size_t field, Side side) {
  auto pick = [&](std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng); };
  switch (t) {
    case bad::ValueType::Int: return static_cast<std::int64_t>(pick(10));
    case bad::ValueType::Double: return static_cast<double>(pick(20)) * 0.25;
    case bad::ValueType::Bool: return pick(2) == 1;
    case bad::ValueType::Point: return bad::Point{static_cast<double>(pick(21)), static_cast<double>(pick(21))};
    case bad::ValueType::String:
      if (side == B) return "u" + std::to_string(pick(8));
      if (field == 8) return std::string(8 + pick(24), static_cast<char>('a' + pick(26)));
      return std::string(1, static_cast<char>('a' + pick(6)));
  }
  return {};
}

inline Record draw_record(std::mt19937_64& rng, const bad::Schema& s, Side side) {
  Record r;
  for (std::size_t f = 0; f < s.size(); ++f) r.values.push_back(draw_value(rng, s.fields()[f].type, f, side));
  return r;
}

inline std::size_t log_uniform(std::mt19937_64& rng, std::size_t lo, std::size_t hi) {
  double x = std::uniform_real_distribution<double>(std::log(double(lo)), std::log(double(hi) + 1))(rng);
  return std::clamp<std::size_t>(static_cast<std::size_t>(std::exp(x)), lo, hi);
}

inline Workload make_workload(std::uint64_t seed, const Limits& lim = {}) {
  std::mt19937_64 rng(seed * 0x2545f4914f6cdd1dULL + 17);
  auto pick = [&](std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng); };
  auto coin = [&](double p) { return std::bernoulli_distribution(p)(rng); };

  Workload w;
  w.name = "W" + std::to_string(seed);
  w.schemaA = schema_a();
  w.schemaB = schema_b();
  w.twoDatasets = lim.allowSecondDataset && coin(0.3);
  w.frameSize = std::array<std::size_t, 4>{512, 2048, 8192, 32768}[pick(4)];
  w.partitions = 1 + pick(8);

  // Parameters.
  w.paramCount = 1 + pick(lim.maxParams);
  const std::vector<std::size_t> intFields = {0, 1}, strFields = {3, 4};
  std::vector<bool> paramIsString(w.paramCount);
  for (std::size_t p = 0; p < w.paramCount; ++p) {
    if (w.twoDatasets && p == 0 && coin(0.6)) {
      w.bindings.push_back({B, 0, p});
      paramIsString[p] = true;
      continue;
    }
    paramIsString[p] = coin(0.5);
    const auto& pool = paramIsString[p] ? strFields : intFields;
    // Parameter p owns pool[p] so two parameters never bind the same field.
    std::size_t f = pool[p % 2];
    w.bindings.push_back({A, f, p});
    if (!w.twoDatasets && w.paramCount == 1 && coin(0.1)) w.bindings.push_back({A, pool[1], p});
  }

  // Fixed predicates.
  const std::size_t nFixed = 1 + pick(lim.maxFixed);
  std::vector<std::size_t> fixedPool = {0, 1, 2, 3, 4, 5, 6};
  std::shuffle(fixedPool.begin(), fixedPool.end(), rng);
  for (std::size_t k = 0; k < nFixed; ++k) {
    std::size_t f = fixedPool[k];
    auto t = w.schemaA.fields()[f].type;
    // Range comparisons keep conjunctions of several predicates from matching nothing.
    CompareOp op = t == bad::ValueType::Bool || coin(0.15) ? CompareOp::Eq : static_cast<CompareOp>(1 + pick(4));
    // For ranges keep the looser of two draws so each conjunct passes well over half the data.
    Value lit = draw_value(rng, t, f, A);
    if (op != CompareOp::Eq) {
      Value other = draw_value(rng, t, f, A);
      const bool upper = op == CompareOp::Lt || op == CompareOp::Le;
      if (*cmp3(other, lit) * (upper ? 1 : -1) > 0) lit = other;
    }
    w.fixed.push_back({A, f, op, lit});
  }
  if (w.twoDatasets && coin(0.5)) w.fixed.push_back({B, 1, static_cast<CompareOp>(pick(5)), draw_value(rng, bad::ValueType::Int, 1, B)});
  if (w.twoDatasets) w.join = coin(0.5) ? Join{2, 1, false, 0} : Join{7, 2, true, 2.0 + pick(6)};

  // DDL.
  std::ostringstream ddl;
  ddl << "CREATE CONTINUOUS PUSH CHANNEL " << w.name << "(";
  for (std::size_t p = 0; p < w.paramCount; ++p) ddl << (p ? ", " : "") << "p" << p;
  ddl << ") PERIOD duration (\"PT1S\") {\n SELECT t.txt, t.i0";
  if (w.twoDatasets) ddl << ", u.uname";
  ddl << "\n FROM D t" << (w.twoDatasets ? ", U u" : "") << "\n WHERE ";
  std::vector<std::string> atoms;
  auto ref = [&](Side s, std::size_t f) {
    return std::string(s == A ? "t." : "u.") + (s == A ? w.schemaA : w.schemaB).fields()[f].name;
  };
  for (const auto& b : w.bindings) {
    auto p = "p" + std::to_string(b.param);
    atoms.push_back(coin(0.2) ? p + "=" + ref(b.side, b.field) : ref(b.side, b.field) + "=" + p);
  }
  for (const auto& c : w.fixed) {
    atoms.push_back(coin(0.2) ? literal_text(c.literal) + op_text(flipped(c.op)) + ref(c.side, c.field)
                              : ref(c.side, c.field) + op_text(c.op) + literal_text(c.literal));
  }
  if (w.join) {
    atoms.push_back(w.join->spatial ? "spatial_distance(t.loc,u.bloc)<" + literal_text(w.join->threshold)
                                    : "t.i2=u.bi");
  }
  std::shuffle(atoms.begin(), atoms.end(), rng);
  atoms.push_back("is_new(t)");
  for (std::size_t i = 0; i < atoms.size(); ++i) ddl << (i ? "\n   AND " : "") << atoms[i];
  ddl << "};";
  w.ddl = ddl.str();

  // Records with unique shuffled primary keys and non-decreasing arrival timestamps.
  const std::size_t cap = w.twoDatasets ? std::min<std::size_t>(lim.maxRecords, 3000) : lim.maxRecords;
  const std::size_t n = coin(0.5) ? log_uniform(rng, 1, cap) : 1 + pick(cap);
  const std::size_t h = pick(n / 4 + 1);
  const std::size_t late = pick(20);
  std::vector<PrimaryKey> pks(h + n + late);
  std::iota(pks.begin(), pks.end(), PrimaryKey{1000});
  std::shuffle(pks.begin(), pks.end(), rng);
  Timestamp ts = 1;
  std::size_t next = 0;
  auto emit = [&](std::vector<Record>& out, std::size_t count, bool strictFirst) {
    for (std::size_t i = 0; i < count; ++i) {
      ts += (strictFirst && i == 0) ? 1 + pick(3) : (coin(0.2) ? 0 : 1 + pick(3));
      auto r = draw_record(rng, w.schemaA, A);
      r.pk = pks[next++];
      r.arrivalTs = ts;
      out.push_back(std::move(r));
    }
  };
  emit(w.history, h, false);
  w.since = ts;
  emit(w.window, n, true);
  w.until = ts;
  emit(w.late, late, true);

  if (w.twoDatasets) {
    const std::size_t nu = 1 + pick(30);
    for (std::size_t i = 0; i < nu; ++i) {
      auto r = draw_record(rng, w.schemaB, B);
      r.pk = 1 + i;
      r.arrivalTs = 1;
      w.users.push_back(std::move(r));
    }
  }

  const std::size_t nb = 1 + pick(3);
  for (std::size_t b = 0; b < nb; ++b) w.brokers.push_back("B" + std::to_string(b));
  const std::size_t ns = log_uniform(rng, 1, lim.maxSubs);
  for (std::size_t i = 0; i < ns; ++i) {
    Sub s;
    s.id = 1 + i;
    for (std::size_t p = 0; p < w.paramCount; ++p) {
      bool onB = false;
      for (const auto& b : w.bindings) onB |= (b.param == p && b.side == B);
      if (onB) s.params.push_back("u" + std::to_string(pick(9)));  // u8 never occurs
      else if (paramIsString[p]) s.params.push_back(std::string(1, static_cast<char>('a' + pick(7))));
      else s.params.push_back(static_cast<std::int64_t>(pick(11)));
    }
    s.broker = w.brokers[pick(nb)];
    w.subs.push_back(std::move(s));
  }
  return w;
}

// ---- evaluation -----------------------------------------------------------------------------

inline bool fixed_ok(const Workload& w, Side side, const Record& r) {
  for (const auto& c : w.fixed) {
    if (c.side == side && !holds(r.values[c.field], c.op, c.literal)) return false;
  }
  return true;
}

// All (subscription, pk, joinPk) pairs over records `rows` (joinPk 0 without a second dataset).
inline std::set<Pair> brute_force(const Workload& w, const std::vector<const Record*>& rows,
                                  const std::vector<Sub>* subsOverride = nullptr) {
  const auto& subs = subsOverride ? *subsOverride : w.subs;
  std::set<Pair> out;
  std::vector<const Record*> users;
  if (w.twoDatasets) {
    for (const auto& u : w.users) {
      if (fixed_ok(w, B, u)) users.push_back(&u);
    }
  } else {
    users.push_back(nullptr);
  }
  for (const auto* a : rows) {
    if (!fixed_ok(w, A, *a)) continue;
    for (const auto* b : users) {
      if (w.join) {
        const auto& va = a->values[w.join->fieldA];
        const auto& vb = b->values[w.join->fieldB];
        if (w.join->spatial ? !(euclid(va, vb) < w.join->threshold) : !holds(va, CompareOp::Eq, vb)) continue;
      }
      for (const auto& s : subs) {
        bool ok = true;
        for (const auto& bnd : w.bindings) {
          const Record& r = bnd.side == A ? *a : *b;
          if (!holds(r.values[bnd.field], CompareOp::Eq, s.params[bnd.param])) {
            ok = false;
            break;
          }
        }
        if (ok) out.insert({s.id, a->pk, b ? b->pk : 0});
      }
    }
  }
  return out;
}

inline std::set<Pair> expected_pairs(const Workload& w) {
  std::vector<const Record*> rows;
  for (const auto& r : w.window) rows.push_back(&r);
  return brute_force(w, rows);
}

inline std::set<Pair> to_set(const std::vector<bad::DeliveryPair>& v) {
  std::set<Pair> s;
  for (const auto& p : v) s.insert({p.sub, p.pk, p.joinPk});
  return s;
}

// ---- engine setup ---------------------------------------------------------------------------

struct Bed {
  std::shared_ptr<bad::VirtualClock> clock = std::make_shared<bad::VirtualClock>();
  std::unique_ptr<bad::Engine> engine;
  std::map<std::string, std::shared_ptr<bad::CountingSink>> sinks;
};

// Loads history, registers the channel at `since`, subscribes, then loads window and late records.
inline Bed build(const Workload& w, std::size_t parallelism = 1, bool keepIds = false) {
  Bed bed;
  bad::EngineConfig ec;
  ec.frameSize = w.frameSize;
  ec.storagePartitions = w.partitions;
  ec.parallelism = parallelism;
  bed.engine = std::make_unique<bad::Engine>(ec, bed.clock);
  auto& eng = *bed.engine;
  for (const auto& b : w.brokers) {
    auto sink = std::make_shared<bad::CountingSink>(keepIds);
    bed.sinks[b] = sink;
    eng.brokers().register_broker(b, bad::BrokerEndpoint::in_process(sink));
  }
  auto& da = eng.create_dataset("D", w.schemaA);
  if (w.twoDatasets) {
    auto& db = eng.create_dataset("U", w.schemaB);
    for (auto r : w.users) db.insert_record(std::move(r));
  }
  for (auto r : w.history) da.insert_record(std::move(r));
  auto def = bad::parse_channel_ddl(w.ddl);
  eng.register_channel(def, {.mode = bad::PlanMode::Original, .startTs = w.since, .parallelism = parallelism});
  for (const auto& s : w.subs) eng.subscribe(def.name, s.params, s.broker, s.id);
  for (auto r : w.window) da.insert_record(std::move(r));
  for (auto r : w.late) da.insert_record(std::move(r));
  return bed;
}

}  // namespace oracle
