#include "bad/engine.hpp"

#include <algorithm>
#include <thread>
#include <unordered_map>

#include "bad/error.hpp"
#include "bad/kernels.hpp"
#include "bad/predicate.hpp"

namespace bad {

std::string_view to_string(PlanMode mode) {
  switch (mode) {
    case PlanMode::Original: return "Original";
    case PlanMode::AggregatedSubs: return "AggregatedSubs";
    case PlanMode::ParamJoin: return "ParamJoin";
    case PlanMode::BadIndexMode: return "BadIndexMode";
    case PlanMode::TraditionalIndex: return "TraditionalIndex";
    case PlanMode::FullyOptimized: return "FullyOptimized";
  }
  return "?";
}

const std::array<PlanMode, 6>& all_plan_modes() {
  static const std::array<PlanMode, 6> modes = {PlanMode::Original,     PlanMode::AggregatedSubs,
                                                 PlanMode::ParamJoin,    PlanMode::BadIndexMode,
                                                 PlanMode::TraditionalIndex, PlanMode::FullyOptimized};
  return modes;
}

PlanMode parse_plan_mode(std::string_view text) {
  for (auto m : all_plan_modes()) {
    auto name = to_string(m);
    if (name.size() == text.size() &&
        std::equal(name.begin(), name.end(), text.begin(), [](char a, char b) { return std::tolower(a) == std::tolower(b); })) {
      return m;
    }
  }
  throw Error(ErrorKind::ConfigError, "unknown plan mode '" + std::string(text) + "'");
}

PlanTraits traits(PlanMode mode) {
  using A = PlanTraits::Access;
  switch (mode) {
    case PlanMode::Original: return {A::Scan, false, false};
    case PlanMode::AggregatedSubs: return {A::Scan, true, false};
    case PlanMode::ParamJoin: return {A::Scan, false, true};
    case PlanMode::BadIndexMode: return {A::BadIndex, false, false};
    case PlanMode::TraditionalIndex: return {A::ValueIndex, false, false};
    case PlanMode::FullyOptimized: return {A::BadIndex, true, true};
  }
  return {};
}

nlohmann::json to_json(const ExecutionStats& s) {
  return {{"channel", s.channel},
          {"mode", std::string(to_string(s.mode))},
          {"parallelism", s.parallelism},
          {"windowStart", s.windowStart},
          {"windowEnd", s.windowEnd},
          {"wallTimeMs", s.wallTimeMs},
          {"recordsScanned", s.recordsScanned},
          {"candidateRows", s.candidateRows},
          {"framesProduced", s.framesProduced},
          {"joinRows", s.joinRows},
          {"resultsCount", s.resultsCount},
          {"groupsDelivered", s.groupsDelivered},
          {"deliveryMs", s.deliveryMs},
          {"bytesDelivered", s.bytesDelivered},
          {"subscribersNotified", s.subscribersNotified},
          {"overrun", s.overrun},
          {"warnings", s.warnings}};
}

namespace {

constexpr int kSideA = 0;
constexpr int kSideB = 1;

struct Side {
  std::string alias;
  Dataset* ds = nullptr;
  std::vector<FieldPredicate> fixed;
};

struct ParamBinding {
  std::size_t param = 0;
  int side = kSideA;
  std::size_t field = 0;
};

// Join condition oriented so that fieldA belongs to the windowed side.
struct JoinCond {
  bool spatial = false;
  std::size_t fieldA = 0;
  std::size_t fieldB = 0;
  CompareOp op = CompareOp::Eq;
  Value threshold;
  bool numericMix = false;  // int vs double equality: hash both sides as doubles

  bool holds(const RecordView& a, const RecordView& b) const {
    if (spatial) {
      double d = spatial_distance(std::get<Point>(a.field(fieldA)), std::get<Point>(b.field(fieldB)));
      return evaluate(ValueRef(d), op, as_ref(threshold));
    }
    return evaluate(a.field(fieldA), op, b.field(fieldB));
  }
};

struct ProjItem {
  int side = kSideA;
  std::size_t field = 0;
};

ValueRef join_key_value(ValueRef v, bool numericMix) {
  if (!numericMix) return v;
  if (auto* i = std::get_if<std::int64_t>(&v)) return static_cast<double>(*i);
  return v;
}

struct Collector : FrameConsumer {
  std::vector<Frame> frames;
  void push(const Frame& f) override { frames.push_back(f); }
};

// Candidate row: u32 size | u64 seq | u64 pk | u64 joinPk | u8 hasJoin | u32 keyLen | key | values.
struct CandidateView {
  std::uint64_t seq;
  PrimaryKey pk;
  PrimaryKey joinPk;
  bool hasJoin;
  std::string_view key;
  ByteSpan values;

  explicit CandidateView(ByteSpan t) {
    ByteReader r(t);
    r.skip(4);
    seq = r.get<std::uint64_t>();
    pk = r.get<std::uint64_t>();
    joinPk = r.get<std::uint64_t>();
    hasJoin = r.get<std::uint8_t>() != 0;
    key = r.get_string();
    values = r.rest();
  }
};

struct RowKey {
  std::uint64_t seq;
  PrimaryKey joinPk;
  friend bool operator==(const RowKey&, const RowKey&) = default;
  friend auto operator<=>(const RowKey&, const RowKey&) = default;
};

struct RowKeyHash {
  std::size_t operator()(const RowKey& k) const { return std::hash<std::uint64_t>{}(k.seq * 0x9e3779b97f4a7c15ULL ^ k.joinPk); }
};

struct LocalEntry {
  std::uint64_t target = 0;
  std::vector<RowKey> rows;
};

// Consumes join-row frames as they are pushed and folds them into per-target row lists; broker
// and subscriber ids are read from the snapshot once the entries are merged.
// Join row: u32 size | u32 targetLen | target record | candidate row.
class Assembler : public FrameConsumer {
 public:
  Assembler(bool grouped, std::size_t fieldCount) : grouped_(grouped), fieldCount_(fieldCount) {}

  void push(const Frame& frame) override {
    frame.for_each([&](ByteSpan t) { consume(t); });
  }

  std::vector<LocalEntry> entries;
  std::unordered_map<RowKey, ResultRow, RowKeyHash> rows;

 private:
  void consume(ByteSpan t) {
    auto targetLen = load<std::uint32_t>(t.data() + 4);
    ByteSpan target = t.subspan(8, targetLen);
    CandidateView cand(t.subspan(8 + targetLen));

    // Both target layouts start with u32 size | u64 id.
    std::uint64_t id = load<std::uint64_t>(target.data() + 4);
    std::size_t slot;
    if (id == lastId_ && !entries.empty()) {
      slot = lastSlot_;
    } else {
      auto [it, fresh] = index_.try_emplace(id, entries.size());
      if (fresh) entries.push_back({id, {}});
      slot = lastSlot_ = it->second;
      lastId_ = id;
    }
    RowKey key{cand.seq, cand.hasJoin ? cand.joinPk : 0};
    entries[slot].rows.push_back(key);
    if (!rows.count(key)) {
      ResultRow row;
      row.pk = cand.pk;
      if (cand.hasJoin) row.joinPk = cand.joinPk;
      row.seq = cand.seq;
      ByteReader r(cand.values);
      row.values.reserve(fieldCount_);
      for (std::size_t i = 0; i < fieldCount_; ++i) row.values.push_back(to_value(r.get_value()));
      rows.emplace(key, std::move(row));
    }
  }

  std::uint64_t lastId_ = 0;
  std::size_t lastSlot_ = 0;
  bool grouped_;
  std::size_t fieldCount_;
  std::unordered_map<std::uint64_t, std::size_t> index_;
};

}  // namespace

struct Engine::Channel {
  ChannelDefinition def;
  Side a;
  std::optional<Side> b;
  bool windowed = false;
  bool hasBadIndex = false;
  std::vector<ParamBinding> bindings;  // sorted by parameter; the first binding of each parameter supplies the key
  std::vector<ValueType> paramTypes;
  std::vector<JoinCond> joins;
  std::optional<std::size_t> hashJoin;  // first equality join, used to bucket the second dataset
  std::vector<ProjItem> projection;
  std::vector<std::string> fieldNames;
  PlanMode mode = PlanMode::FullyOptimized;
  Timestamp lastExecTs = 0;
  std::size_t parallelism = 1;
  std::chrono::microseconds period{0};
  std::unique_ptr<ChannelSubscriptions> subs;
  std::optional<std::size_t> pinnedIndex;
  std::optional<std::size_t> valueIndexPred;  // position in a.fixed
};

Engine::Engine(EngineConfig config, std::shared_ptr<Clock> clock)
    : config_(std::move(config)), clock_(clock ? std::move(clock) : std::make_shared<VirtualClock>()) {
  if (config_.parallelism == 0) throw Error(ErrorKind::InvalidParallelism, "parallelism must be at least 1");
  if (config_.frameSize == 0) throw Error(ErrorKind::ConfigError, "frame size must be positive");
}

Engine::~Engine() = default;

Dataset& Engine::create_dataset(const std::string& name, Schema schema) {
  auto [it, fresh] = datasets_.try_emplace(name);
  if (!fresh) throw Error(ErrorKind::InvalidArgument, "dataset " + name + " already exists");
  it->second = std::make_unique<Dataset>(name, std::move(schema), config_.storagePartitions);
  return *it->second;
}

Dataset& Engine::dataset(std::string_view name) {
  auto it = datasets_.find(name);
  if (it == datasets_.end()) throw Error(ErrorKind::UnknownDataset, std::string(name));
  return *it->second;
}

std::vector<std::string> Engine::ingest(std::string_view ds, Record rec) {
  rec.arrivalTs = clock_->now();
  return dataset(ds).insert_record(std::move(rec));
}

Engine::Channel& Engine::find_channel(std::string_view name) {
  auto it = channels_.find(name);
  if (it == channels_.end()) throw Error(ErrorKind::UnknownChannel, std::string(name));
  return *it->second;
}

const Engine::Channel& Engine::find_channel(std::string_view name) const {
  auto it = channels_.find(name);
  if (it == channels_.end()) throw Error(ErrorKind::UnknownChannel, std::string(name));
  return *it->second;
}

bool Engine::has_channel(std::string_view name) const { return channels_.find(name) != channels_.end(); }

std::vector<std::string> Engine::channel_names() const {
  std::vector<std::string> out;
  for (const auto& [name, ch] : channels_) out.push_back(name);
  return out;
}

void Engine::register_channel(const ChannelDefinition& def, const ChannelOptions& options) {
  if (has_channel(def.name)) throw Error(ErrorKind::ChannelAlreadyRegistered, def.name);
  auto ch = std::make_unique<Channel>();
  ch->def = def;
  auto classes = classify_predicates(def);

  std::optional<std::string> freshAlias;
  for (const auto& [alias, preds] : classes) {
    if (!preds.freshness) continue;
    if (freshAlias) {
      throw Error(ErrorKind::UnsupportedFeature, "is_new on more than one dataset (" + *freshAlias + ", " + alias + ")");
    }
    freshAlias = alias;
  }
  ch->windowed = freshAlias.has_value();
  std::string aAlias = freshAlias.value_or(def.datasets.front().alias);

  auto bind_side = [&](const std::string& alias) {
    Side s;
    s.alias = alias;
    s.ds = &dataset(def.binding(alias)->dataset);
    for (const auto& p : classes.at(alias).fixed) s.fixed.push_back(compile_fixed(p, s.ds->schema()));
    return s;
  };
  ch->a = bind_side(aAlias);
  for (const auto& d : def.datasets) {
    if (d.alias != aAlias) ch->b = bind_side(d.alias);
  }
  auto side_of = [&](const std::string& alias) { return alias == aAlias ? kSideA : kSideB; };
  auto schema_of = [&](int side) -> const Schema& { return side == kSideA ? ch->a.ds->schema() : ch->b->ds->schema(); };

  // Parameters.
  ch->paramTypes.assign(def.params.size(), ValueType::Bool);
  std::vector<bool> typed(def.params.size(), false);
  for (const auto& p : def.predicates) {
    if (p.cls != PredicateClass::Parameterized) continue;
    const auto& c = std::get<Comparison>(p.expr);
    if (c.op != CompareOp::Eq) {
      throw Error(ErrorKind::UnsupportedFeature, "parameterized predicates must be equalities: " + to_string(p));
    }
    const auto& f = std::get<FieldRef>(c.lhs);
    auto param = static_cast<std::size_t>(
        std::find(def.params.begin(), def.params.end(), std::get<ParamRef>(c.rhs).name) - def.params.begin());
    ParamBinding bnd{param, side_of(f.alias), 0};
    bnd.field = schema_of(bnd.side).require(f.path);
    auto type = schema_of(bnd.side).fields()[bnd.field].type;
    if (typed[param] && ch->paramTypes[param] != type) {
      throw Error(ErrorKind::InvalidChannel, "parameter " + def.params[param] + " compared with fields of different types");
    }
    typed[param] = true;
    ch->paramTypes[param] = type;
    ch->bindings.push_back(bnd);
  }
  std::stable_sort(ch->bindings.begin(), ch->bindings.end(), [](const auto& x, const auto& y) { return x.param < y.param; });

  // Joins.
  for (const auto& p : def.predicates) {
    if (p.cls != PredicateClass::Join) continue;
    JoinCond j;
    FieldRef lhs, rhs;
    if (auto* c = std::get_if<Comparison>(&p.expr)) {
      lhs = std::get<FieldRef>(c->lhs);
      rhs = std::get<FieldRef>(c->rhs);
      j.op = c->op;
    } else {
      const auto& sd = std::get<SpatialDistance>(p.expr);
      lhs = std::get<FieldRef>(sd.a);
      rhs = std::get<FieldRef>(sd.b);
      j.spatial = true;
      j.op = sd.op;
      j.threshold = sd.threshold;
    }
    if (side_of(lhs.alias) == kSideB) {
      std::swap(lhs, rhs);
      if (!j.spatial) j.op = mirror(j.op);
    }
    j.fieldA = ch->a.ds->schema().require(lhs.path);
    j.fieldB = ch->b->ds->schema().require(rhs.path);
    auto ta = ch->a.ds->schema().fields()[j.fieldA].type, tb = ch->b->ds->schema().fields()[j.fieldB].type;
    auto numeric = [](ValueType t) { return t == ValueType::Int || t == ValueType::Double; };
    if (j.spatial) {
      if (ta != ValueType::Point || tb != ValueType::Point) {
        throw Error(ErrorKind::InvalidChannel, "spatial_distance needs point fields: " + to_string(p));
      }
    } else if (ta != tb && !(numeric(ta) && numeric(tb))) {
      throw Error(ErrorKind::InvalidChannel, "join compares incomparable fields: " + to_string(p));
    } else if ((ta == ValueType::Point) && j.op != CompareOp::Eq) {
      throw Error(ErrorKind::InvalidChannel, "points only support '=': " + to_string(p));
    }
    j.numericMix = ta != tb;
    if (!j.spatial && j.op == CompareOp::Eq && !ch->hashJoin) ch->hashJoin = ch->joins.size();
    ch->joins.push_back(std::move(j));
  }

  // Projection.
  std::map<std::string, int> pathCount;
  for (const auto& f : def.projection) ++pathCount[f.path];
  for (const auto& f : def.projection) {
    ProjItem item{side_of(f.alias), 0};
    item.field = schema_of(item.side).require(f.path);
    ch->projection.push_back(item);
    ch->fieldNames.push_back(pathCount[f.path] > 1 ? f.alias + "." + f.path : f.path);
  }

  ch->period = config_.periodOverride.value_or(def.period);
  ch->parallelism = options.parallelism.value_or(config_.parallelism);
  if (ch->parallelism == 0) throw Error(ErrorKind::InvalidParallelism, "parallelism must be at least 1");
  ch->lastExecTs = options.startTs.value_or(clock_->now());

  SubscriptionConfig sc;
  sc.arity = def.params.size();
  sc.frameSize = config_.frameSize;
  sc.perEntryBytes = config_.perEntryBytes;
  sc.fixedGroupSize = options.fixedGroupSize;
  ch->subs = std::make_unique<ChannelSubscriptions>(sc, [this](std::string_view b) { return brokers_.contains(b); });

  ch->mode = options.mode.value_or(config_.defaultMode);
  if (ch->windowed && !ch->a.fixed.empty()) {
    ch->a.ds->register_channel_conditions(def.name, ch->a.fixed);
    ch->hasBadIndex = true;
  }
  auto* raw = ch.get();
  channels_.emplace(def.name, std::move(ch));
  try {
    if (!mode_available(def.name, raw->mode)) {
      if (options.mode) throw Error(ErrorKind::ModeUnavailable, std::string(to_string(raw->mode)) + " for " + def.name);
      raw->mode = raw->hasBadIndex ? PlanMode::FullyOptimized : PlanMode::ParamJoin;
      if (!mode_available(def.name, raw->mode)) raw->mode = PlanMode::AggregatedSubs;
    }
    if (traits(raw->mode).access == PlanTraits::Access::ValueIndex) ensure_value_index(*raw);
  } catch (...) {
    drop_channel(def.name);
    throw;
  }
}

void Engine::drop_channel(std::string_view name) {
  auto& ch = find_channel(name);
  if (ch.hasBadIndex) ch.a.ds->drop_channel_conditions(ch.def.name);
  channels_.erase(channels_.find(name));
}

ChannelInfo Engine::channel(std::string_view name) const {
  const auto& ch = find_channel(name);
  ChannelInfo info{ch.def, ch.mode, ch.lastExecTs, ch.parallelism, ch.period, ch.a.alias, ch.windowed, ch.hasBadIndex, {}};
  if (ch.valueIndexPred) info.valueIndexPredicate = ch.a.fixed[*ch.valueIndexPred].text;
  return info;
}

bool Engine::mode_available(std::string_view name, PlanMode mode) const {
  const auto& ch = find_channel(name);
  switch (traits(mode).access) {
    case PlanTraits::Access::Scan: return true;
    case PlanTraits::Access::BadIndex: return ch.windowed && ch.hasBadIndex;
    case PlanTraits::Access::ValueIndex: return !ch.a.fixed.empty();
  }
  return false;
}

void Engine::set_mode(std::string_view name, PlanMode mode) {
  auto& ch = find_channel(name);
  if (!mode_available(name, mode)) {
    throw Error(ErrorKind::ModeUnavailable, std::string(to_string(mode)) + " for channel " + ch.def.name);
  }
  if (traits(mode).access == PlanTraits::Access::ValueIndex) ensure_value_index(ch);
  ch.mode = mode;
}

void Engine::set_parallelism(std::string_view name, std::size_t parallelism) {
  if (parallelism == 0) throw Error(ErrorKind::InvalidParallelism, "parallelism must be at least 1");
  find_channel(name).parallelism = parallelism;
}

void Engine::pin_value_index(std::string_view name, std::size_t fixedPredicate) {
  auto& ch = find_channel(name);
  if (fixedPredicate >= ch.a.fixed.size()) {
    throw Error(ErrorKind::InvalidArgument, "channel " + ch.def.name + " has " + std::to_string(ch.a.fixed.size()) +
                                                " fixed predicates");
  }
  ch.pinnedIndex = fixedPredicate;
  ch.valueIndexPred.reset();
  ensure_value_index(ch);
}

void Engine::ensure_value_index(Channel& ch) {
  if (ch.a.fixed.empty()) throw Error(ErrorKind::ModeUnavailable, "TraditionalIndex needs a fixed predicate");
  if (!ch.valueIndexPred) {
    if (ch.pinnedIndex) {
      ch.valueIndexPred = ch.pinnedIndex;
    } else {
      std::size_t best = 0, bestCount = std::numeric_limits<std::size_t>::max();
      for (std::size_t i = 0; i < ch.a.fixed.size(); ++i) {
        auto n = ch.a.ds->count_matching(ch.a.fixed[i]);
        if (n < bestCount) best = i, bestCount = n;
      }
      ch.valueIndexPred = best;
    }
  }
  ch.a.ds->ensure_value_index(ch.a.fixed[*ch.valueIndexPred].field);
}

void Engine::set_group_size(std::string_view name, std::optional<std::size_t> fixedGroupSize) {
  auto& ch = find_channel(name);
  auto config = ch.subs->config();
  config.fixedGroupSize = fixedGroupSize;
  auto rebuilt = std::make_unique<ChannelSubscriptions>(config, [this](std::string_view b) { return brokers_.contains(b); });
  std::vector<Subscription> all;
  for (auto& g : ch.subs->groups()) {
    for (auto id : g.subIds) all.push_back({id, g.params, g.broker});
  }
  std::sort(all.begin(), all.end(), [](const auto& x, const auto& y) { return x.id < y.id; });
  for (const auto& s : all) rebuilt->add(s);
  ch.subs = std::move(rebuilt);
}

SubscriptionId Engine::subscribe(const SubscribeStatement& stmt) {
  return subscribe(stmt.channelName, stmt.argValues, stmt.brokerName);
}

SubscriptionId Engine::subscribe(std::string_view channel, ParamTuple params, const std::string& broker,
                                 std::optional<SubscriptionId> id) {
  auto& ch = find_channel(channel);
  if (params.size() != ch.def.params.size()) {
    throw Error(ErrorKind::ArityMismatch, ch.def.name + " takes " + std::to_string(ch.def.params.size()) +
                                              " parameters, got " + std::to_string(params.size()));
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (!coerce(params[i], ch.paramTypes[i])) {
      throw Error(ErrorKind::SchemaViolation, "parameter " + ch.def.params[i] + " expects " +
                                                  std::string(to_string(ch.paramTypes[i])) + ", got " +
                                                  to_literal(params[i]));
    }
  }
  SubscriptionId sid = id.value_or(nextSubscriptionId_);
  ch.subs->add({sid, std::move(params), broker});
  nextSubscriptionId_ = std::max(nextSubscriptionId_, sid + 1);
  return sid;
}

void Engine::unsubscribe(std::string_view channel, SubscriptionId id) { find_channel(channel).subs->remove(id); }

ChannelSubscriptions& Engine::subscriptions(std::string_view channel) { return *find_channel(channel).subs; }

std::vector<SubscriptionGroup> Engine::groups_for(std::string_view channel) { return subscriptions(channel).groups(); }

std::vector<UserParametersEntry> Engine::user_parameters(std::string_view channel) {
  return subscriptions(channel).user_parameters();
}

ExecutionResult Engine::evaluate(std::string_view name, Timestamp since, Timestamp until, std::optional<PlanMode> modeOverride) {
  auto& ch = find_channel(name);
  if (since > until) throw Error(ErrorKind::InvalidArgument, "window start after its end");
  PlanMode mode = modeOverride.value_or(ch.mode);
  if (!mode_available(name, mode)) {
    throw Error(ErrorKind::ModeUnavailable, std::string(to_string(mode)) + " for channel " + ch.def.name);
  }
  const auto tr = traits(mode);
  if (tr.access == PlanTraits::Access::ValueIndex) ensure_value_index(ch);
  auto snap = ch.subs->snapshot();

  const auto started = std::chrono::steady_clock::now();
  const std::size_t P = ch.parallelism;
  const std::size_t frameSize = config_.frameSize;
  const Timestamp lo = ch.windowed ? since : std::numeric_limits<Timestamp>::min();
  ExecutionResult result;
  auto& stats = result.stats;
  stats.channel = ch.def.name;
  stats.mode = mode;
  stats.parallelism = P;
  stats.windowStart = since;
  stats.windowEnd = until;

  // Second dataset: read in full (it carries no is_new), filtered by its fixed predicates.
  std::vector<RecordView> bRows;
  std::unordered_map<std::string, std::vector<std::uint32_t>> bByKey;
  if (ch.b) {
    std::vector<std::vector<RecordView>> perPart(ch.b->ds->partition_count());
    for_each_unit(P, perPart.size(), [&](std::size_t u) {
      ch.b->ds->scan_partition(u, [&](RecordView r) {
        if (r.ts() <= until && check_conditions<RecordView>(ch.b->fixed, r)) perPart[u].push_back(r);
      });
    });
    for (auto& part : perPart) bRows.insert(bRows.end(), part.begin(), part.end());
    // With every parameter bound on the second dataset, the UserParameters prune applies before the join.
    const bool allB = !ch.bindings.empty() &&
                      std::all_of(ch.bindings.begin(), ch.bindings.end(), [](const auto& b) { return b.side != kSideA; });
    if (tr.paramJoin && allB) {
      std::vector<ValueRef> kv(ch.def.params.size());
      std::erase_if(bRows, [&](const RecordView& rb) {
        for (std::size_t k = 0; k < ch.bindings.size(); ++k) {
          const auto& bnd = ch.bindings[k];
          ValueRef v = rb.field(bnd.field);
          if (k > 0 && ch.bindings[k - 1].param == bnd.param) {
            if (!bad::evaluate(kv[bnd.param], CompareOp::Eq, v)) return true;
          } else {
            kv[bnd.param] = v;
          }
        }
        return !snap->userParameters.count(encode_key(std::span<const ValueRef>(kv)));
      });
    }
    if (ch.hashJoin) {
      const auto& j = ch.joins[*ch.hashJoin];
      for (std::uint32_t i = 0; i < bRows.size(); ++i) {
        ValueRef v = join_key_value(bRows[i].field(j.fieldB), j.numericMix);
        bByKey[encode_key(std::span<const ValueRef>(&v, 1))].push_back(i);
      }
    }
  }

  // Phase A: data access, fixed predicates, second-dataset join and parameter keys.
  const std::size_t units = ch.a.ds->partition_count();
  std::vector<Collector> candidates(units);
  std::vector<std::size_t> scanned(units, 0), produced(units, 0), framesA(units, 0);
  std::vector<std::size_t> remaining;  // fixed predicates still applied on the value-index path
  if (tr.access == PlanTraits::Access::ValueIndex) {
    for (std::size_t i = 0; i < ch.a.fixed.size(); ++i) {
      if (i != *ch.valueIndexPred) remaining.push_back(i);
    }
  }

  for_each_unit(P, units, [&](std::size_t u) {
    FrameWriter writer(frameSize, candidates[u]);
    Bytes row;
    std::vector<ValueRef> keyVals(ch.def.params.size());

    auto emit_row = [&](const RecordView& ra, const RecordView* rb) {
      for (std::size_t k = 0; k < ch.bindings.size(); ++k) {
        const auto& bnd = ch.bindings[k];
        ValueRef v = bnd.side == kSideA ? ra.field(bnd.field) : rb->field(bnd.field);
        if (k > 0 && ch.bindings[k - 1].param == bnd.param) {
          if (!bad::evaluate(keyVals[bnd.param], CompareOp::Eq, v)) return;
        } else {
          keyVals[bnd.param] = v;
        }
      }
      auto key = encode_key(std::span<const ValueRef>(keyVals));
      if (tr.paramJoin && !snap->userParameters.count(key)) return;
      row.clear();
      ByteWriter w(row);
      w.put<std::uint32_t>(0);
      w.put<std::uint64_t>(ra.seq());
      w.put<std::uint64_t>(ra.pk());
      w.put<std::uint64_t>(rb ? rb->pk() : 0);
      w.put<std::uint8_t>(rb ? 1 : 0);
      w.put_string(key);
      for (const auto& item : ch.projection) w.put_value(item.side == kSideA ? ra.field(item.field) : rb->field(item.field));
      w.patch_u32(0, static_cast<std::uint32_t>(row.size()));
      writer.append({ByteSpan(row)});
      ++produced[u];
    };

    auto emit = [&](const RecordView& ra) {
      if (!ch.b) return emit_row(ra, nullptr);
      auto join_all = [&](const RecordView& rb) {
        for (const auto& j : ch.joins) {
          if (!j.holds(ra, rb)) return;
        }
        emit_row(ra, &rb);
      };
      if (ch.hashJoin) {
        const auto& j = ch.joins[*ch.hashJoin];
        ValueRef v = join_key_value(ra.field(j.fieldA), j.numericMix);
        auto it = bByKey.find(encode_key(std::span<const ValueRef>(&v, 1)));
        if (it == bByKey.end()) return;
        for (auto i : it->second) join_all(bRows[i]);
      } else {
        for (const auto& rb : bRows) join_all(rb);
      }
    };

    auto in_window = [&](const RecordView& r) { return r.ts() > lo && r.ts() <= until; };

    switch (tr.access) {
      case PlanTraits::Access::Scan:
        ch.a.ds->scan_partition(u, [&](RecordView r) {
          ++scanned[u];
          if (in_window(r) && check_conditions<RecordView>(ch.a.fixed, r)) emit(r);
        });
        break;
      case PlanTraits::Access::BadIndex: {
        std::vector<IndexEntry> entries;
        ch.a.ds->index_entries(ch.def.name, u, since, until, entries);
        for (const auto& e : entries) {
          auto r = ch.a.ds->find(e.pk);
          ++scanned[u];
          emit(*r);
        }
        break;
      }
      case PlanTraits::Access::ValueIndex: {
        const auto& ip = ch.a.fixed[*ch.valueIndexPred];
        std::vector<PrimaryKey> pks;
        ch.a.ds->value_index_lookup(ip.field, u, ip.op, ip.literal, pks);
        for (auto pk : pks) {
          auto r = ch.a.ds->find(pk);
          ++scanned[u];
          if (!in_window(*r)) continue;
          bool ok = true;
          for (auto i : remaining) {
            if (!ch.a.fixed[i].evaluate(*r)) {
              ok = false;
              break;
            }
          }
          if (ok) emit(*r);
        }
        break;
      }
    }
    writer.flush();
    framesA[u] = writer.frames_pushed();
  });

  std::vector<const Frame*> candFrames;
  for (std::size_t u = 0; u < units; ++u) {
    stats.recordsScanned += scanned[u];
    stats.candidateRows += produced[u];
    stats.framesProduced += framesA[u];
    for (const auto& f : candidates[u].frames) candFrames.push_back(&f);
  }

  // Phase B: subscription join. Join rows are pushed straight into per-unit assemblers.
  const bool grouped = tr.grouped;
  const auto fieldCount = ch.projection.size();
  std::vector<std::unique_ptr<Assembler>> assemblers;
  std::vector<std::size_t> joinRows, framesB;
  auto append_join_row = [](FrameWriter& w, ByteSpan target, ByteSpan cand) {
    std::uint32_t hdr[2] = {static_cast<std::uint32_t>(8 + target.size() + cand.size()),
                            static_cast<std::uint32_t>(target.size())};
    w.append({ByteSpan(reinterpret_cast<const std::uint8_t*>(hdr), sizeof hdr), target, cand});
  };

  if (tr.paramJoin) {
    // Index nested-loop join: candidates are exchanged by parameter key, then every distinct key
    // looks up its subscriptions (or groups). A key and its targets belong to exactly one unit.
    const auto& index = grouped ? snap->groupsByKey : snap->subscriptionsByKey;
    StringMap<std::vector<ByteSpan>> byKey;
    for (const auto* f : candFrames) f->for_each([&](ByteSpan cand) { byKey[std::string(CandidateView(cand).key)].push_back(cand); });
    std::vector<std::pair<const std::vector<ByteSpan>*, const std::vector<ByteSpan>*>> work;
    for (const auto& [key, cands] : byKey) {
      auto it = index.find(key);
      if (it != index.end()) work.emplace_back(&cands, &it->second);
    }
    const std::size_t n = std::min(work.size(), std::max<std::size_t>(1, candFrames.size()));
    for (std::size_t i = 0; i < n; ++i) assemblers.push_back(std::make_unique<Assembler>(grouped, fieldCount));
    joinRows.assign(n, 0);
    framesB.assign(n, 0);
    for_each_unit(P, n, [&](std::size_t u) {
      FrameWriter writer(frameSize, *assemblers[u]);
      for (std::size_t k = u; k < work.size(); k += n) {
        const auto& [cands, targets] = work[k];
        for (auto target : *targets) {
          for (auto cand : *cands) append_join_row(writer, target, cand);
          joinRows[u] += cands->size();
        }
      }
      writer.flush();
      framesB[u] = writer.frames_pushed();
    });
  } else {
    // Hash join: build on the candidates, probe with every subscription (or group) record.
    StringMap<std::vector<ByteSpan>> table;
    for (const auto* f : candFrames) f->for_each([&](ByteSpan cand) { table[std::string(CandidateView(cand).key)].push_back(cand); });
    const auto& frames = grouped ? snap->groupFrames : snap->subscriptionFrames;
    const std::size_t n = frames.size();
    for (std::size_t i = 0; i < n; ++i) assemblers.push_back(std::make_unique<Assembler>(grouped, fieldCount));
    joinRows.assign(n, 0);
    framesB.assign(n, 0);
    for_each_unit(P, n, [&](std::size_t u) {
      FrameWriter writer(frameSize, *assemblers[u]);
      frames[u].for_each([&](ByteSpan target) {
        auto key = grouped ? GroupView(target).key() : SubscriptionView(target).key();
        auto it = table.find(key);
        if (it == table.end()) return;
        for (auto cand : it->second) {
          append_join_row(writer, target, cand);
          ++joinRows[u];
        }
      });
      writer.flush();
      framesB[u] = writer.frames_pushed();
    });
  }
  for (std::size_t u = 0; u < assemblers.size(); ++u) {
    stats.joinRows += joinRows[u];
    stats.framesProduced += framesB[u];
  }

  // Phase C: merge the per-unit entries, attach broker metadata, canonical order.
  std::unordered_map<std::uint64_t, std::size_t> entryIndex;
  std::vector<LocalEntry> entries;
  std::map<RowKey, ResultRow> rowTable;
  for (auto& a : assemblers) {
    for (auto& e : a->entries) {
      auto [it, fresh] = entryIndex.try_emplace(e.target, entries.size());
      if (fresh) {
        entries.push_back(std::move(e));
      } else {
        auto& dst = entries[it->second].rows;
        dst.insert(dst.end(), e.rows.begin(), e.rows.end());
      }
    }
    for (auto& [key, row] : a->rows) rowTable.try_emplace(key, std::move(row));
  }
  std::unordered_map<RowKey, std::uint32_t, RowKeyHash> rowPos;
  auto& batch = result.batch;
  batch.channel = ch.def.name;
  batch.executionTs = until;
  batch.fields = ch.fieldNames;
  batch.rows.reserve(rowTable.size());
  for (auto& [key, row] : rowTable) {
    rowPos.emplace(key, static_cast<std::uint32_t>(batch.rows.size()));
    batch.rows.push_back(std::move(row));
  }
  std::sort(entries.begin(), entries.end(), [](const auto& x, const auto& y) { return x.target < y.target; });
  std::unordered_map<std::string, bool> brokerKnown;
  batch.perGroup.reserve(entries.size());
  for (auto& e : entries) {
    DeliveryGroup g;
    if (grouped) {
      GroupView v(snap->groupById.at(e.target));
      g.broker = std::string(v.broker());
      g.groupId = e.target;
      g.subscriptionIds.reserve(v.count());
      for (std::size_t i = 0; i < v.count(); ++i) g.subscriptionIds.push_back(v.id(i));
    } else {
      g.broker = std::string(SubscriptionView(snap->subscriptionById.at(e.target)).broker());
      g.subscriptionIds.push_back(e.target);
    }
    auto [bit, freshBroker] = brokerKnown.try_emplace(g.broker, false);
    if (freshBroker) bit->second = brokers_.contains(g.broker);
    if (!bit->second) {
      stats.warnings.push_back("UnknownBroker: " + g.broker + " dropped from results");
      continue;
    }
    g.deliveryTime = until;
    g.payload.reserve(e.rows.size());
    for (const auto& k : e.rows) g.payload.push_back(rowPos.at(k));
    std::sort(g.payload.begin(), g.payload.end());
    g.payload.erase(std::unique(g.payload.begin(), g.payload.end()), g.payload.end());
    stats.resultsCount += g.subscriptionIds.size() * g.payload.size();
    batch.perGroup.push_back(std::move(g));
  }
  stats.groupsDelivered = batch.perGroup.size();
  stats.wallTimeMs = elapsed_ms(started);
  return result;
}

ExecutionResult Engine::execute_channel(std::string_view name, Timestamp nowTs) {
  auto& ch = find_channel(name);
  if (nowTs < ch.lastExecTs) {
    throw Error(ErrorKind::InvalidArgument, "execution time " + std::to_string(nowTs) + " precedes the last execution");
  }
  auto result = evaluate(name, ch.lastExecTs, nowTs);
  ch.lastExecTs = nowTs;
  return result;
}

std::vector<ExecutionStats> Engine::run_periodic(std::string_view name, std::size_t executions,
                                                 const PeriodicOptions& options) {
  std::vector<ExecutionStats> out;
  auto* virtualClock = dynamic_cast<VirtualClock*>(clock_.get());
  for (std::size_t k = 0; k < executions; ++k) {
    auto& ch = find_channel(name);
    const Timestamp boundary = ch.lastExecTs + ch.period.count();
    if (virtualClock) {
      if (virtualClock->now() < boundary) virtualClock->set(boundary);
    } else {
      for (auto now = clock_->now(); now < boundary; now = clock_->now()) {
        std::this_thread::sleep_for(std::chrono::microseconds(boundary - now));
      }
    }
    auto started = std::chrono::steady_clock::now();
    auto result = execute_channel(name, boundary);
    auto& stats = result.stats;
    if (options.deliver && !result.batch.empty()) {
      auto t0 = std::chrono::steady_clock::now();
      for (auto& [broker, report] : brokers_.deliver(result.batch)) {
        stats.bytesDelivered += report.payloadBytes;
        stats.subscribersNotified += report.subscribersNotified;
        for (auto& e : report.errors) stats.warnings.push_back(std::move(e));
      }
      stats.deliveryMs = elapsed_ms(t0);
    }
    double total = elapsed_ms(started);
    double periodMs = std::chrono::duration<double, std::milli>(ch.period).count();
    if (total > periodMs) {
      stats.overrun = true;
      stats.warnings.push_back("OverrunWarning: execution and delivery took " + std::to_string(total) +
                               " ms, period is " + std::to_string(periodMs) + " ms");
    }
    if (options.onExecution) options.onExecution(result);
    out.push_back(std::move(stats));
  }
  return out;
}

}  // namespace bad
