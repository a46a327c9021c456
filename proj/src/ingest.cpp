#include "bad/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

#include "bad/error.hpp"

namespace bad {

namespace {

constexpr std::size_t kChunkBytes = 1 << 20;

// Append-only byte arena; record pointers stay valid for the arena's lifetime.
class Arena {
 public:
  std::uint8_t* allocate(std::size_t n) {
    if (chunks_.empty() || used_ + n > chunkSize_) {
      chunkSize_ = std::max(kChunkBytes, n);
      chunks_.push_back(std::make_unique<std::uint8_t[]>(chunkSize_));
      used_ = 0;
    }
    auto* p = chunks_.back().get() + used_;
    used_ += n;
    return p;
  }

 private:
  std::vector<std::unique_ptr<std::uint8_t[]>> chunks_;
  std::size_t chunkSize_ = 0;
  std::size_t used_ = 0;
};

std::uint64_t mix(std::uint64_t x) {
  x ^= x >> 30;
  x *= 0xbf58476d1ce4e5b9ULL;
  x ^= x >> 27;
  x *= 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

using ValueIndex = std::map<Value, std::vector<PrimaryKey>, ValueLess>;

}  // namespace

struct Dataset::Partition {
  mutable std::shared_mutex mu;
  Arena arena;
  std::vector<const std::uint8_t*> log;
  std::unordered_map<PrimaryKey, const std::uint8_t*> byPk;
  std::unordered_map<std::string, std::vector<IndexEntry>> badIndexes;
  std::unordered_map<std::size_t, ValueIndex> valueIndexes;
};

Dataset::Dataset(std::string name, Schema schema, std::size_t partitions)
    : name_(std::move(name)), schema_(std::move(schema)) {
  if (partitions == 0) throw Error(ErrorKind::InvalidArgument, "dataset needs at least one partition");
  for (std::size_t i = 0; i < partitions; ++i) parts_.push_back(std::make_unique<Partition>());
}

Dataset::~Dataset() = default;

std::size_t Dataset::partition_of(PrimaryKey pk) const { return mix(pk) % parts_.size(); }

std::size_t Dataset::size() const {
  std::size_t n = 0;
  for (const auto& p : parts_) {
    std::shared_lock lock(p->mu);
    n += p->log.size();
  }
  return n;
}

Timestamp Dataset::last_arrival() const {
  std::lock_guard lock(orderMu_);
  return lastTs_;
}

void Dataset::register_channel_conditions(const std::string& channel, std::vector<FieldPredicate> conditions) {
  std::unique_lock lock(conditionsMu_);
  if (!active_) throw Error(ErrorKind::InactiveDataset, name_);
  for (const auto& e : conditions_) {
    if (e.channel == channel) throw Error(ErrorKind::ChannelAlreadyRegistered, channel + " on " + name_);
  }
  for (const auto& c : conditions) {
    if (c.field >= schema_.size()) throw Error(ErrorKind::InvalidArgument, "condition on unknown field");
  }
  for (auto& p : parts_) {
    std::unique_lock pl(p->mu);
    p->badIndexes[channel];
  }
  conditions_.push_back({channel, std::move(conditions)});
}

void Dataset::drop_channel_conditions(const std::string& channel) {
  std::unique_lock lock(conditionsMu_);
  auto it = std::find_if(conditions_.begin(), conditions_.end(), [&](const auto& e) { return e.channel == channel; });
  if (it == conditions_.end()) throw Error(ErrorKind::UnknownChannel, channel + " has no conditions on " + name_);
  conditions_.erase(it);
  for (auto& p : parts_) {
    std::unique_lock pl(p->mu);
    p->badIndexes.erase(channel);
  }
}

std::vector<ConditionsEntry> Dataset::conditions_list() const {
  std::shared_lock lock(conditionsMu_);
  return conditions_;
}

bool Dataset::has_bad_index(std::string_view channel) const {
  std::shared_lock lock(conditionsMu_);
  return std::any_of(conditions_.begin(), conditions_.end(), [&](const auto& e) { return e.channel == channel; });
}

std::size_t Dataset::bad_index_size(std::string_view channel) const {
  if (!has_bad_index(channel)) throw Error(ErrorKind::UnknownChannel, std::string(channel));
  std::size_t n = 0;
  for (const auto& p : parts_) {
    std::shared_lock lock(p->mu);
    auto it = p->badIndexes.find(std::string(channel));
    if (it != p->badIndexes.end()) n += it->second.size();
  }
  return n;
}

std::vector<std::string> Dataset::insert_record(Record rec) {
  conform(rec, schema_);
  std::shared_lock condLock(conditionsMu_);
  auto& part = *parts_[partition_of(rec.pk)];
  std::unique_lock partLock(part.mu, std::defer_lock);
  std::uint64_t seq;
  {
    // Lock coupling: the partition lock is taken before the order lock is released, so within a
    // partition the log and every index stay in arrival order.
    std::lock_guard order(orderMu_);
    if (rec.arrivalTs < lastTs_) {
      throw Error(ErrorKind::InvalidArgument, "arrival timestamp " + std::to_string(rec.arrivalTs) +
                                                  " precedes " + std::to_string(lastTs_));
    }
    partLock.lock();
    if (part.byPk.count(rec.pk)) {
      throw Error(ErrorKind::DuplicatePrimaryKey, "pk " + std::to_string(rec.pk) + " in " + name_);
    }
    seq = nextSeq_++;
    lastTs_ = rec.arrivalTs;
  }

  thread_local Bytes scratch;
  scratch.clear();
  serialize_record(rec, seq, scratch);
  auto* dst = part.arena.allocate(scratch.size());
  std::memcpy(dst, scratch.data(), scratch.size());
  part.log.push_back(dst);
  part.byPk.emplace(rec.pk, dst);

  for (auto field : valueIndexFields_) part.valueIndexes[field][rec.values[field]].push_back(rec.pk);

  std::vector<std::string> affected;
  for (const auto& entry : conditions_) {
    if (check_conditions<Record>(entry.conditions, rec)) {
      part.badIndexes[entry.channel].push_back({rec.arrivalTs, seq, rec.pk});
      affected.push_back(entry.channel);
    }
  }
  return affected;
}

void Dataset::index_entries(std::string_view channel, std::size_t partition, Timestamp since, Timestamp until,
                            std::vector<IndexEntry>& out) const {
  const auto& part = *parts_.at(partition);
  std::shared_lock lock(part.mu);
  auto it = part.badIndexes.find(std::string(channel));
  if (it == part.badIndexes.end()) throw Error(ErrorKind::UnknownChannel, "no BAD index for " + std::string(channel));
  const auto& entries = it->second;
  auto byTs = [](Timestamp t, const IndexEntry& e) { return t < e.ts; };
  auto lo = std::upper_bound(entries.begin(), entries.end(), since, byTs);
  auto hi = std::upper_bound(lo, entries.end(), until, byTs);
  out.insert(out.end(), lo, hi);
}

std::vector<PrimaryKey> Dataset::index_scan(std::string_view channel, Timestamp since, Timestamp until) const {
  if (since > until) throw Error(ErrorKind::InvalidArgument, "window start after its end");
  std::vector<IndexEntry> entries;
  for (std::size_t p = 0; p < parts_.size(); ++p) index_entries(channel, p, since, until, entries);
  std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) { return a.seq < b.seq; });
  std::vector<PrimaryKey> pks;
  pks.reserve(entries.size());
  for (const auto& e : entries) pks.push_back(e.pk);
  return pks;
}

std::optional<RecordView> Dataset::find(PrimaryKey pk) const {
  const auto& part = *parts_[partition_of(pk)];
  std::shared_lock lock(part.mu);
  auto it = part.byPk.find(pk);
  if (it == part.byPk.end()) return std::nullopt;
  return RecordView(it->second);
}

void Dataset::scan_partition(std::size_t partition, const std::function<void(RecordView)>& fn) const {
  const auto& part = *parts_.at(partition);
  std::shared_lock lock(part.mu);
  for (const auto* r : part.log) fn(RecordView(r));
}

void Dataset::ensure_value_index(std::size_t field) {
  if (field >= schema_.size()) throw Error(ErrorKind::InvalidArgument, "value index on unknown field");
  std::unique_lock lock(conditionsMu_);
  if (std::find(valueIndexFields_.begin(), valueIndexFields_.end(), field) != valueIndexFields_.end()) return;
  for (auto& p : parts_) {
    std::unique_lock pl(p->mu);
    auto& idx = p->valueIndexes[field];
    for (const auto* r : p->log) {
      RecordView v(r);
      idx[to_value(v.field(field))].push_back(v.pk());
    }
  }
  valueIndexFields_.push_back(field);
}

bool Dataset::has_value_index(std::size_t field) const {
  std::shared_lock lock(conditionsMu_);
  return std::find(valueIndexFields_.begin(), valueIndexFields_.end(), field) != valueIndexFields_.end();
}

void Dataset::value_index_lookup(std::size_t field, std::size_t partition, CompareOp op, const Value& literal,
                                 std::vector<PrimaryKey>& out) const {
  const auto& part = *parts_.at(partition);
  std::shared_lock lock(part.mu);
  auto it = part.valueIndexes.find(field);
  if (it == part.valueIndexes.end()) throw Error(ErrorKind::ModeUnavailable, "no value index on field");
  const auto& idx = it->second;
  ValueIndex::const_iterator lo = idx.begin(), hi = idx.end();
  switch (op) {
    case CompareOp::Eq:
      std::tie(lo, hi) = idx.equal_range(literal);
      break;
    case CompareOp::Lt:
      hi = idx.lower_bound(literal);
      break;
    case CompareOp::Le:
      hi = idx.upper_bound(literal);
      break;
    case CompareOp::Gt:
      lo = idx.upper_bound(literal);
      break;
    case CompareOp::Ge:
      lo = idx.lower_bound(literal);
      break;
  }
  for (; lo != hi; ++lo) {
    // The map orders values of foreign types too; keep only comparable matches.
    if (!evaluate(as_ref(lo->first), op, as_ref(literal))) continue;
    out.insert(out.end(), lo->second.begin(), lo->second.end());
  }
}

std::size_t Dataset::count_matching(const FieldPredicate& pred) const {
  std::size_t n = 0;
  for (std::size_t p = 0; p < parts_.size(); ++p) {
    scan_partition(p, [&](RecordView r) { n += pred.evaluate(r); });
  }
  return n;
}

IngestReport feed(Dataset& ds, const std::function<Record(std::size_t)>& source, const FeedOptions& options) {
  if (options.ratePerSec <= 0 || options.durationSec < 0) {
    throw Error(ErrorKind::InvalidArgument, "feed rate must be positive and duration non-negative");
  }
  IngestReport report;
  auto total = static_cast<std::size_t>(std::llround(options.ratePerSec * options.durationSec));
  double interval = 1e6 / options.ratePerSec;
  Timestamp start = options.pacingClock ? options.pacingClock->now() : options.start;
  auto wallStart = std::chrono::steady_clock::now();
  for (std::size_t i = 0; i < total; ++i) {
    auto offset = static_cast<Timestamp>(std::llround(interval * static_cast<double>(i + 1)));
    Record rec;
    try {
      rec = source(i);
      if (options.pacingClock) {
        std::this_thread::sleep_until(wallStart + std::chrono::microseconds(offset));
        rec.arrivalTs = std::max(options.pacingClock->now(), start + offset);
      } else {
        rec.arrivalTs = start + offset;
      }
      auto ts = rec.arrivalTs;
      ds.insert_record(std::move(rec));
      if (report.count == 0) report.minTs = ts;
      report.maxTs = ts;
    } catch (const std::exception& e) {
      report.error = e.what();
      return report;
    }
    ++report.count;
  }
  return report;
}

}  // namespace bad
