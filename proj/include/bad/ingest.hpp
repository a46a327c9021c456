#pragma once

#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "bad/clock.hpp"
#include "bad/predicate.hpp"
#include "bad/record.hpp"

namespace bad {

struct IndexEntry {
  Timestamp ts = 0;
  std::uint64_t seq = 0;  // dataset-wide arrival order, breaks timestamp ties
  PrimaryKey pk = 0;
};

struct ConditionsEntry {
  std::string channel;
  std::vector<FieldPredicate> conditions;
};

// An active dataset: hash-partitioned record storage plus the ingestion-time machinery, i.e. the
// conditionsList and one BAD index per registered channel. Optional value indexes serve the
// traditional-index plan.
class Dataset {
 public:
  Dataset(std::string name, Schema schema, std::size_t partitions = 8);
  ~Dataset();

  const std::string& name() const { return name_; }
  const Schema& schema() const { return schema_; }
  bool active() const { return active_; }
  void set_active(bool active) { active_ = active; }
  std::size_t partition_count() const { return parts_.size(); }
  std::size_t partition_of(PrimaryKey pk) const;
  std::size_t size() const;
  Timestamp last_arrival() const;

  // Appends the channel's fixed conditions to the conditionsList and creates its empty BAD
  // index. Records already stored are not back-filled.
  void register_channel_conditions(const std::string& channel, std::vector<FieldPredicate> conditions);
  void drop_channel_conditions(const std::string& channel);
  std::vector<ConditionsEntry> conditions_list() const;
  bool has_bad_index(std::string_view channel) const;
  std::size_t bad_index_size(std::string_view channel) const;

  // Stores the record and appends (arrivalTs, pk) to the BAD index of every channel whose
  // condition group it satisfies. Returns those channels in conditionsList order. The arrival
  // timestamp must not precede the previous insert.
  std::vector<std::string> insert_record(Record rec);

  // Primary keys with since < arrivalTs <= until, in arrival order.
  std::vector<PrimaryKey> index_scan(std::string_view channel, Timestamp since, Timestamp until) const;
  void index_entries(std::string_view channel, std::size_t partition, Timestamp since, Timestamp until,
                     std::vector<IndexEntry>& out) const;

  std::optional<RecordView> find(PrimaryKey pk) const;
  // Calls fn(RecordView) for every record of one partition in arrival order.
  void scan_partition(std::size_t partition, const std::function<void(RecordView)>& fn) const;

  // Ordered value index over one field, built over existing records and maintained on insert.
  void ensure_value_index(std::size_t field);
  bool has_value_index(std::size_t field) const;
  // Primary keys whose field value satisfies `op literal`, in value order.
  void value_index_lookup(std::size_t field, std::size_t partition, CompareOp op, const Value& literal,
                          std::vector<PrimaryKey>& out) const;
  std::size_t count_matching(const FieldPredicate& pred) const;

 private:
  struct Partition;

  std::string name_;
  Schema schema_;
  bool active_ = true;
  std::vector<std::unique_ptr<Partition>> parts_;

  mutable std::shared_mutex conditionsMu_;  // conditionsList and the value-index field set
  std::vector<ConditionsEntry> conditions_;
  std::vector<std::size_t> valueIndexFields_;

  mutable std::mutex orderMu_;  // arrival order: seq assignment and timestamp monotonicity
  std::uint64_t nextSeq_ = 1;
  Timestamp lastTs_ = std::numeric_limits<Timestamp>::min();
};

struct FeedOptions {
  double ratePerSec = 1000;
  double durationSec = 1;
  Timestamp start = 0;  // first arrival is at start + interval
  // When set, the feed sleeps until each scheduled arrival and stamps records with this clock.
  const Clock* pacingClock = nullptr;
};

struct IngestReport {
  std::size_t count = 0;
  Timestamp minTs = 0;
  Timestamp maxTs = 0;
  std::optional<std::string> error;
};

// Inserts round(rate * duration) records from `source` (called with the record index) at evenly
// spaced arrival timestamps. An insert error stops the feed and is reported with the partial count.
IngestReport feed(Dataset& ds, const std::function<Record(std::size_t)>& source, const FeedOptions& options);

}  // namespace bad
