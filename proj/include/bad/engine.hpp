#pragma once

#include <array>
#include <chrono>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "bad/batch.hpp"
#include "bad/broker.hpp"
#include "bad/clock.hpp"
#include "bad/dsl.hpp"
#include "bad/ingest.hpp"
#include "bad/subscriptions.hpp"

namespace bad {

enum class PlanMode { Original, AggregatedSubs, ParamJoin, BadIndexMode, TraditionalIndex, FullyOptimized };

std::string_view to_string(PlanMode mode);
PlanMode parse_plan_mode(std::string_view text);
const std::array<PlanMode, 6>& all_plan_modes();

// What a mode changes relative to Original. Each single mode switches on exactly one of the
// three optimizations (TraditionalIndex swaps the scan for a value index); FullyOptimized
// switches on all three.
struct PlanTraits {
  enum class Access { Scan, BadIndex, ValueIndex } access = Access::Scan;
  bool grouped = false;    // subscription side read as subscription groups
  bool paramJoin = false;  // UserParameters pruning, then index nested-loop join into subscriptions
};
PlanTraits traits(PlanMode mode);

struct EngineConfig {
  std::size_t frameSize = 32 * 1024;
  std::size_t storagePartitions = 8;
  std::size_t parallelism = 1;
  PlanMode defaultMode = PlanMode::FullyOptimized;
  std::size_t perEntryBytes = 40;
  std::optional<std::chrono::microseconds> periodOverride;
};

struct ExecutionStats {
  std::string channel;
  PlanMode mode = PlanMode::Original;
  std::size_t parallelism = 1;
  Timestamp windowStart = 0;
  Timestamp windowEnd = 0;
  double wallTimeMs = 0;
  std::size_t recordsScanned = 0;  // records of the windowed dataset read by the access path
  std::size_t candidateRows = 0;   // data-side rows entering the subscription join
  std::size_t framesProduced = 0;
  std::size_t joinRows = 0;
  std::size_t resultsCount = 0;  // delivered (subscription, record) pairs
  std::size_t groupsDelivered = 0;
  double deliveryMs = 0;
  std::size_t bytesDelivered = 0;
  std::size_t subscribersNotified = 0;
  bool overrun = false;
  std::vector<std::string> warnings;
};

nlohmann::json to_json(const ExecutionStats& stats);

struct ExecutionResult {
  ChannelResultBatch batch;
  ExecutionStats stats;
};

struct ChannelOptions {
  std::optional<PlanMode> mode;
  std::optional<Timestamp> startTs;  // first window opens here; defaults to the clock
  std::optional<std::size_t> fixedGroupSize;
  std::optional<std::size_t> parallelism;
};

struct ChannelInfo {
  ChannelDefinition definition;
  PlanMode mode;
  Timestamp lastExecTs;
  std::size_t parallelism;
  std::chrono::microseconds period;
  std::string windowedAlias;  // the alias under is_new, else the first alias
  bool windowed;
  bool hasBadIndex;
  std::optional<std::string> valueIndexPredicate;  // fixed predicate served by the value index
};

struct PeriodicOptions {
  bool deliver = true;
  // Called after every execution, e.g. to stream stats.
  std::function<void(const ExecutionResult&)> onExecution;
};

class Engine {
 public:
  explicit Engine(EngineConfig config = {}, std::shared_ptr<Clock> clock = nullptr);
  ~Engine();
  Engine(const Engine&) = delete;
  Engine& operator=(const Engine&) = delete;

  const EngineConfig& config() const { return config_; }
  Clock& clock() { return *clock_; }
  BrokerRegistry& brokers() { return brokers_; }

  Dataset& create_dataset(const std::string& name, Schema schema);
  Dataset& dataset(std::string_view name);
  // Stamps the record with the engine clock and inserts it.
  std::vector<std::string> ingest(std::string_view dataset, Record rec);

  void register_channel(const ChannelDefinition& def, const ChannelOptions& options = {});
  void drop_channel(std::string_view name);
  bool has_channel(std::string_view name) const;
  ChannelInfo channel(std::string_view name) const;
  std::vector<std::string> channel_names() const;
  bool mode_available(std::string_view name, PlanMode mode) const;
  void set_mode(std::string_view name, PlanMode mode);
  void set_parallelism(std::string_view name, std::size_t parallelism);
  // Chooses which fixed predicate the TraditionalIndex plan reads through a value index. Without
  // a pin the predicate with the fewest matches over the stored records is used.
  void pin_value_index(std::string_view name, std::size_t fixedPredicate);
  // Rebuilds the groups with a forced capacity (or the frame-derived one when empty).
  void set_group_size(std::string_view name, std::optional<std::size_t> fixedGroupSize);

  SubscriptionId subscribe(const SubscribeStatement& stmt);
  SubscriptionId subscribe(std::string_view channel, ParamTuple params, const std::string& broker,
                           std::optional<SubscriptionId> id = {});
  void unsubscribe(std::string_view channel, SubscriptionId id);
  ChannelSubscriptions& subscriptions(std::string_view channel);
  std::vector<SubscriptionGroup> groups_for(std::string_view channel);
  std::vector<UserParametersEntry> user_parameters(std::string_view channel);

  // Evaluates the channel over (since, until] without advancing it.
  ExecutionResult evaluate(std::string_view name, Timestamp since, Timestamp until,
                           std::optional<PlanMode> mode = {});
  // Evaluates (lastExecTs, nowTs] and advances lastExecTs to nowTs.
  ExecutionResult execute_channel(std::string_view name, Timestamp nowTs);
  // Runs `executions` executions at consecutive period boundaries, delivering each batch.
  // A virtual clock is advanced to each boundary; a wall clock is waited on.
  std::vector<ExecutionStats> run_periodic(std::string_view name, std::size_t executions,
                                           const PeriodicOptions& options = {});

 private:
  struct Channel;
  Channel& find_channel(std::string_view name);
  const Channel& find_channel(std::string_view name) const;
  void ensure_value_index(Channel& ch);

  EngineConfig config_;
  std::shared_ptr<Clock> clock_;
  BrokerRegistry brokers_;
  std::map<std::string, std::unique_ptr<Dataset>, std::less<>> datasets_;
  std::map<std::string, std::unique_ptr<Channel>, std::less<>> channels_;
  SubscriptionId nextSubscriptionId_ = 1;
};

}  // namespace bad
