#pragma once

#include <compare>
#include <optional>
#include <string>
#include <vector>

#include "bad/record.hpp"
#include "bad/subscriptions.hpp"

namespace bad {

// One projected channel result. `pk` identifies the record of the windowed dataset; `joinPk` the
// matching record of the second dataset in a two-dataset channel.
struct ResultRow {
  PrimaryKey pk = 0;
  std::optional<PrimaryKey> joinPk;
  std::uint64_t seq = 0;
  std::vector<Value> values;
};

struct DeliveryGroup {
  std::string broker;
  std::optional<GroupId> groupId;  // absent when delivered per subscription
  std::vector<SubscriptionId> subscriptionIds;
  Timestamp deliveryTime = 0;
  std::vector<std::uint32_t> payload;  // indexes into ChannelResultBatch::rows, in arrival order
};

struct DeliveryPair {
  SubscriptionId sub = 0;
  PrimaryKey pk = 0;
  PrimaryKey joinPk = 0;
  friend auto operator<=>(const DeliveryPair&, const DeliveryPair&) = default;
};

struct ChannelResultBatch {
  std::string channel;
  Timestamp executionTs = 0;
  std::vector<std::string> fields;  // projection names, one per ResultRow value
  std::vector<ResultRow> rows;
  std::vector<DeliveryGroup> perGroup;

  bool empty() const { return perGroup.empty(); }
  std::size_t pair_count() const;
  // Sorted (subscription, record) pairs, the plan-independent content of the batch.
  std::vector<DeliveryPair> delivery_pairs() const;
};

}  // namespace bad
