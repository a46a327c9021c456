#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "bad/frame.hpp"
#include "bad/serialize.hpp"
#include "bad/value.hpp"

namespace bad {

using SubscriptionId = std::uint64_t;
using GroupId = std::uint64_t;

struct Subscription {
  SubscriptionId id = 0;
  ParamTuple params;
  std::string broker;
};

struct GroupCapacityPolicy {
  std::size_t frameSize = 0;
  std::size_t perEntryBytes = 0;
  std::size_t headerBytes = 0;
  std::size_t acceptableGroupSize = 1;
};

// max(1, floor((frameSize - headerBytes) / perEntryBytes)): the largest member count whose
// serialized group record still fits one frame.
std::size_t acceptable_group_size(const GroupCapacityPolicy& policy);

struct SubscriptionGroup {
  GroupId groupId = 0;
  ParamTuple params;
  std::string broker;
  std::vector<SubscriptionId> subIds;
  std::size_t serializedSize = 0;
};

struct UserParametersEntry {
  ParamTuple params;
  std::size_t subscriberCount = 0;
  friend bool operator==(const UserParametersEntry&, const UserParametersEntry&) = default;
};

// Group record layout: u32 size | u64 groupId | u16 entryBytes | u32 keyLen | key | u32 brokerLen |
// broker | u32 count | count fixed-width entries (u64 id, zero padded to entryBytes).
std::size_t group_header_bytes(std::string_view paramKey, std::string_view broker);
void serialize_group(GroupId id, std::string_view paramKey, std::string_view broker,
                     std::span<const SubscriptionId> ids, std::size_t entryBytes, Bytes& out);

class GroupView {
 public:
  explicit GroupView(ByteSpan bytes);
  GroupId group_id() const { return groupId_; }
  std::string_view key() const { return key_; }
  std::string_view broker() const { return broker_; }
  std::size_t count() const { return count_; }
  SubscriptionId id(std::size_t i) const { return load<std::uint64_t>(entries_ + i * entryBytes_); }

 private:
  GroupId groupId_ = 0;
  std::size_t entryBytes_ = 8;
  std::string_view key_;
  std::string_view broker_;
  std::size_t count_ = 0;
  const std::uint8_t* entries_ = nullptr;
};

// Ungrouped subscription record: u32 size | u64 id | u32 keyLen | key | u32 brokerLen | broker.
void serialize_subscription(SubscriptionId id, std::string_view paramKey, std::string_view broker, Bytes& out);

class SubscriptionView {
 public:
  explicit SubscriptionView(ByteSpan bytes);
  SubscriptionId id() const { return id_; }
  std::string_view key() const { return key_; }
  std::string_view broker() const { return broker_; }

 private:
  SubscriptionId id_ = 0;
  std::string_view key_;
  std::string_view broker_;
};

struct StringHash {
  using is_transparent = void;
  std::size_t operator()(std::string_view s) const { return std::hash<std::string_view>{}(s); }
};

template <class V>
using StringMap = std::unordered_map<std::string, V, StringHash, std::equal_to<>>;

// Point-in-time image of a channel's subscription state, read by channel executions. Both the
// grouped and the ungrouped subscription datasets are materialized as frames so that every plan
// mode can be run against the same state.
struct SubscriptionSnapshot {
  std::size_t frameSize = 0;
  std::vector<Frame> groupFrames;
  std::vector<Frame> subscriptionFrames;
  StringMap<std::vector<ByteSpan>> groupsByKey;
  StringMap<std::vector<ByteSpan>> subscriptionsByKey;
  StringMap<std::size_t> userParameters;
  std::unordered_map<GroupId, ByteSpan> groupById;
  std::unordered_map<SubscriptionId, ByteSpan> subscriptionById;
  std::size_t groupCount = 0;
  std::size_t subscriptionCount = 0;
};

struct SubscriptionConfig {
  std::size_t arity = 0;
  std::size_t frameSize = 32 * 1024;
  std::size_t perEntryBytes = 40;
  // Forces every group to this capacity instead of deriving it from the frame size (used by the
  // subgroup-size sweep).
  std::optional<std::size_t> fixedGroupSize;
};

// Subscription state of one channel: the grouped records, the UserParameters counts and an index
// from subscription id to its group. Single writer; readers use snapshot().
class ChannelSubscriptions {
 public:
  using BrokerCheck = std::function<bool(std::string_view)>;

  explicit ChannelSubscriptions(SubscriptionConfig config, BrokerCheck brokerKnown = {});

  // Appends to the first group (creation order) with the same params and broker that is below
  // capacity, otherwise opens a new group.
  GroupId add(const Subscription& sub);
  void remove(SubscriptionId id);

  bool contains(SubscriptionId id) const { return owner_.count(id) != 0; }
  std::size_t size() const { return owner_.size(); }
  std::size_t group_count() const { return groups_.size(); }
  const SubscriptionConfig& config() const { return config_; }

  GroupCapacityPolicy policy_for(const ParamTuple& params, std::string_view broker) const;
  std::vector<SubscriptionGroup> groups() const;
  std::vector<UserParametersEntry> user_parameters() const;
  std::optional<GroupId> group_of(SubscriptionId id) const;

  // Cached until the next mutation.
  std::shared_ptr<const SubscriptionSnapshot> snapshot();

 private:
  struct Group {
    std::string paramKey;
    std::string broker;
    std::vector<SubscriptionId> ids;
    std::size_t capacity = 1;
  };

  std::string group_key(const std::string& paramKey, std::string_view broker) const;
  std::size_t capacity_for(const std::string& paramKey, std::string_view broker) const;

  SubscriptionConfig config_;
  BrokerCheck brokerKnown_;
  GroupId nextGroup_ = 1;
  std::map<GroupId, Group> groups_;
  std::unordered_map<std::string, std::set<GroupId>> notFull_;
  std::unordered_map<SubscriptionId, GroupId> owner_;
  std::map<std::string, std::size_t> userParameters_;
  std::shared_ptr<const SubscriptionSnapshot> snapshot_;
};

}  // namespace bad
