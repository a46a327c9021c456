#include "bad/subscriptions.hpp"

#include <algorithm>

#include "bad/error.hpp"

namespace bad {

std::size_t acceptable_group_size(const GroupCapacityPolicy& policy) {
  if (policy.perEntryBytes == 0) throw Error(ErrorKind::InvalidPolicy, "perEntryBytes must be positive");
  if (policy.frameSize <= policy.headerBytes) {
    throw Error(ErrorKind::InvalidPolicy, "frame size " + std::to_string(policy.frameSize) +
                                              " does not exceed the group header of " +
                                              std::to_string(policy.headerBytes) + " bytes");
  }
  return std::max<std::size_t>(1, (policy.frameSize - policy.headerBytes) / policy.perEntryBytes);
}

std::size_t group_header_bytes(std::string_view paramKey, std::string_view broker) {
  return 4 + 8 + 2 + 4 + paramKey.size() + 4 + broker.size() + 4;
}

void serialize_group(GroupId id, std::string_view paramKey, std::string_view broker,
                     std::span<const SubscriptionId> ids, std::size_t entryBytes, Bytes& out) {
  auto start = out.size();
  ByteWriter w(out);
  w.put<std::uint32_t>(0);
  w.put<std::uint64_t>(id);
  w.put<std::uint16_t>(static_cast<std::uint16_t>(entryBytes));
  w.put_string(paramKey);
  w.put_string(broker);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(ids.size()));
  for (auto sid : ids) {
    w.put<std::uint64_t>(sid);
    w.put_zeros(entryBytes - 8);
  }
  w.patch_u32(start, static_cast<std::uint32_t>(out.size() - start));
}

GroupView::GroupView(ByteSpan bytes) {
  ByteReader r(bytes);
  r.skip(4);
  groupId_ = r.get<std::uint64_t>();
  entryBytes_ = r.get<std::uint16_t>();
  key_ = r.get_string();
  broker_ = r.get_string();
  count_ = r.get<std::uint32_t>();
  entries_ = bytes.data() + r.position();
}

void serialize_subscription(SubscriptionId id, std::string_view paramKey, std::string_view broker, Bytes& out) {
  auto start = out.size();
  ByteWriter w(out);
  w.put<std::uint32_t>(0);
  w.put<std::uint64_t>(id);
  w.put_string(paramKey);
  w.put_string(broker);
  w.patch_u32(start, static_cast<std::uint32_t>(out.size() - start));
}

SubscriptionView::SubscriptionView(ByteSpan bytes) {
  ByteReader r(bytes);
  r.skip(4);
  id_ = r.get<std::uint64_t>();
  key_ = r.get_string();
  broker_ = r.get_string();
}

ChannelSubscriptions::ChannelSubscriptions(SubscriptionConfig config, BrokerCheck brokerKnown)
    : config_(std::move(config)), brokerKnown_(std::move(brokerKnown)) {
  if (config_.perEntryBytes < 8 || config_.perEntryBytes > 0xffff) {
    throw Error(ErrorKind::InvalidPolicy, "perEntryBytes must be in [8, 65535]");
  }
  if (config_.fixedGroupSize && *config_.fixedGroupSize == 0) {
    throw Error(ErrorKind::InvalidPolicy, "fixed group size must be positive");
  }
}

std::string ChannelSubscriptions::group_key(const std::string& paramKey, std::string_view broker) const {
  std::string k = paramKey;
  k.push_back('\0');
  k.append(broker);
  return k;
}

GroupCapacityPolicy ChannelSubscriptions::policy_for(const ParamTuple& params, std::string_view broker) const {
  GroupCapacityPolicy p;
  p.frameSize = config_.frameSize;
  p.perEntryBytes = config_.perEntryBytes;
  p.headerBytes = group_header_bytes(encode_key(params), broker);
  p.acceptableGroupSize = config_.fixedGroupSize ? *config_.fixedGroupSize : acceptable_group_size(p);
  return p;
}

std::size_t ChannelSubscriptions::capacity_for(const std::string& paramKey, std::string_view broker) const {
  if (config_.fixedGroupSize) return *config_.fixedGroupSize;
  GroupCapacityPolicy p{config_.frameSize, config_.perEntryBytes, group_header_bytes(paramKey, broker), 0};
  return acceptable_group_size(p);
}

GroupId ChannelSubscriptions::add(const Subscription& sub) {
  if (sub.params.size() != config_.arity) {
    throw Error(ErrorKind::ArityMismatch, "subscription " + std::to_string(sub.id) + " has " +
                                              std::to_string(sub.params.size()) + " parameters, channel takes " +
                                              std::to_string(config_.arity));
  }
  if (owner_.count(sub.id)) throw Error(ErrorKind::DuplicateSubscription, "subscription " + std::to_string(sub.id));
  if (brokerKnown_ && !brokerKnown_(sub.broker)) throw Error(ErrorKind::UnknownBroker, sub.broker);

  auto paramKey = encode_key(sub.params);
  auto key = group_key(paramKey, sub.broker);
  auto& open = notFull_[key];
  GroupId gid;
  if (!open.empty()) {
    gid = *open.begin();
    auto& g = groups_.at(gid);
    g.ids.push_back(sub.id);
    if (g.ids.size() >= g.capacity) open.erase(open.begin());
  } else {
    gid = nextGroup_++;
    Group g{paramKey, sub.broker, {sub.id}, capacity_for(paramKey, sub.broker)};
    if (g.ids.size() < g.capacity) open.insert(gid);
    groups_.emplace(gid, std::move(g));
  }
  owner_.emplace(sub.id, gid);
  ++userParameters_[paramKey];
  snapshot_.reset();
  return gid;
}

void ChannelSubscriptions::remove(SubscriptionId id) {
  auto it = owner_.find(id);
  if (it == owner_.end()) throw Error(ErrorKind::UnknownSubscription, "subscription " + std::to_string(id));
  auto gid = it->second;
  owner_.erase(it);
  auto& g = groups_.at(gid);
  g.ids.erase(std::find(g.ids.begin(), g.ids.end(), id));
  auto key = group_key(g.paramKey, g.broker);
  auto up = userParameters_.find(g.paramKey);
  if (--up->second == 0) userParameters_.erase(up);
  if (g.ids.empty()) {
    notFull_[key].erase(gid);
    if (notFull_[key].empty()) notFull_.erase(key);
    groups_.erase(gid);
  } else {
    notFull_[key].insert(gid);
  }
  snapshot_.reset();
}

std::vector<SubscriptionGroup> ChannelSubscriptions::groups() const {
  std::vector<SubscriptionGroup> out;
  out.reserve(groups_.size());
  for (const auto& [gid, g] : groups_) {
    SubscriptionGroup sg;
    sg.groupId = gid;
    sg.params = decode_key(g.paramKey);
    sg.broker = g.broker;
    sg.subIds = g.ids;
    sg.serializedSize = group_header_bytes(g.paramKey, g.broker) + g.ids.size() * config_.perEntryBytes;
    out.push_back(std::move(sg));
  }
  return out;
}

std::vector<UserParametersEntry> ChannelSubscriptions::user_parameters() const {
  std::vector<UserParametersEntry> out;
  out.reserve(userParameters_.size());
  for (const auto& [key, count] : userParameters_) out.push_back({decode_key(key), count});
  return out;
}

std::optional<GroupId> ChannelSubscriptions::group_of(SubscriptionId id) const {
  auto it = owner_.find(id);
  if (it == owner_.end()) return std::nullopt;
  return it->second;
}

std::shared_ptr<const SubscriptionSnapshot> ChannelSubscriptions::snapshot() {
  if (snapshot_) return snapshot_;
  auto snap = std::make_shared<SubscriptionSnapshot>();
  snap->frameSize = config_.frameSize;
  snap->groupCount = groups_.size();
  snap->subscriptionCount = owner_.size();

  Bytes groupBytes, subBytes;
  std::vector<std::size_t> groupEnds, subEnds;
  for (const auto& [gid, g] : groups_) {
    serialize_group(gid, g.paramKey, g.broker, g.ids, config_.perEntryBytes, groupBytes);
    groupEnds.push_back(groupBytes.size());
  }
  std::vector<std::pair<SubscriptionId, const Group*>> members;
  members.reserve(owner_.size());
  for (const auto& [gid, g] : groups_) {
    for (auto sid : g.ids) members.emplace_back(sid, &g);
  }
  std::sort(members.begin(), members.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  for (const auto& [sid, g] : members) {
    serialize_subscription(sid, g->paramKey, g->broker, subBytes);
    subEnds.push_back(subBytes.size());
  }

  auto split = [](const Bytes& bytes, const std::vector<std::size_t>& ends) {
    std::vector<ByteSpan> spans;
    spans.reserve(ends.size());
    std::size_t begin = 0;
    for (auto e : ends) {
      spans.emplace_back(bytes.data() + begin, e - begin);
      begin = e;
    }
    return spans;
  };
  snap->groupFrames = pack_frames(split(groupBytes, groupEnds), config_.frameSize);
  snap->subscriptionFrames = pack_frames(split(subBytes, subEnds), config_.frameSize);
  for (const auto& f : snap->groupFrames) {
    f.for_each([&](ByteSpan t) {
      GroupView g(t);
      snap->groupsByKey[std::string(g.key())].push_back(t);
      snap->groupById.emplace(g.group_id(), t);
    });
  }
  for (const auto& f : snap->subscriptionFrames) {
    f.for_each([&](ByteSpan t) {
      SubscriptionView v(t);
      snap->subscriptionsByKey[std::string(v.key())].push_back(t);
      snap->subscriptionById.emplace(v.id(), t);
    });
  }
  for (const auto& [key, count] : userParameters_) snap->userParameters.emplace(key, count);
  snapshot_ = std::move(snap);
  return snapshot_;
}

}  // namespace bad
