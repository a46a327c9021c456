#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "json.hpp"

#include "bad/batch.hpp"
#include "bad/record.hpp"
#include "bad/subscriptions.hpp"

namespace bad {

// Points travel as [x, y].
nlohmann::json to_json(const Value& v);
Value value_from_json(const nlohmann::json& j);

// Records as {"pk":..., "<field>":...}; nested paths are kept as dotted keys.
nlohmann::json record_to_json(const Record& rec, const Schema& schema);
Record record_from_json(const nlohmann::json& j, const Schema& schema);

struct SubscriptionRequest {
  std::string channel;
  ParamTuple params;
  std::string broker;
  std::optional<SubscriptionId> id;
};
SubscriptionRequest subscription_from_json(const nlohmann::json& j);

// Reads newline-delimited JSON, skipping blank lines. Throws IoError with the line number.
std::vector<nlohmann::json> read_ndjson(std::istream& in);

// Wire message for one delivery group:
// {"channel","executionTs","results":[{"pk","record"}...],"subIds":[...]} with sorted keys.
std::string wire_message(const ChannelResultBatch& batch, const DeliveryGroup& group);
std::string wire_message(const std::string& channel, Timestamp executionTs, const std::vector<std::string>& fields,
                         const std::vector<SubscriptionId>& ids, const std::vector<const ResultRow*>& results);

}  // namespace bad
